#pragma once

// Energy bookkeeping and counting statistics over event streams.
//
// Every statistic has a streaming accumulator (used by the runner on runs too
// long to hold in memory) and a batch function over a materialized series.

#include <cstdint>
#include <span>
#include <vector>

#include "quietclock/model.hpp"
#include "quietclock/summation.hpp"

namespace quietclock {

struct RunLedger {
  double input_total = 0.0;
  double dissipated_total = 0.0;
  double stored_delta = 0.0;

  // input - dissipated - stored; zero up to rounding.
  [[nodiscard]] double imbalance() const;
  // |imbalance| / input_total (0 for an empty run).
  [[nodiscard]] double relative_imbalance() const;
};

// Constant-input ledger: input_total = n * input_per_period.
RunLedger ledger(const DissipationSeries& series, double input_per_period);
// Realized-input ledger, valid for every model (Poisson input follows its output).
RunLedger ledger(const DissipationSeries& series);

class LedgerAccumulator {
 public:
  explicit LedgerAccumulator(double initial_stored = 0.0) : initial_(initial_stored) {}

  void add(const PeriodOutput& out) {
    input_ += out.input;
    dissipated_ += out.sample;
  }

  [[nodiscard]] RunLedger result(double final_stored) const {
    return {input_.value(), dissipated_.value(), final_stored - initial_};
  }

 private:
  double initial_;
  CompensatedSum input_;
  CompensatedSum dissipated_;
};

// Running mean and unbiased variance.
class Moments {
 public:
  void add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  [[nodiscard]] std::uint64_t count() const { return count_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] double variance() const {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct CountingStats {
  std::uint64_t window = 0;   // periods per counting window
  std::uint64_t windows = 0;  // number of disjoint windows used
  double mean_count = 0.0;
  double var_count = 0.0;  // unbiased
  double fano = 0.0;       // var / mean, 0 when no events at all
};

// Counts events in the disjoint windows [i W, (i+1) W), i < floor(n / W).
// Requires W >= 1 and at least 10 windows.
CountingStats fano_factor(std::span<const std::uint64_t> event_periods, std::uint64_t window,
                          std::uint64_t n);
CountingStats fano_factor(const DissipationSeries& series, std::uint64_t window);

class FanoAccumulator {
 public:
  explicit FanoAccumulator(std::uint64_t window);

  // Call once per period, in order.
  void add_period(std::uint64_t events) {
    current_ += events;
    if (++filled_ == window_) {
      counts_.add(static_cast<double>(current_));
      current_ = 0;
      filled_ = 0;
    }
  }

  [[nodiscard]] std::uint64_t window() const { return window_; }
  [[nodiscard]] std::uint64_t windows() const { return counts_.count(); }
  // Throws ConfigError with fewer than 10 complete windows.
  [[nodiscard]] CountingStats result() const;

 private:
  std::uint64_t window_;
  std::uint64_t current_ = 0;
  std::uint64_t filled_ = 0;
  Moments counts_;
};

struct GapStats {
  std::uint64_t gaps = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  std::uint64_t bin_width = 1;
  std::vector<std::uint64_t> histogram;  // histogram[b] counts gaps in [b w, (b+1) w)
  std::uint64_t overflow = 0;            // gaps beyond the last histogram bin
};

struct MarkStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, 0 for a single event
  double min = 0.0;
  double max = 0.0;
};

// Gap, mark and gap-mark statistics of an event stream fed in time order.
class EventStatsAccumulator {
 public:
  static constexpr std::size_t kMaxHistogramBins = std::size_t{1} << 20;

  explicit EventStatsAccumulator(std::uint64_t histogram_bin_width = 10);

  void add(const DissipationEvent& event);

  [[nodiscard]] std::uint64_t events() const { return marks_.count(); }
  [[nodiscard]] GapStats gaps() const;    // throws ConfigError with < 2 events
  [[nodiscard]] MarkStats marks() const;  // throws ConfigError with no events
  // Pearson coefficient between each gap and the mark of the event closing it.
  [[nodiscard]] double gap_mark_correlation() const;

 private:
  std::uint64_t bin_width_;
  bool have_last_ = false;
  std::uint64_t last_k_ = 0;
  Moments gap_moments_;
  std::vector<std::uint64_t> histogram_;
  std::uint64_t overflow_ = 0;
  Moments marks_;
  double min_mark_ = 0.0;
  double max_mark_ = 0.0;
  // Co-moments of (gap, closing mark).
  std::uint64_t pairs_ = 0;
  double pair_gap_mean_ = 0.0;
  double pair_mark_mean_ = 0.0;
  double c_gg_ = 0.0;
  double c_mm_ = 0.0;
  double c_gm_ = 0.0;
};

GapStats interevent_stats(std::span<const DissipationEvent> events,
                          std::uint64_t histogram_bin_width = 10);
MarkStats mark_stats(std::span<const DissipationEvent> events);
double gap_mark_correlation(std::span<const DissipationEvent> events);

}  // namespace quietclock
