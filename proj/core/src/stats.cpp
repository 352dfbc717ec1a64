#include "quietclock/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "quietclock/errors.hpp"

namespace quietclock {

double RunLedger::imbalance() const { return input_total - dissipated_total - stored_delta; }

double RunLedger::relative_imbalance() const {
  if (input_total == 0.0) return std::fabs(imbalance());
  return std::fabs(imbalance()) / std::fabs(input_total);
}

RunLedger ledger(const DissipationSeries& series, double input_per_period) {
  RunLedger out;
  if (series.n == 0) return out;
  CompensatedSum dissipated;
  for (const DissipationEvent& e : series.events) dissipated += e.mark;
  out.input_total = static_cast<double>(series.n) * input_per_period;
  out.dissipated_total = dissipated.value();
  out.stored_delta = series.final_state.e - series.initial_state.e;
  return out;
}

RunLedger ledger(const DissipationSeries& series) {
  RunLedger out = ledger(series, 0.0);
  out.input_total = series.input_total;
  return out;
}

CountingStats fano_factor(std::span<const std::uint64_t> event_periods, std::uint64_t window,
                          std::uint64_t n) {
  if (window == 0) throw ConfigError("counting window must be >= 1 period");
  const std::uint64_t windows = n / window;
  if (windows < 10) {
    throw ConfigError("counting window of " + std::to_string(window) + " leaves only " +
                      std::to_string(windows) + " windows in " + std::to_string(n) +
                      " periods; need at least 10");
  }
  std::vector<std::uint64_t> counts(windows, 0);
  for (std::uint64_t k : event_periods) {
    const std::uint64_t idx = k / window;
    if (idx < windows) ++counts[idx];
  }
  CompensatedSum sum;
  for (std::uint64_t c : counts) sum += static_cast<double>(c);
  const double mean = sum.value() / static_cast<double>(windows);
  CompensatedSum sq;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - mean;
    sq += d * d;
  }
  CountingStats out{window, windows, mean, sq.value() / static_cast<double>(windows - 1), 0.0};
  out.fano = mean > 0.0 ? out.var_count / mean : 0.0;
  return out;
}

CountingStats fano_factor(const DissipationSeries& series, std::uint64_t window) {
  std::vector<std::uint64_t> periods;
  periods.reserve(series.events.size());
  for (const DissipationEvent& e : series.events) periods.push_back(e.k - series.initial_state.k);
  return fano_factor(periods, window, series.n);
}

FanoAccumulator::FanoAccumulator(std::uint64_t window) : window_(window) {
  if (window == 0) throw ConfigError("counting window must be >= 1 period");
}

CountingStats FanoAccumulator::result() const {
  if (counts_.count() < 10) {
    throw ConfigError("counting window of " + std::to_string(window_) + " completed only " +
                      std::to_string(counts_.count()) + " windows; need at least 10");
  }
  CountingStats out{window_, counts_.count(), counts_.mean(), counts_.variance(), 0.0};
  out.fano = out.mean_count > 0.0 ? out.var_count / out.mean_count : 0.0;
  return out;
}

EventStatsAccumulator::EventStatsAccumulator(std::uint64_t histogram_bin_width)
    : bin_width_(histogram_bin_width) {
  if (bin_width_ == 0) throw ConfigError("histogram bin width must be >= 1");
}

void EventStatsAccumulator::add(const DissipationEvent& event) {
  if (marks_.count() == 0) {
    min_mark_ = max_mark_ = event.mark;
  } else {
    min_mark_ = std::min(min_mark_, event.mark);
    max_mark_ = std::max(max_mark_, event.mark);
  }
  marks_.add(event.mark);

  if (have_last_) {
    const std::uint64_t gap = event.k - last_k_;
    gap_moments_.add(static_cast<double>(gap));
    const std::uint64_t bin = gap / bin_width_;
    if (bin < kMaxHistogramBins) {
      if (bin >= histogram_.size()) histogram_.resize(bin + 1, 0);
      ++histogram_[bin];
    } else {
      ++overflow_;
    }

    ++pairs_;
    const double g = static_cast<double>(gap);
    const double dg = g - pair_gap_mean_;
    const double dm = event.mark - pair_mark_mean_;
    pair_gap_mean_ += dg / static_cast<double>(pairs_);
    pair_mark_mean_ += dm / static_cast<double>(pairs_);
    c_gg_ += dg * (g - pair_gap_mean_);
    c_mm_ += dm * (event.mark - pair_mark_mean_);
    c_gm_ += dg * (event.mark - pair_mark_mean_);
  }
  have_last_ = true;
  last_k_ = event.k;
}

GapStats EventStatsAccumulator::gaps() const {
  if (marks_.count() < 2) throw ConfigError("inter-event statistics need at least 2 events");
  return {gap_moments_.count(), gap_moments_.mean(), gap_moments_.variance(), bin_width_,
          histogram_, overflow_};
}

MarkStats EventStatsAccumulator::marks() const {
  if (marks_.count() == 0) throw ConfigError("mark statistics need at least 1 event");
  return {marks_.count(), marks_.mean(), marks_.variance(), min_mark_, max_mark_};
}

double EventStatsAccumulator::gap_mark_correlation() const {
  if (pairs_ < 2 || c_gg_ <= 0.0 || c_mm_ <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return c_gm_ / std::sqrt(c_gg_ * c_mm_);
}

GapStats interevent_stats(std::span<const DissipationEvent> events,
                          std::uint64_t histogram_bin_width) {
  EventStatsAccumulator acc(histogram_bin_width);
  for (const DissipationEvent& e : events) acc.add(e);
  return acc.gaps();
}

MarkStats mark_stats(std::span<const DissipationEvent> events) {
  EventStatsAccumulator acc;
  for (const DissipationEvent& e : events) acc.add(e);
  return acc.marks();
}

double gap_mark_correlation(std::span<const DissipationEvent> events) {
  EventStatsAccumulator acc;
  for (const DissipationEvent& e : events) acc.add(e);
  return acc.gap_mark_correlation();
}

}  // namespace quietclock
