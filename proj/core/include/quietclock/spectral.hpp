#pragma once

// Spectral density of the dissipated-power sequence.
//
// Convention: for a segment of length M with window h_k,
//
//   S(Omega_j) = | sum_k h_k (P_k - mean) exp(-i Omega_j k) |^2 / sum_k h_k^2,
//   Omega_j = 2 pi j / M,  j = 1..M/2,
//
// averaged over non-overlapping segments. White noise of per-sample variance
// sigma^2 has S = sigma^2, and a Bernoulli(p) stream of marks m sits at
// m^2 p (1 - p). The clock spectrum rises from zero at Omega = 0 to the
// shot-noise plateau delta^2 / p with a corner at Omega = p w.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "quietclock/fft.hpp"
#include "quietclock/model.hpp"

namespace quietclock {

enum class Window { rectangular, hann };

std::string_view to_string(Window window);
Window parse_window(std::string_view text);

struct PsdEstimate {
  // Log-binned estimates keep one Band per value; raw estimates leave it empty.
  struct Band {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 0;
  };

  std::vector<double> freqs;   // angular frequency, rad/period, strictly increasing
  std::vector<double> values;  // J^2 * period
  std::size_t segments = 0;
  std::size_t segment_len = 0;
  Window window = Window::rectangular;
  double dc = 0.0;  // the j = 0 term (raw estimates only)
  std::vector<Band> bands;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] bool empty() const { return values.empty(); }
};

double analytic_psd(double delta, double p, double w, double omega);
double analytic_psd(const ClockParams& params, double omega);

// Same grid and bookkeeping as `grid`, values replaced by the analytic curve.
PsdEstimate analytic_on_grid(const ClockParams& params, const PsdEstimate& grid);

// Segment-averaged periodogram fed one sample at a time. Memory is O(M).
// `mean` is subtracted from every sample; pass the known process mean when
// streaming, or the global sample mean from a first pass.
class PsdEstimator {
 public:
  PsdEstimator(std::size_t segment_len, Window window, double mean);

  void push(double sample) {
    buffer_[fill_] = (sample - mean_) * taper_[fill_];
    if (++fill_ == segment_len_) flush_segment();
  }
  void push(std::span<const double> samples) {
    for (double x : samples) push(x);
  }

  [[nodiscard]] std::size_t segments() const { return segments_; }
  [[nodiscard]] std::size_t segment_len() const { return segment_len_; }

  // Throws std::length_error until at least one full segment has been pushed.
  [[nodiscard]] PsdEstimate result() const;

 private:
  void flush_segment();

  std::size_t segment_len_;
  Window window_;
  double mean_;
  std::vector<double> taper_;
  double taper_energy_ = 0.0;
  std::vector<double> buffer_;
  std::size_t fill_ = 0;
  std::vector<double> power_;
  std::vector<double> accum_;
  std::size_t segments_ = 0;
  RealFft fft_;
};

// Mean of the first floor(n / M) * M samples, i.e. of the part that is
// segmented; the remainder is ignored by every estimator.
double segmented_mean(std::span<const double> samples, std::size_t segment_len);

PsdEstimate estimate_psd(std::span<const double> samples, std::size_t segment_len,
                         Window window = Window::rectangular);

// Direct O(M^2) evaluation of the same estimator. Test oracle; limited to
// M <= 2^14 and n <= 2^22.
PsdEstimate brute_force_psd(std::span<const double> samples, std::size_t segment_len,
                            Window window = Window::rectangular);

// Average over ten-per-decade style logarithmic bands. Band b covers
// [10^(b/k), 10^((b+1)/k)); its frequency is the geometric mean of the member
// frequencies and its value the arithmetic mean of the member values.
PsdEstimate log_bin(const PsdEstimate& est, int bins_per_decade);

// Variance recovered from a raw rectangular-window estimate through Parseval:
// (dc + 2 sum_{0<j<M/2} S_j + S_{M/2}) / M.
double parseval_variance(const PsdEstimate& est);

// Mean of the estimate over omega in [lo, hi]; NaN when no point falls inside.
double band_mean(const PsdEstimate& est, double lo, double hi);

struct CornerFit {
  double plateau = 0.0;  // high-frequency level A
  double corner = 0.0;   // Omega_c
};

// Least-squares fit of S = A / (1 + (Omega_c / Omega)^2) over points with
// omega <= omega_max, linear in 1/S versus 1/Omega^2 and weighted so that the
// residuals are relative errors. Throws std::domain_error on degenerate data.
CornerFit fit_corner(const PsdEstimate& est, double omega_max = 1.0);

}  // namespace quietclock
