#include "quietclock/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "quietclock/errors.hpp"
#include "quietclock/summation.hpp"

namespace quietclock {

namespace {

void check_segmentation(std::size_t n, std::size_t segment_len) {
  if (segment_len < 2 || !is_power_of_two(segment_len)) {
    throw ConfigError("segment length must be a power of two >= 2, got " +
                      std::to_string(segment_len));
  }
  if (n < segment_len) {
    throw ConfigError("series of " + std::to_string(n) + " samples is shorter than one segment of " +
                      std::to_string(segment_len));
  }
}

// Periodic Hann, h_k = sin^2(pi k / M).
std::vector<double> make_taper(std::size_t m, Window window) {
  std::vector<double> taper(m, 1.0);
  if (window == Window::hann) {
    for (std::size_t k = 0; k < m; ++k) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(k) / static_cast<double>(m));
      taper[k] = s * s;
    }
  }
  return taper;
}

double omega_at(std::size_t j, std::size_t m) {
  return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
}

PsdEstimate shell(std::size_t m, Window window, std::size_t segments) {
  PsdEstimate est;
  est.segment_len = m;
  est.window = window;
  est.segments = segments;
  est.freqs.resize(m / 2);
  for (std::size_t j = 1; j <= m / 2; ++j) est.freqs[j - 1] = omega_at(j, m);
  est.values.assign(m / 2, 0.0);
  return est;
}

}  // namespace

std::string_view to_string(Window window) {
  return window == Window::hann ? "hann" : "rectangular";
}

Window parse_window(std::string_view text) {
  if (text == "rectangular" || text == "rect") return Window::rectangular;
  if (text == "hann") return Window::hann;
  throw ConfigError("window must be 'rectangular' or 'hann', got '" + std::string(text) + "'");
}

double analytic_psd(double delta, double p, double w, double omega) {
  if (!(omega > 0.0)) throw std::domain_error("analytic_psd: omega must be > 0");
  const double ratio = p * w / omega;
  return (delta * delta / p) / (1.0 + ratio * ratio);
}

double analytic_psd(const ClockParams& params, double omega) {
  return analytic_psd(params.delta, params.p, params.w, omega);
}

PsdEstimate analytic_on_grid(const ClockParams& params, const PsdEstimate& grid) {
  PsdEstimate out = grid;
  out.dc = 0.0;
  out.bands.clear();
  for (std::size_t i = 0; i < out.freqs.size(); ++i) {
    out.values[i] = analytic_psd(params, out.freqs[i]);
  }
  return out;
}

PsdEstimator::PsdEstimator(std::size_t segment_len, Window window, double mean)
    : segment_len_((check_segmentation(segment_len, segment_len), segment_len)),
      window_(window),
      mean_(mean),
      taper_(make_taper(segment_len_, window_)),
      fft_(segment_len_) {
  CompensatedSum energy;
  for (double h : taper_) energy += h * h;
  taper_energy_ = energy.value();
  buffer_.assign(segment_len_, 0.0);
  power_.assign(segment_len_ / 2 + 1, 0.0);
  accum_.assign(segment_len_ / 2 + 1, 0.0);
}

void PsdEstimator::flush_segment() {
  fft_.power_spectrum(buffer_, power_);
  for (std::size_t j = 0; j < power_.size(); ++j) accum_[j] += power_[j] / taper_energy_;
  ++segments_;
  fill_ = 0;
}

PsdEstimate PsdEstimator::result() const {
  if (segments_ == 0) throw std::length_error("no complete segment has been pushed yet");
  PsdEstimate est = shell(segment_len_, window_, segments_);
  const auto count = static_cast<double>(segments_);
  est.dc = accum_[0] / count;
  for (std::size_t j = 1; j < accum_.size(); ++j) est.values[j - 1] = accum_[j] / count;
  return est;
}

double segmented_mean(std::span<const double> samples, std::size_t segment_len) {
  check_segmentation(samples.size(), segment_len);
  const std::size_t used = samples.size() / segment_len * segment_len;
  CompensatedSum sum;
  for (std::size_t i = 0; i < used; ++i) sum += samples[i];
  return sum.value() / static_cast<double>(used);
}

PsdEstimate estimate_psd(std::span<const double> samples, std::size_t segment_len, Window window) {
  const double mean = segmented_mean(samples, segment_len);
  PsdEstimator estimator(segment_len, window, mean);
  estimator.push(samples.first(samples.size() / segment_len * segment_len));
  return estimator.result();
}

PsdEstimate brute_force_psd(std::span<const double> samples, std::size_t segment_len,
                            Window window) {
  check_segmentation(samples.size(), segment_len);
  if (segment_len > (std::size_t{1} << 14) || samples.size() > (std::size_t{1} << 22)) {
    throw ConfigError("brute_force_psd is limited to M <= 2^14 and n <= 2^22");
  }
  const std::size_t m = segment_len;
  const std::size_t segments = samples.size() / m;
  const double mean = segmented_mean(samples, m);
  const std::vector<double> taper = make_taper(m, window);
  long double taper_energy = 0.0L;
  for (double h : taper) taper_energy += static_cast<long double>(h) * h;

  std::vector<long double> cos_table(m);
  std::vector<long double> sin_table(m);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t t = 0; t < m; ++t) {
    const long double angle = two_pi * static_cast<long double>(t) / static_cast<long double>(m);
    cos_table[t] = std::cos(angle);
    sin_table[t] = std::sin(angle);
  }

  std::vector<long double> accum(m / 2 + 1, 0.0L);
  std::vector<long double> y(m);
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t k = 0; k < m; ++k) {
      y[k] = static_cast<long double>(samples[s * m + k] - mean) * taper[k];
    }
    for (std::size_t j = 0; j <= m / 2; ++j) {
      long double re = 0.0L;
      long double im = 0.0L;
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t t = (j * k) % m;
        re += y[k] * cos_table[t];
        im -= y[k] * sin_table[t];
      }
      accum[j] += (re * re + im * im) / taper_energy;
    }
  }

  PsdEstimate est = shell(m, window, segments);
  const auto count = static_cast<long double>(segments);
  est.dc = static_cast<double>(accum[0] / count);
  for (std::size_t j = 1; j <= m / 2; ++j) est.values[j - 1] = static_cast<double>(accum[j] / count);
  return est;
}

PsdEstimate log_bin(const PsdEstimate& est, int bins_per_decade) {
  if (bins_per_decade < 1) throw ConfigError("bins_per_decade must be >= 1");
  if (est.empty()) throw ConfigError("cannot bin an empty estimate");

  PsdEstimate out;
  out.segments = est.segments;
  out.segment_len = est.segment_len;
  out.window = est.window;
  const double k = bins_per_decade;

  auto band_of = [k](double omega) {
    return static_cast<long>(std::floor(k * std::log10(omega) + 1e-9));
  };

  std::size_t i = 0;
  while (i < est.size()) {
    const long band = band_of(est.freqs[i]);
    std::size_t end = i;
    double log_sum = 0.0;
    CompensatedSum value_sum;
    while (end < est.size() && band_of(est.freqs[end]) == band) {
      log_sum += std::log(est.freqs[end]);
      value_sum += est.values[end];
      ++end;
    }
    const std::size_t count = end - i;
    out.freqs.push_back(count == 1 ? est.freqs[i] : std::exp(log_sum / static_cast<double>(count)));
    out.values.push_back(value_sum.value() / static_cast<double>(count));
    out.bands.push_back({std::pow(10.0, static_cast<double>(band) / k),
                         std::pow(10.0, static_cast<double>(band + 1) / k), count});
    i = end;
  }
  return out;
}

double parseval_variance(const PsdEstimate& est) {
  if (est.empty() || !est.bands.empty() || est.segment_len != 2 * est.size()) {
    throw std::invalid_argument("parseval_variance needs a raw (unbinned) estimate");
  }
  CompensatedSum sum(est.dc);
  for (std::size_t i = 0; i + 1 < est.size(); ++i) sum += 2.0 * est.values[i];
  sum += est.values.back();
  return sum.value() / static_cast<double>(est.segment_len);
}

double band_mean(const PsdEstimate& est, double lo, double hi) {
  CompensatedSum sum;
  std::size_t count = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (est.freqs[i] >= lo && est.freqs[i] <= hi) {
      sum += est.values[i];
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum.value() / static_cast<double>(count);
}

CornerFit fit_corner(const PsdEstimate& est, double omega_max) {
  double ref = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (est.freqs[i] <= omega_max && est.values[i] > 0.0) {
      ref += std::log(est.freqs[i]);
      ++used;
    }
  }
  if (used < 3) throw std::domain_error("fit_corner: fewer than 3 usable points");
  ref = std::exp(ref / static_cast<double>(used));

  // Rows: S_i * a + S_i * x_i * b = 1, x_i = (ref / Omega_i)^2.
  double s11 = 0.0, s12 = 0.0, s22 = 0.0, r1 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!(est.freqs[i] <= omega_max && est.values[i] > 0.0)) continue;
    const double weight = est.bands.empty() ? 1.0 : static_cast<double>(est.bands[i].points);
    const double x = (ref / est.freqs[i]) * (ref / est.freqs[i]);
    const double s = est.values[i];
    s11 += weight * s * s;
    s12 += weight * s * s * x;
    s22 += weight * s * s * x * x;
    r1 += weight * s;
    r2 += weight * s * x;
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(std::fabs(det) > 0.0)) throw std::domain_error("fit_corner: singular normal equations");
  const double a = (r1 * s22 - r2 * s12) / det;
  const double b = (s11 * r2 - s12 * r1) / det;
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("fit_corner: data show no corner");
  return {1.0 / a, ref * std::sqrt(b / a)};
}

}  // namespace quietclock
