#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "quietclock/errors.hpp"
#include "quietclock/fft.hpp"
#include "quietclock/spectral.hpp"

using namespace quietclock;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

double max_abs_diff(const PsdEstimate& a, const PsdEstimate& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.freqs[i] == doctest::Approx(b.freqs[i]).epsilon(1e-15));
    d = std::max(d, std::fabs(a.values[i] - b.values[i]));
  }
  return d;
}

double max_value(const PsdEstimate& e) {
  double m = e.dc;
  for (double v : e.values) m = std::max(m, v);
  return m;
}

}  // namespace

TEST_CASE("analytic_psd reference values") {
  const double delta = 1e-5, p = 0.01, w = 1e-3;
  const double plateau = delta * delta / p;
  CHECK(analytic_psd(delta, p, w, 1e-5) == doctest::Approx(plateau / 2.0).epsilon(1e-12));
  CHECK(analytic_psd(delta, p, w, 1e-3) == doctest::Approx(plateau / (1.0 + 1e-4)).epsilon(1e-12));
  CHECK(analytic_psd(delta, p, w, 1e-6) == doctest::Approx(plateau / 101.0).epsilon(1e-12));
  CHECK(analytic_psd(delta, p, w, kPi) == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK_THROWS_AS(analytic_psd(delta, p, w, 0.0), std::domain_error);
  CHECK_THROWS_AS(analytic_psd(delta, p, w, -1.0), std::domain_error);
}

TEST_CASE("analytic_psd is increasing and bounded by the plateau") {
  double prev = 0.0;
  for (double omega = 1e-8; omega < kPi; omega *= 1.1) {
    const double s = analytic_psd(1e-5, 0.01, 1e-3, omega);
    CHECK(s > prev);
    CHECK(s < 1e-8);
    prev = s;
  }
}

TEST_CASE("RealFft matches a direct DFT") {
  for (std::size_t m : {2U, 4U, 8U, 64U, 1024U}) {
    const std::vector<double> x = gaussian_noise(m, m);
    RealFft fft(m);
    std::vector<double> power(m / 2 + 1);
    fft.power_spectrum(x, power);
    for (std::size_t j = 0; j <= m / 2; ++j) {
      long double re = 0.0L, im = 0.0L;
      for (std::size_t k = 0; k < m; ++k) {
        const long double angle = -2.0L * std::numbers::pi_v<long double> *
                                  static_cast<long double>((j * k) % m) / static_cast<long double>(m);
        re += x[k] * std::cos(angle);
        im += x[k] * std::sin(angle);
      }
      const double expected = static_cast<double>(re * re + im * im);
      CHECK(power[j] == doctest::Approx(expected).epsilon(1e-9).scale(static_cast<double>(m)));
    }
  }
}

TEST_CASE("RealFft rejects bad sizes") {
  CHECK_THROWS(RealFft(0));
  CHECK_THROWS(RealFft(1));
  CHECK_THROWS(RealFft(12));
  RealFft fft(8);
  std::vector<double> x(8), short_power(3);
  CHECK_THROWS(fft.power_spectrum(x, short_power));
  CHECK(is_power_of_two(1024));
  CHECK_FALSE(is_power_of_two(0));
  CHECK_FALSE(is_power_of_two(1000));
}

TEST_CASE("estimator agrees with the brute-force oracle") {
  const std::vector<double> x = gaussian_noise(4096, 7);
  for (Window window : {Window::rectangular, Window::hann}) {
    const PsdEstimate fast = estimate_psd(x, 256, window);
    const PsdEstimate slow = brute_force_psd(x, 256, window);
    CHECK(fast.segments == 16);
    CHECK(slow.segments == 16);
    CHECK(max_abs_diff(fast, slow) <= 1e-9);
    CHECK(fast.dc == doctest::Approx(slow.dc).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("property: estimator agrees with the oracle across lengths and windows") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t m = std::size_t{1} << (2 + rng() % 9);  // 4 .. 1024
    const std::size_t segments = 1 + rng() % 6;
    const std::size_t n = m * segments + rng() % m;  // ragged tail is ignored
    const double scale = testing::log_uniform(rng, 1e-8, 1e3);
    std::vector<double> x = gaussian_noise(n, rng(), scale);
    for (double& v : x) v += 3.0 * scale;
    const Window window = trial % 2 ? Window::hann : Window::rectangular;
    const PsdEstimate fast = estimate_psd(x, m, window);
    const PsdEstimate slow = brute_force_psd(x, m, window);
    CHECK(fast.segments == segments);
    const double floor = 1e-12 * std::max(max_value(slow), scale * scale);
    CHECK(max_abs_diff(fast, slow) <= floor);
  }
}

TEST_CASE("a pure tone lands in its own bin") {
  const std::size_t m = 512;
  const std::size_t j0 = 37;
  std::vector<double> x(m * 4);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = std::cos(2.0 * kPi * static_cast<double>(j0 * k) / static_cast<double>(m));
  }
  const PsdEstimate est = estimate_psd(x, m);
  REQUIRE(est.size() == m / 2);
  CHECK(est.freqs[j0 - 1] == doctest::Approx(2.0 * kPi * j0 / m));
  // |X|^2 / M = (M/2)^2 / M = M / 4.
  CHECK(est.values[j0 - 1] == doctest::Approx(m / 4.0).epsilon(1e-9));
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (i != j0 - 1) CHECK(est.values[i] < 1e-18 * m);
  }
}

TEST_CASE("constant and zero series have a zero spectrum") {
  const std::vector<double> constant(4096, 2.5e-3);
  for (double v : estimate_psd(constant, 256).values) CHECK(v == 0.0);
  const std::vector<double> zeros(1024, 0.0);
  for (double v : estimate_psd(zeros, 64, Window::hann).values) CHECK(v == 0.0);
}

TEST_CASE("estimator error handling") {
  const std::vector<double> x(1000, 1.0);
  CHECK_THROWS(estimate_psd(x, 1024));  // no complete segment
  CHECK_THROWS(estimate_psd(x, 100));   // not a power of two
  CHECK_THROWS(estimate_psd(x, 1));
  CHECK_THROWS(brute_force_psd(std::vector<double>(1 << 15), 1 << 15));
  PsdEstimator streaming(64, Window::rectangular, 0.0);
  CHECK_THROWS_AS((void)streaming.result(), std::length_error);
}

TEST_CASE("streaming estimator equals the batch estimator") {
  const std::vector<double> x = gaussian_noise(64 * 50 + 17, 3);
  const double mean = segmented_mean(x, 64);
  PsdEstimator streaming(64, Window::hann, mean);
  for (double v : x) streaming.push(v);
  CHECK(streaming.segments() == 50);
  const PsdEstimate a = streaming.result();
  const PsdEstimate b = estimate_psd(x, 64, Window::hann);
  CHECK(a.values == b.values);
  CHECK(a.freqs == b.freqs);
}

TEST_CASE("segmented_mean ignores the ragged tail") {
  std::vector<double> x(20, 1.0);
  for (std::size_t i = 16; i < 20; ++i) x[i] = 100.0;
  CHECK(segmented_mean(x, 8) == 1.0);
}

TEST_CASE("Parseval recovers the sample variance") {
  const std::vector<double> x = gaussian_noise(1 << 14, 21, 3e-4);
  const PsdEstimate est = estimate_psd(x, 1 << 14);
  CHECK(parseval_variance(est) == doctest::Approx(testing::population_variance(x)).epsilon(1e-6));
  const PsdEstimate segmented = estimate_psd(x, 1 << 10);
  // Average over segments of each segment's variance about the global mean.
  long double total = 0.0L;
  const double mean = segmented_mean(x, 1 << 10);
  for (double v : x) total += (v - mean) * (v - mean);
  CHECK(parseval_variance(segmented) ==
        doctest::Approx(static_cast<double>(total / x.size())).epsilon(1e-6));
}

TEST_CASE("white Bernoulli marks give the flat level m^2 p (1-p)") {
  const double p = 0.01, mark = 1e-3;
  std::mt19937_64 rng(8);
  std::bernoulli_distribution b(p);
  std::vector<double> x(1 << 22);
  for (double& v : x) v = b(rng) ? mark : 0.0;
  const PsdEstimate est = estimate_psd(x, 1 << 12);
  const double level = mark * mark * p * (1.0 - p);
  CHECK(band_mean(est, 1e-2, 1e-1) == doctest::Approx(level).epsilon(0.10));
  CHECK(band_mean(est, 1.0, kPi) == doctest::Approx(level).epsilon(0.10));
}

TEST_CASE("log_bin") {
  PsdEstimate raw;
  raw.freqs = {0.1, 0.2, 0.5, 1.0, 2.0};
  raw.values = {1.0, 2.0, 3.0, 4.0, 5.0};
  raw.segments = 3;
  raw.segment_len = 64;

  SUBCASE("one bin per decade") {
    const PsdEstimate b = log_bin(raw, 1);
    REQUIRE(b.size() == 2);
    CHECK(b.freqs[0] == doctest::Approx(std::cbrt(0.1 * 0.2 * 0.5)));
    CHECK(b.values[0] == doctest::Approx(2.0));
    CHECK(b.bands[0].points == 3);
    CHECK(b.bands[0].lo == doctest::Approx(0.1));
    CHECK(b.bands[0].hi == doctest::Approx(1.0));
    CHECK(b.values[1] == doctest::Approx(4.5));
    CHECK(b.segments == 3);
  }
  SUBCASE("single members keep their exact frequency") {
    const PsdEstimate b = log_bin(raw, 100);
    REQUIRE(b.size() == 5);
    CHECK(b.freqs == raw.freqs);
    CHECK(b.values == raw.values);
  }
  SUBCASE("errors") {
    CHECK_THROWS(log_bin(raw, 0));
    CHECK_THROWS(log_bin(PsdEstimate{}, 10));
  }
}

TEST_CASE("band_mean") {
  PsdEstimate e;
  e.freqs = {1.0, 2.0, 3.0};
  e.values = {10.0, 20.0, 30.0};
  CHECK(band_mean(e, 1.5, 3.0) == 25.0);
  CHECK(std::isnan(band_mean(e, 5.0, 6.0)));
}

TEST_CASE("fit_corner recovers the corner of the analytic curve") {
  PsdEstimate grid;
  for (double omega = 1e-6; omega < 1.0; omega *= 1.2589) grid.freqs.push_back(omega);
  grid.values.resize(grid.freqs.size());
  ClockParams params;
  const PsdEstimate curve = analytic_on_grid(params, grid);
  const CornerFit fit = fit_corner(curve);
  CHECK(fit.corner == doctest::Approx(1e-5).epsilon(1e-9));
  CHECK(fit.plateau == doctest::Approx(1e-8).epsilon(1e-9));

  PsdEstimate flat = grid;
  std::fill(flat.values.begin(), flat.values.end(), 0.0);
  CHECK_THROWS_AS(fit_corner(flat), std::domain_error);
}

TEST_CASE("the Fejer-smoothed oracle approaches the exact spectrum for long segments") {
  const std::size_t m = std::size_t{1} << 20;
  for (std::size_t j : {64U, 1000U, 50000U, 524288U}) {
    const double omega = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
    CHECK(testing::discrete_clock_periodogram(1e-5, 0.1, 0.05, m, j) ==
          doctest::Approx(testing::discrete_clock_psd(1e-5, 0.1, 0.05, omega)).epsilon(0.01));
  }
}

TEST_CASE("simulated clock spectrum matches the expected periodogram of the recurrence") {
  // Fast corner so a short run resolves it: p w = 5e-3, about three bins.
  ClockParams params;
  params.delta = 1e-5;
  params.p = 0.1;
  params.w = 0.05;
  const std::size_t m = 1 << 12;
  const DissipationSeries s = gen_clock_series(params, 17, std::size_t{1} << 22);
  const PsdEstimate est = log_bin(estimate_psd(s.samples, m), 10);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto& band = est.bands[i];
    // Band average of the oracle over the same member bins.
    double oracle = 0.0;
    for (std::size_t j = 1; j <= m / 2; ++j) {
      const double omega = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
      if (omega >= band.lo && omega < band.hi) {
        oracle += testing::discrete_clock_periodogram(params.delta, params.p, params.w, m, j);
      }
    }
    oracle /= static_cast<double>(band.points);
    const double tol = 4.0 / std::sqrt(static_cast<double>(est.segments * band.points)) + 0.01;
    CHECK_MESSAGE(std::fabs(est.values[i] / oracle - 1.0) <= tol, "omega " << est.freqs[i]);
  }
}

TEST_CASE("the continuum formula tracks the exact spectrum for small p and w") {
  for (double omega : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2}) {
    const double exact = testing::discrete_clock_psd(1e-5, 0.01, 1e-3, omega);
    CHECK(analytic_psd(1e-5, 0.01, 1e-3, omega) == doctest::Approx(exact).epsilon(0.02));
  }
}
