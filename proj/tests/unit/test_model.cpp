#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "quietclock/errors.hpp"
#include "quietclock/model.hpp"
#include "quietclock/summation.hpp"

using namespace quietclock;

namespace {

ClockParams default_params(DampingRule rule = DampingRule::linearized) {
  ClockParams params;
  params.delta = 1e-5;
  params.p = 0.01;
  params.w = 1e-3;
  params.damping_rule = rule;
  return params;
}

}  // namespace

TEST_CASE("step_clock without an event only adds the escapement input") {
  const StepResult r = step_clock({1.0, 0}, default_params(), 0.5);
  CHECK(r.state.e == 1.0 + 1e-5);
  CHECK(r.state.k == 1);
  CHECK_FALSE(r.event.has_value());
}

TEST_CASE("step_clock linearized damping event") {
  const StepResult r = step_clock({1.0, 7}, default_params(DampingRule::linearized), 0.001);
  REQUIRE(r.event.has_value());
  CHECK(r.state.e == doctest::Approx(0.99900999).epsilon(1e-12));
  CHECK(r.event->mark == doctest::Approx(1.00001e-3).epsilon(1e-12));
  CHECK(r.event->k == 7);
  CHECK(r.state.k == 8);
  // Booked energy is exactly what was removed.
  CHECK(r.state.e + r.event->mark == 1.0 + 1e-5);
}

TEST_CASE("step_clock exact damping event") {
  const StepResult r = step_clock({1.0, 0}, default_params(DampingRule::exact), 0.001);
  REQUIRE(r.event.has_value());
  CHECK(r.state.e == doctest::Approx(1.00001 / 1.001).epsilon(1e-14));
  CHECK(r.state.e == doctest::Approx(0.99901099).epsilon(1e-8));
  CHECK(r.event->mark == doctest::Approx(1.00001 * 1e-3 / 1.001).epsilon(1e-10));
  CHECK(r.event->mark == doctest::Approx(9.9901e-4).epsilon(1e-5));
}

TEST_CASE("the event threshold is u < p") {
  ClockParams params = default_params();
  CHECK(step_clock({1.0, 0}, params, 0.0).event.has_value());
  CHECK(step_clock({1.0, 0}, params, std::nextafter(0.01, 0.0)).event.has_value());
  CHECK_FALSE(step_clock({1.0, 0}, params, 0.01).event.has_value());
}

TEST_CASE("mean_energy") {
  CHECK(mean_energy(default_params()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_energy(0.0, 0.01, 1e-3) == 0.0);
  CHECK(mean_energy(2e-5, 0.01, 1e-3) == doctest::Approx(2.0 * mean_energy(1e-5, 0.01, 1e-3)));
  CHECK(default_params().initial_energy() == mean_energy(default_params()));
}

TEST_CASE("period_from_length") {
  CHECK(period_from_length(1.0, 1.0) == doctest::Approx(2.0 * std::numbers::pi));
  const double g = 9.81;
  CHECK(period_from_length(g / (4.0 * std::numbers::pi * std::numbers::pi), g) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(period_from_length(0.2533, 10.0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_THROWS_AS(period_from_length(0.0, 10.0), ConfigError);
  CHECK_THROWS_AS(period_from_length(1.0, -1.0), ConfigError);
}

TEST_CASE("parameter validation") {
  ClockParams c = default_params();
  c.p = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_params();
  c.w = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_params();
  c.delta = -1e-5;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_params();
  c.e0 = 0.0;
  CHECK_THROWS_AS(ClockGenerator(c, 1), ConfigError);

  CHECK_THROWS_AS(validate(PoissonParams{1.0, 1e-3}), ConfigError);
  CHECK_THROWS_AS(validate(PoissonParams{0.01, 0.0}), ConfigError);
  CHECK_THROWS_AS(validate(LaserAnalogParams{0.0, 1e-3}), ConfigError);
  CHECK_THROWS_AS(validate(LaserAnalogParams{1e-5, -1.0}), ConfigError);
  CHECK_NOTHROW(validate(default_params()));
}

TEST_CASE("gen_clock_series degenerate runs") {
  CHECK_THROWS_AS(gen_clock_series(default_params(), 1, 0), ConfigError);

  // First seed whose first draw misses the event.
  std::uint64_t seed = 0;
  while (Rng(seed).uniform() < 0.01) ++seed;
  const DissipationSeries s = gen_clock_series(default_params(), seed, 1);
  CHECK(s.n == 1);
  REQUIRE(s.samples.size() == 1);
  CHECK(s.samples[0] == 0.0);
  CHECK(s.events.empty());
  CHECK(s.final_state.k == 1);
  CHECK(s.final_state.e == 1.0 + 1e-5);
}

TEST_CASE("generators refuse to materialize past the memory budget") {
  CHECK_THROWS_AS(gen_clock_series(default_params(), 1, 1001, MemoryBudget{1000}), ResourceError);
  CHECK_THROWS_AS(gen_laser_series({}, 1001, MemoryBudget{1000}), ResourceError);
  CHECK_NOTHROW(gen_clock_series(default_params(), 1, 1000, MemoryBudget{1000}));
}

TEST_CASE("clock series is bit-identical for identical inputs") {
  const DissipationSeries a = gen_clock_series(default_params(), 42, 200000);
  const DissipationSeries b = gen_clock_series(default_params(), 42, 200000);
  CHECK(a.samples == b.samples);
  CHECK(a.events == b.events);
  CHECK(a.final_state.e == b.final_state.e);
  const DissipationSeries c = gen_clock_series(default_params(), 43, 200000);
  CHECK(a.samples != c.samples);
}

TEST_CASE("series samples and events agree") {
  const DissipationSeries s = gen_clock_series(default_params(DampingRule::exact), 5, 100000);
  std::size_t next = 0;
  CompensatedSum samples;
  CompensatedSum marks;
  for (std::size_t k = 0; k < s.samples.size(); ++k) {
    samples += s.samples[k];
    if (next < s.events.size() && s.events[next].k == k) {
      CHECK(s.samples[k] == s.events[next].mark);
      CHECK(s.events[next].mark > 0.0);
      ++next;
    } else {
      CHECK(s.samples[k] == 0.0);
    }
  }
  CHECK(next == s.events.size());
  for (const auto& e : s.events) marks += e.mark;
  CHECK(samples.value() == marks.value());
}

TEST_CASE("clock event count and mean power at default parameters, 1e7 periods") {
  const std::uint64_t n = 10'000'000;
  ClockGenerator gen(default_params(), 2024);
  std::uint64_t events = 0;
  CompensatedSum power;
  stream_periods(gen, n, [&](std::uint64_t, const PeriodOutput& out) {
    events += out.events;
    power += out.sample;
  });
  // Binomial count: p n = 1e5 with sd sqrt(n p (1-p)) ~ 315; 4 sd ~ 1260.
  CHECK(std::fabs(static_cast<double>(events) - 1e5) <= 4.0 * std::sqrt(n * 0.01 * 0.99));
  CHECK(power.value() / static_cast<double>(n) == doctest::Approx(1e-5).epsilon(0.01));
}

TEST_CASE("stationary mean energy and geometric gaps, 1e7 periods") {
  const std::uint64_t n = 10'000'000;
  ClockGenerator gen(default_params(), 99);
  CompensatedSum energy;
  std::vector<double> gaps;
  std::uint64_t last = 0;
  bool have_last = false;
  stream_periods(gen, n, [&](std::uint64_t k, const PeriodOutput& out) {
    energy += out.stored_before;
    if (out.events) {
      if (have_last) gaps.push_back(static_cast<double>(k - last));
      last = k;
      have_last = true;
    }
  });
  CHECK(std::fabs(energy.value() / static_cast<double>(n) - 1.0) < 0.05);
  const double p = 0.01;
  CHECK(testing::mean_of(gaps) == doctest::Approx(1.0 / p).epsilon(0.03));
  CHECK(testing::sample_variance(gaps) == doctest::Approx((1.0 - p) / (p * p)).epsilon(0.10));
}

TEST_CASE("property: stored energy stays positive under both rules") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    ClockParams params;
    params.delta = testing::log_uniform(rng, 1e-9, 1.0);
    params.p = testing::log_uniform(rng, 1e-4, 0.99);
    params.w = testing::log_uniform(rng, 1e-6, 0.99);
    params.damping_rule = trial % 2 ? DampingRule::exact : DampingRule::linearized;
    params.e0 = testing::log_uniform(rng, 1e-12, 1e6);
    ClockGenerator gen(params, rng());
    bool positive = true;
    stream_periods(gen, 2000, [&](std::uint64_t, const PeriodOutput&) {
      positive = positive && gen.stored() > 0.0;
    });
    CHECK(positive);
  }
}

TEST_CASE("property: linearized and exact rules agree to first order in w") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> below_p(0.0, 0.01);
  for (int trial = 0; trial < 10000; ++trial) {
    ClockParams params;
    params.delta = testing::log_uniform(rng, 1e-9, 1.0);
    params.w = testing::log_uniform(rng, 1e-6, 0.5);
    params.p = 0.01;
    const EnergyState state{testing::log_uniform(rng, 1e-6, 1e3), 0};
    const double u = below_p(rng);
    params.damping_rule = DampingRule::linearized;
    const double lin = step_clock(state, params, u).state.e;
    params.damping_rule = DampingRule::exact;
    const double exact = step_clock(state, params, u).state.e;
    const double e_in = state.e + params.delta;
    // (1 - w) - 1 / (1 + w) = -w^2 / (1 + w); allow a few ulps of rounding.
    CHECK(std::fabs(lin - exact) <= params.w * params.w * e_in * (1.0 + 1e-12) + 4e-16 * e_in);
  }
}

TEST_CASE("Poisson reference stream") {
  const PoissonParams params{0.01, 1e-3};
  const DissipationSeries s = gen_poisson_series(params, 3, 1'000'000);
  REQUIRE(s.events.size() > 2);
  const double span = static_cast<double>(s.events.back().k - s.events.front().k);
  CHECK(span / static_cast<double>(s.events.size() - 1) == doctest::Approx(100.0).epsilon(0.05));
  for (const auto& e : s.events) CHECK(e.mark == 1e-3);
  const double expected = 1e-6 * 0.01 * 0.99;
  CHECK(testing::population_variance(s.samples) == doctest::Approx(expected).epsilon(0.05));
  CHECK(s.final_state.e == 0.0);
  CHECK_THROWS_AS(gen_poisson_series({1.0, 1e-3}, 3, 10), ConfigError);
}

TEST_CASE("laser analog fires every 100 periods") {
  const DissipationSeries s = gen_laser_series({1e-5, 1e-3}, 1'000'000);
  CHECK(s.events.size() == 10000);
  for (std::size_t i = 1; i < s.events.size(); ++i) {
    CHECK(s.events[i].k - s.events[i - 1].k == 100);
  }
  for (const auto& e : s.events) CHECK(e.mark == 1e-3);
  CHECK(s.final_state.e >= 0.0);
  CHECK(s.final_state.e < 1e-3);
}

TEST_CASE("laser analog with quantum equal to the pump fires every period") {
  const DissipationSeries s = gen_laser_series({2.5e-4, 2.5e-4}, 1000);
  CHECK(s.events.size() == 1000);
  for (std::size_t k = 0; k < s.samples.size(); ++k) CHECK(s.samples[k] == 2.5e-4);
  CHECK(s.final_state.e == 0.0);
}

TEST_CASE("laser analog counts in every window are floor or ceil of m delta / quantum") {
  const LaserAnalogParams params{3e-5, 1e-3};
  const std::uint64_t n = 100000;
  const DissipationSeries s = gen_laser_series(params, n);
  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (const auto& e : s.events) ++prefix[e.k + 1];
  for (std::uint64_t k = 0; k < n; ++k) prefix[k + 1] += prefix[k];

  for (std::uint64_t m : {1ULL, 7ULL, 33ULL, 34ULL, 100ULL, 1000ULL, 12345ULL}) {
    const double expected = static_cast<double>(m) * params.delta / params.quantum;
    // The ratio is held exactly by the accumulator; the double product can
    // land on the other side of an integer, hence the 1e-9 slack.
    const auto lo = static_cast<std::uint64_t>(std::floor(expected - 1e-9));
    const auto hi = static_cast<std::uint64_t>(std::ceil(expected + 1e-9));
    bool within = true;
    for (std::uint64_t start = 0; start + m <= n; ++start) {
      const std::uint64_t count = prefix[start + m] - prefix[start];
      within = within && count >= lo && count <= hi;
    }
    CHECK_MESSAGE(within, "window " << m);
  }
}

TEST_CASE("laser analog with many quanta per period") {
  const DissipationSeries s = gen_laser_series({1e-3, 2.5e-4}, 10);
  CHECK(s.events.size() == 40);
  CHECK(s.samples[0] == 1e-3);
  CHECK_THROWS_AS(LaserGenerator({1.0, 1e-30}), ConfigError);
}
