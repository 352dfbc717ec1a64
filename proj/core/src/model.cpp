#include "quietclock/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "quietclock/errors.hpp"
#include "quietclock/summation.hpp"

namespace quietclock {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

bool open_unit(double x) { return std::isfinite(x) && x > 0.0 && x < 1.0; }

void check_budget(std::uint64_t n, MemoryBudget budget) {
  if (n == 0) throw ConfigError("period count must be at least 1");
  if (n > budget.max_samples) {
    throw ResourceError("run of " + std::to_string(n) + " periods exceeds the in-memory budget of " +
                        std::to_string(budget.max_samples) + " samples; stream it instead");
  }
}

template <PeriodGenerator G>
DissipationSeries materialize(G& gen, std::uint64_t n) {
  DissipationSeries series;
  series.n = n;
  series.initial_state = {gen.stored(), gen.periods()};
  series.input_per_period = gen.input_per_period();
  series.samples.reserve(n);
  CompensatedSum input;
  stream_periods(gen, n, [&](std::uint64_t k, const PeriodOutput& out) {
    series.samples.push_back(out.sample);
    input += out.input;
    for (std::uint64_t i = 0; i < out.events; ++i) series.events.push_back({k, out.mark});
  });
  series.final_state = {gen.stored(), gen.periods()};
  series.input_total = input.value();
  return series;
}

}  // namespace

std::string_view to_string(DampingRule rule) {
  return rule == DampingRule::exact ? "exact" : "linearized";
}

DampingRule parse_damping_rule(std::string_view text) {
  if (text == "linearized") return DampingRule::linearized;
  if (text == "exact") return DampingRule::exact;
  throw ConfigError("damping rule must be 'linearized' or 'exact', got '" + std::string(text) + "'");
}

double ClockParams::initial_energy() const { return e0 ? *e0 : mean_energy(delta, p, w); }

void validate(const ClockParams& params) {
  require(finite_positive(params.delta), "clock: delta must be > 0");
  require(open_unit(params.p), "clock: p must lie in (0, 1)");
  require(open_unit(params.w), "clock: w must lie in (0, 1)");
  if (params.e0) require(finite_positive(*params.e0), "clock: e0 must be > 0");
}

void validate(const PoissonParams& params) {
  require(open_unit(params.p), "poisson: p must lie in (0, 1)");
  require(finite_positive(params.mark), "poisson: mark must be > 0");
}

void validate(const LaserAnalogParams& params) {
  require(finite_positive(params.delta), "laser: delta must be > 0");
  require(finite_positive(params.quantum), "laser: quantum must be > 0");
}

StepResult step_clock(const EnergyState& state, const ClockParams& params, double u) {
  const double e_in = state.e + params.delta;
  StepResult result{{e_in, state.k + 1}, std::nullopt};
  if (u < params.p) {
    const double e_out = params.damping_rule == DampingRule::linearized
                             ? (1.0 - params.w) * e_in
                             : e_in / (1.0 + params.w);
    // Exact for w <= 1/2 (Sterbenz), so the removed energy is booked exactly.
    result.state.e = e_out;
    result.event = DissipationEvent{state.k, e_in - e_out};
  }
  return result;
}

double mean_energy(double delta, double p, double w) {
  if (delta == 0.0) return 0.0;
  return delta / (p * w);
}

double mean_energy(const ClockParams& params) {
  return mean_energy(params.delta, params.p, params.w);
}

double period_from_length(double length_m, double g) {
  if (!(length_m > 0.0) || !(g > 0.0)) {
    throw ConfigError("pendulum length and gravity must both be > 0");
  }
  return 2.0 * std::numbers::pi * std::sqrt(length_m / g);
}

ClockGenerator::ClockGenerator(const ClockParams& params, std::uint64_t seed)
    : params_(params), rng_(seed) {
  validate(params_);
  state_ = {params_.initial_energy(), 0};
}

PeriodOutput ClockGenerator::next() {
  const double before = state_.e;
  const StepResult step = step_clock(state_, params_, rng_.uniform());
  state_ = step.state;
  if (!step.event) return {0.0, 0, 0.0, before, params_.delta};
  return {step.event->mark, 1, step.event->mark, before, params_.delta};
}

PoissonGenerator::PoissonGenerator(const PoissonParams& params, std::uint64_t seed)
    : params_(params), rng_(seed) {
  validate(params_);
}

PeriodOutput PoissonGenerator::next() {
  ++k_;
  if (rng_.uniform() < params_.p) return {params_.mark, 1, params_.mark, 0.0, params_.mark};
  return {0.0, 0, 0.0, 0.0, 0.0};
}

LaserGenerator::LaserGenerator(const LaserAnalogParams& params) : params_(params) {
  validate(params_);

  // x == mantissa * 2^exponent with an odd (or zero) integer mantissa.
  auto decompose = [](double x) {
    int exponent = 0;
    const double frac = std::frexp(x, &exponent);
    auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    exponent -= 53;
    while ((mantissa & 1U) == 0U) {
      mantissa >>= 1;
      ++exponent;
    }
    return std::pair{mantissa, exponent};
  };
  const auto [dm, de] = decompose(params_.delta);
  const auto [qm, qe] = decompose(params_.quantum);
  scale_exponent_ = std::min(de, qe);
  const int dshift = de - scale_exponent_;
  const int qshift = qe - scale_exponent_;
  if (dshift > 70 || qshift > 70) {
    throw ConfigError("laser: delta/quantum ratio is too extreme for the exact accumulator");
  }
  delta_units_ = Units{dm} << dshift;
  quantum_units_ = Units{qm} << qshift;
}

PeriodOutput LaserGenerator::next() {
  const double before = stored();
  ++k_;
  acc_ += delta_units_;
  if (acc_ < quantum_units_) return {0.0, 0, 0.0, before, params_.delta};
  const auto count = static_cast<std::uint64_t>(acc_ / quantum_units_);
  acc_ %= quantum_units_;
  return {static_cast<double>(count) * params_.quantum, count, params_.quantum, before,
          params_.delta};
}

double LaserGenerator::stored() const {
  return std::ldexp(static_cast<double>(acc_), scale_exponent_);
}

DissipationSeries gen_clock_series(const ClockParams& params, std::uint64_t seed, std::uint64_t n,
                                   MemoryBudget budget) {
  check_budget(n, budget);
  ClockGenerator gen(params, seed);
  return materialize(gen, n);
}

DissipationSeries gen_poisson_series(const PoissonParams& params, std::uint64_t seed,
                                     std::uint64_t n, MemoryBudget budget) {
  check_budget(n, budget);
  PoissonGenerator gen(params, seed);
  return materialize(gen, n);
}

DissipationSeries gen_laser_series(const LaserAnalogParams& params, std::uint64_t n,
                                   MemoryBudget budget) {
  check_budget(n, budget);
  LaserGenerator gen(params);
  return materialize(gen, n);
}

}  // namespace quietclock
