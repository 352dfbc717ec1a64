#pragma once

// Pendulum-clock energy recurrence and the two contrast event processes.
//
// Time is measured in oscillation periods (T = 1). Each generator advances one
// period per call and reports the energy dissipated during that period. The
// clock draws exactly one uniform number per period, so a seed fixes the whole
// trajectory.

#include <concepts>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "quietclock/rng.hpp"

namespace quietclock {

enum class DampingRule {
  linearized,  // E -> (1 - w) E
  exact,       // E -> E / (1 + w)
};

std::string_view to_string(DampingRule rule);
DampingRule parse_damping_rule(std::string_view text);

struct ClockParams {
  double delta = 1e-5;  // escapement input per period (J)
  double p = 0.01;      // damping-event probability per period
  double w = 1e-3;      // molecule-to-bob weight ratio
  DampingRule damping_rule = DampingRule::linearized;
  std::optional<double> e0;  // initial energy; unset means delta / (p w)

  [[nodiscard]] double initial_energy() const;
};

struct PoissonParams {
  double p = 0.01;     // event probability per period
  double mark = 1e-3;  // energy carried by every event (J)
};

// Constant pump feeding an integrate-and-fire accumulator that releases
// fixed quanta.
struct LaserAnalogParams {
  double delta = 1e-5;    // pump energy per period (J)
  double quantum = 1e-3;  // energy of every emitted event (J)
};

// Throw ConfigError naming the offending field.
void validate(const ClockParams& params);
void validate(const PoissonParams& params);
void validate(const LaserAnalogParams& params);

struct EnergyState {
  double e = 0.0;
  std::uint64_t k = 0;
};

struct DissipationEvent {
  std::uint64_t k = 0;
  double mark = 0.0;

  friend bool operator==(const DissipationEvent&, const DissipationEvent&) = default;
};

struct StepResult {
  EnergyState state;
  std::optional<DissipationEvent> event;
};

// One period of the clock: add the escapement input, then with probability p
// remove the energy taken by one raised molecule. The event mark is the energy
// actually removed, so e + delta == state.e + mark up to one rounding.
StepResult step_clock(const EnergyState& state, const ClockParams& params, double u);

double mean_energy(double delta, double p, double w);
double mean_energy(const ClockParams& params);

// Small-amplitude pendulum period 2 pi sqrt(L / g), in seconds.
double period_from_length(double length_m, double g = 9.80665);

// What one period produced.
struct PeriodOutput {
  double sample = 0.0;          // energy dissipated during the period
  std::uint64_t events = 0;     // number of events in the period
  double mark = 0.0;            // energy per event (all events of a period share it)
  double stored_before = 0.0;   // stored energy at the start of the period
  double input = 0.0;           // energy fed in during the period
};

template <class G>
concept PeriodGenerator = requires(G g, const G cg) {
  { g.next() } -> std::same_as<PeriodOutput>;
  { cg.stored() } -> std::convertible_to<double>;
  { cg.input_per_period() } -> std::convertible_to<double>;  // long-run mean
  { cg.periods() } -> std::convertible_to<std::uint64_t>;
};

class ClockGenerator {
 public:
  ClockGenerator(const ClockParams& params, std::uint64_t seed);

  PeriodOutput next();

  [[nodiscard]] const EnergyState& state() const { return state_; }
  [[nodiscard]] double stored() const { return state_.e; }
  [[nodiscard]] double input_per_period() const { return params_.delta; }
  [[nodiscard]] std::uint64_t periods() const { return state_.k; }
  [[nodiscard]] const ClockParams& params() const { return params_; }

 private:
  ClockParams params_;
  Rng rng_;
  EnergyState state_;
};

// Bernoulli(p) events of constant mark; nothing is stored between periods, so
// the input of a period is whatever it dissipates.
class PoissonGenerator {
 public:
  PoissonGenerator(const PoissonParams& params, std::uint64_t seed);

  PeriodOutput next();

  [[nodiscard]] double stored() const { return 0.0; }
  [[nodiscard]] double input_per_period() const { return params_.p * params_.mark; }
  [[nodiscard]] std::uint64_t periods() const { return k_; }

 private:
  PoissonParams params_;
  Rng rng_;
  std::uint64_t k_ = 0;
};

// Deterministic accumulator: acc += delta each period, and every whole quantum
// in acc is emitted as one event. delta and quantum are converted to integers
// on a shared power-of-two scale, so the accumulator is exact for the doubles
// given (no drift in event timing however long the run).
class LaserGenerator {
 public:
  explicit LaserGenerator(const LaserAnalogParams& params);

  PeriodOutput next();

  [[nodiscard]] double stored() const;  // accumulator residue in [0, quantum)
  [[nodiscard]] double input_per_period() const { return params_.delta; }
  [[nodiscard]] std::uint64_t periods() const { return k_; }

 private:
  __extension__ typedef unsigned __int128 Units;

  LaserAnalogParams params_;
  Units delta_units_ = 0;
  Units quantum_units_ = 0;
  int scale_exponent_ = 0;  // one unit == 2^scale_exponent J
  Units acc_ = 0;
  std::uint64_t k_ = 0;
};

// Pump `n` periods of `gen` into `sink(k, out)`.
template <PeriodGenerator G, class Sink>
void stream_periods(G& gen, std::uint64_t n, Sink&& sink) {
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t k = gen.periods();
    const PeriodOutput out = gen.next();
    sink(k, out);
  }
}

struct DissipationSeries {
  std::uint64_t n = 0;
  std::vector<double> samples;  // per-period dissipated energy, zero when no event
  std::vector<DissipationEvent> events;
  EnergyState initial_state;
  EnergyState final_state;  // energy (clock), accumulator residue (laser), 0 (Poisson)
  double input_per_period = 0.0;  // long-run mean input
  double input_total = 0.0;       // realized input over the n periods
};

// Upper bound on samples a generator may materialize. Longer runs must stream.
struct MemoryBudget {
  std::uint64_t max_samples = std::uint64_t{1} << 27;
};

DissipationSeries gen_clock_series(const ClockParams& params, std::uint64_t seed, std::uint64_t n,
                                   MemoryBudget budget = {});
DissipationSeries gen_poisson_series(const PoissonParams& params, std::uint64_t seed,
                                     std::uint64_t n, MemoryBudget budget = {});
DissipationSeries gen_laser_series(const LaserAnalogParams& params, std::uint64_t n,
                                   MemoryBudget budget = {});

}  // namespace quietclock
