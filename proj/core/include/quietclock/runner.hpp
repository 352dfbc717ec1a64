#pragma once

// Seeded runs and parameter sweeps.
//
// A run streams its generator once through the ledger, moment, counting and
// spectral accumulators, so memory does not grow with the period count. The
// spectral estimator needs the process mean up front: by default the mean
// known from the model parameters is used (for a rectangular window this only
// touches the omitted j = 0 bin); MeanMode::two_pass measures the sample mean
// first and regenerates the identical stream from the seed.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quietclock/config.hpp"
#include "quietclock/spectral.hpp"
#include "quietclock/stats.hpp"

namespace quietclock {

std::string_view code_version();

struct RunManifest {
  std::string run_id;
  nlohmann::json config;
  std::string rng_algorithm;
  std::string code_version;
  std::string started_utc;
  double wall_time_s = 0.0;
  std::uint64_t periods = 0;
  std::uint64_t analyzed_periods = 0;
  std::uint64_t events = 0;
  std::uint64_t segments = 0;
  std::map<std::string, std::string> digests;  // file name -> sha256

  [[nodiscard]] nlohmann::json to_json() const;
};

struct RunResult {
  std::string run_id;
  std::filesystem::path dir;  // empty when nothing was written
  RunLedger ledger;
  std::uint64_t analyzed_periods = 0;
  std::uint64_t events = 0;
  double mean_stored = 0.0;  // sample mean of the stored energy E_k at period starts
  double mean_power = 0.0;   // dissipated energy per period
  std::optional<PsdEstimate> psd;        // raw
  std::optional<PsdEstimate> reference;  // model reference curve on the raw grid
  std::optional<PsdEstimate> psd_binned;
  std::optional<PsdEstimate> reference_binned;
  std::vector<CountingStats> fano;
  std::optional<GapStats> gaps;
  std::optional<MarkStats> marks;
  double gap_mark_correlation = 0.0;  // NaN when undefined
  RunManifest manifest;

  // Deterministic content of summary.json (no timing information).
  [[nodiscard]] nlohmann::json summary(const RunConfig& config) const;
};

// Reference spectrum written next to the estimate: the analytic corner curve
// for the clock, the white level m^2 p (1-p) for Poisson, and the
// rate-matched Poisson level for the laser analog.
PsdEstimate reference_spectrum(const RunConfig& config, const PsdEstimate& grid);

// Mean input per period, subtracted by the streaming estimator.
double process_mean(const RunConfig& config);

// Validates, runs, and writes the requested artifacts under
// config.out_dir / run_id (config.out_dir empty: default_output_root()).
// Nothing is written when config.outputs is empty.
RunResult run_single(const RunConfig& config);

struct SweepAxis {
  std::string key;  // dotted path into the run configuration, e.g. "clock.p"
  std::vector<nlohmann::json> values;
};

struct SweepCell {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<nlohmann::json> values;  // one per axis
  bool ok = false;
  std::string error;
  std::string run_id;
  std::uint64_t events = 0;
  double mean_stored = 0.0;
  double mean_power = 0.0;
  double plateau = 0.0;          // mean estimate over omega in [1, pi]
  double corner_fit = 0.0;       // fitted corner frequency, NaN when unavailable
  double analytic_corner = 0.0;  // p w for the clock model, NaN otherwise
};

struct SweepReport {
  std::string sweep_id;
  std::filesystem::path dir;
  std::vector<SweepAxis> grid;
  std::vector<SweepCell> cells;

  [[nodiscard]] std::vector<std::string> table_header() const;
  [[nodiscard]] std::vector<std::vector<std::string>> table_rows() const;
};

// Runs the Cartesian product of the axes (first axis slowest). Cell i uses
// seed derive_seed(base.seed, i) unless "seed" is itself an axis, and writes
// under <out>/<sweep_id>/. A failing
// cell is recorded and the others still run. The report, and every artifact
// except manifests, is independent of `workers`.
SweepReport run_sweep(const RunConfig& base, const std::vector<SweepAxis>& grid,
                      unsigned workers = 1);

// {"base": {...run config...}, "grid": {"clock.p": [..], ...}, "workers": 2}
struct SweepSpec {
  RunConfig base;
  std::vector<SweepAxis> grid;
  unsigned workers = 1;
};
SweepSpec sweep_spec_from_json(const nlohmann::json& doc);

}  // namespace quietclock
