#pragma once

// Run configuration and its JSON form.
//
// Schema (all keys optional unless noted; unknown keys are rejected):
//
//   {
//     "model": "clock" | "poisson" | "laser",                     required
//     "periods": <integer >= 1>,                                   required
//     "seed": <integer>, "burn_in": <integer>,
//     "clock":   {"delta", "p", "w" (required for clock), "damping", "e0"},
//     "poisson": {"p", "mark" (required for poisson)},
//     "laser":   {"delta", "quantum" (required for laser)},
//     "psd": null | false | {"segment_len", "window", "bins_per_decade", "mean"},
//     "fano_windows": [<integer>...],
//     "histogram_bin_width": <integer>,
//     "outputs": ["psd", "summary", "events", "ledger"],
//     "out": "<directory>"
//   }
//
// Integers may also be given as strings or as integral doubles ("1e8", 1e8).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "quietclock/model.hpp"
#include "quietclock/spectral.hpp"

namespace quietclock {

enum class Model { clock, poisson, laser };
enum class MeanMode {
  analytic,  // subtract the process mean known from its parameters
  two_pass,  // regenerate from the seed after measuring the sample mean
};
enum class Artifact { psd, summary, events, ledger };

std::string_view to_string(Model model);
std::string_view to_string(MeanMode mode);
std::string_view to_string(Artifact artifact);
Model parse_model(std::string_view text);
MeanMode parse_mean_mode(std::string_view text);
Artifact parse_artifact(std::string_view text);

struct PsdConfig {
  std::size_t segment_len = 0;  // 0 picks default_segment_len()
  Window window = Window::rectangular;
  int bins_per_decade = 10;  // 0 writes one row per Fourier bin
  MeanMode mean_mode = MeanMode::analytic;
};

struct RunConfig {
  Model model = Model::clock;
  ClockParams clock;
  PoissonParams poisson;
  LaserAnalogParams laser;
  std::uint64_t periods = 0;
  std::uint64_t seed = 0;
  std::uint64_t burn_in = 0;
  std::optional<PsdConfig> psd;
  std::vector<std::uint64_t> fano_windows;
  std::uint64_t histogram_bin_width = 10;
  std::vector<Artifact> outputs;
  std::filesystem::path out_dir;

  [[nodiscard]] bool wants(Artifact artifact) const;
};

// Largest power of two M <= periods / 64, capped at 2^20 and at least 2^4.
std::size_t default_segment_len(std::uint64_t periods);

// Fano windows used when none are configured: 100, 1000, 10000 periods,
// keeping those that fit at least 10 times.
std::vector<std::uint64_t> default_fano_windows(std::uint64_t periods);

// Throws ConfigError on any violated invariant.
void validate(const RunConfig& config);

// Parses, fills defaults and validates. Errors name the missing or bad key.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);
nlohmann::json load_json_file(const std::filesystem::path& path);

// "<model>-<seed>-<12 hex digits of the config digest>"; the output directory
// does not enter the digest.
std::string run_id(const RunConfig& config);

// Overwrites the value at a dotted key path such as "clock.p".
void set_by_path(nlohmann::json& doc, std::string_view dotted_key, const nlohmann::json& value);

// Default output root: $QUIETCLOCK_OUT, else "runs".
std::filesystem::path default_output_root();

}  // namespace quietclock
