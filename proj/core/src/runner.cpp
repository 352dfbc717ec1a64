#include "quietclock/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <numbers>
#include <thread>

#include "quietclock/errors.hpp"
#include "quietclock/output.hpp"
#include "quietclock/summation.hpp"

#ifndef QUIETCLOCK_VERSION
#define QUIETCLOCK_VERSION "unknown"
#endif

namespace quietclock {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunConfig resolved(const RunConfig& input) {
  RunConfig config = input;
  validate(config);
  if (config.psd && config.psd->segment_len == 0) {
    config.psd->segment_len = default_segment_len(config.periods - config.burn_in);
  }
  if (config.out_dir.empty()) config.out_dir = default_output_root();
  return config;
}

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

template <class MakeGenerator>
RunResult execute(const RunConfig& config, MakeGenerator make_generator) {
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  result.run_id = run_id(config);
  result.manifest.started_utc = utc_now();
  const std::uint64_t n = config.periods - config.burn_in;
  result.analyzed_periods = n;

  const bool writing = !config.outputs.empty();
  if (writing) result.dir = prepare_dir(config.out_dir / result.run_id);

  auto gen = make_generator();
  stream_periods(gen, config.burn_in, [](std::uint64_t, const PeriodOutput&) {});

  std::optional<PsdEstimator> psd;
  if (config.psd) {
    const std::size_t m = config.psd->segment_len;
    double mean = process_mean(config);
    if (config.psd->mean_mode == MeanMode::two_pass) {
      auto first = make_generator();
      stream_periods(first, config.burn_in, [](std::uint64_t, const PeriodOutput&) {});
      const std::uint64_t used = n / m * m;
      CompensatedSum sum;
      stream_periods(first, used, [&](std::uint64_t, const PeriodOutput& out) { sum += out.sample; });
      mean = sum.value() / static_cast<double>(used);
    }
    psd.emplace(m, config.psd->window, mean);
  }

  LedgerAccumulator ledger(gen.stored());
  CompensatedSum stored_sum;
  std::vector<FanoAccumulator> fano;
  for (std::uint64_t w : config.fano_windows) fano.emplace_back(w);
  EventStatsAccumulator event_stats(config.histogram_bin_width);
  std::optional<EventsWriter> events_out;
  if (config.wants(Artifact::events)) events_out.emplace(result.dir / "events.csv");

  stream_periods(gen, n, [&](std::uint64_t k, const PeriodOutput& out) {
    ledger.add(out);
    stored_sum += out.stored_before;
    if (psd) psd->push(out.sample);
    for (FanoAccumulator& f : fano) f.add_period(out.events);
    for (std::uint64_t i = 0; i < out.events; ++i) {
      const DissipationEvent event{k, out.mark};
      event_stats.add(event);
      if (events_out) events_out->write(event);
    }
  });
  if (events_out) events_out->close();

  result.ledger = ledger.result(gen.stored());
  result.events = event_stats.events();
  result.mean_stored = stored_sum.value() / static_cast<double>(n);
  result.mean_power = result.ledger.dissipated_total / static_cast<double>(n);
  for (const FanoAccumulator& f : fano) result.fano.push_back(f.result());
  if (result.events >= 1) result.marks = event_stats.marks();
  if (result.events >= 2) result.gaps = event_stats.gaps();
  result.gap_mark_correlation = event_stats.gap_mark_correlation();

  if (psd) {
    result.psd = psd->result();
    result.reference = reference_spectrum(config, *result.psd);
    const int bpd = config.psd->bins_per_decade;
    if (bpd > 0) {
      result.psd_binned = log_bin(*result.psd, bpd);
      result.reference_binned = log_bin(*result.reference, bpd);
    }
  }

  RunManifest& manifest = result.manifest;
  manifest.run_id = result.run_id;
  manifest.config = to_json(config);
  manifest.config.erase("out");
  manifest.rng_algorithm = std::string(Rng::kAlgorithmId);
  manifest.code_version = std::string(code_version());
  manifest.periods = config.periods;
  manifest.analyzed_periods = n;
  manifest.events = result.events;
  manifest.segments = result.psd ? result.psd->segments : 0;

  if (writing) {
    if (config.wants(Artifact::psd)) {
      const bool binned = result.psd_binned.has_value();
      const auto rows = binned ? psd_rows(*result.psd_binned, *result.reference_binned)
                               : psd_rows(*result.psd, *result.reference);
      write_psd_csv(result.dir / "psd.csv", rows);
    }
    if (config.wants(Artifact::summary)) {
      write_text(result.dir / "summary.json", result.summary(config).dump(2) + "\n");
    }
    if (config.wants(Artifact::ledger)) {
      const json doc = {{"input_total", result.ledger.input_total},
                        {"dissipated_total", result.ledger.dissipated_total},
                        {"stored_delta", result.ledger.stored_delta},
                        {"imbalance", result.ledger.imbalance()},
                        {"relative_imbalance", result.ledger.relative_imbalance()}};
      write_text(result.dir / "ledger.json", doc.dump(2) + "\n");
    }
    for (Artifact a : config.outputs) {
      const std::string name = a == Artifact::psd       ? "psd.csv"
                               : a == Artifact::events  ? "events.csv"
                               : a == Artifact::summary ? "summary.json"
                                                        : "ledger.json";
      manifest.digests[name] = sha256_file(result.dir / name);
    }
  }
  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (writing) write_text(result.dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return result;
}

std::string cell_text(const json& value) {
  if (value.is_number_float()) return format_double(value.get<double>());
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

std::string table_double(double x) { return std::isfinite(x) ? format_double(x) : "nan"; }

}  // namespace

std::string_view code_version() { return QUIETCLOCK_VERSION; }

json RunManifest::to_json() const {
  return {{"run_id", run_id},
          {"config", config},
          {"rng_algorithm", rng_algorithm},
          {"code_version", code_version},
          {"started_utc", started_utc},
          {"wall_time_s", wall_time_s},
          {"periods", periods},
          {"analyzed_periods", analyzed_periods},
          {"events", events},
          {"segments", segments},
          {"digests", digests}};
}

json RunResult::summary(const RunConfig& config) const {
  json doc;
  doc["run_id"] = run_id;
  doc["model"] = to_string(config.model);
  doc["seed"] = config.seed;
  doc["periods"] = config.periods;
  doc["analyzed_periods"] = analyzed_periods;
  doc["ledger"] = {{"input_total", ledger.input_total},
                   {"dissipated_total", ledger.dissipated_total},
                   {"stored_delta", ledger.stored_delta},
                   {"relative_imbalance", ledger.relative_imbalance()}};
  doc["mean_stored"] = mean_stored;
  if (config.model == Model::clock) doc["mean_energy_analytic"] = mean_energy(config.clock);
  doc["mean_power"] = mean_power;
  doc["event_count"] = events;
  doc["event_rate"] = static_cast<double>(events) / static_cast<double>(analyzed_periods);

  json fano_table = json::array();
  for (const CountingStats& c : fano) {
    fano_table.push_back({{"window", c.window},
                          {"windows", c.windows},
                          {"mean_count", c.mean_count},
                          {"var_count", c.var_count},
                          {"fano", c.fano}});
  }
  doc["fano"] = fano_table;

  if (gaps) {
    doc["gaps"] = {{"count", gaps->gaps},
                   {"mean", gaps->mean},
                   {"variance", gaps->variance},
                   {"histogram_bin_width", gaps->bin_width},
                   {"histogram", gaps->histogram},
                   {"overflow", gaps->overflow}};
  } else {
    doc["gaps"] = nullptr;
  }
  if (marks) {
    doc["marks"] = {{"count", marks->count},
                    {"mean", marks->mean},
                    {"variance", marks->variance},
                    {"min", marks->min},
                    {"max", marks->max}};
  } else {
    doc["marks"] = nullptr;
  }
  doc["gap_mark_correlation"] = number_or_null(gap_mark_correlation);

  if (psd) {
    json section = {{"segment_len", psd->segment_len},
                    {"segments", psd->segments},
                    {"window", to_string(psd->window)},
                    {"plateau_mean", number_or_null(band_mean(*psd, 1.0, std::numbers::pi))},
                    {"reference_plateau",
                     number_or_null(band_mean(*reference, 1.0, std::numbers::pi))}};
    const PsdEstimate& low = psd_binned ? *psd_binned : *psd;
    const PsdEstimate& low_ref = psd_binned ? *reference_binned : *reference;
    section["lowest_band"] = {{"omega", low.freqs.front()},
                              {"s_est", low.values.front()},
                              {"s_reference", low_ref.values.front()}};
    section["corner_fit"] = nullptr;
    if (config.model == Model::clock) {
      try {
        const CornerFit fit = fit_corner(low);
        section["corner_fit"] = {{"plateau", fit.plateau}, {"corner", fit.corner}};
      } catch (const std::domain_error&) {
      }
      section["analytic_corner"] = config.clock.p * config.clock.w;
    }
    doc["psd"] = section;
  } else {
    doc["psd"] = nullptr;
  }
  return doc;
}

double process_mean(const RunConfig& config) {
  switch (config.model) {
    case Model::clock: return config.clock.delta;
    case Model::poisson: return config.poisson.p * config.poisson.mark;
    case Model::laser: return config.laser.delta;
  }
  return 0.0;
}

PsdEstimate reference_spectrum(const RunConfig& config, const PsdEstimate& grid) {
  if (config.model == Model::clock) return analytic_on_grid(config.clock, grid);
  PsdEstimate out = grid;
  out.dc = 0.0;
  out.bands.clear();
  double level = 0.0;
  if (config.model == Model::poisson) {
    const PoissonParams& p = config.poisson;
    level = p.mark * p.mark * p.p * (1.0 - p.p);
  } else {
    const double rate = config.laser.delta / config.laser.quantum;
    if (rate < 1.0) level = config.laser.quantum * config.laser.quantum * rate * (1.0 - rate);
  }
  std::fill(out.values.begin(), out.values.end(), level);
  return out;
}

RunResult run_single(const RunConfig& input) {
  const RunConfig config = resolved(input);
  switch (config.model) {
    case Model::clock:
      return execute(config, [&] { return ClockGenerator(config.clock, config.seed); });
    case Model::poisson:
      return execute(config, [&] { return PoissonGenerator(config.poisson, config.seed); });
    case Model::laser:
      return execute(config, [&] { return LaserGenerator(config.laser); });
  }
  throw ConfigError("unknown model");
}

std::vector<std::string> SweepReport::table_header() const {
  std::vector<std::string> header{"cell", "seed", "status"};
  for (const SweepAxis& axis : grid) header.push_back(axis.key);
  for (const char* col : {"run_id", "events", "mean_stored", "mean_power", "plateau", "corner_fit",
                          "analytic_corner", "error"}) {
    header.emplace_back(col);
  }
  return header;
}

std::vector<std::vector<std::string>> SweepReport::table_rows() const {
  std::vector<std::vector<std::string>> rows;
  for (const SweepCell& cell : cells) {
    std::vector<std::string> row{std::to_string(cell.index), std::to_string(cell.seed),
                                 cell.ok ? "ok" : "failed"};
    for (const json& v : cell.values) row.push_back(cell_text(v));
    row.push_back(cell.run_id);
    row.push_back(std::to_string(cell.events));
    row.push_back(table_double(cell.mean_stored));
    row.push_back(table_double(cell.mean_power));
    row.push_back(table_double(cell.plateau));
    row.push_back(table_double(cell.corner_fit));
    row.push_back(table_double(cell.analytic_corner));
    std::string error = cell.error;
    for (char& ch : error) {
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    row.push_back(error);
    rows.push_back(std::move(row));
  }
  return rows;
}

SweepReport run_sweep(const RunConfig& base_input, const std::vector<SweepAxis>& grid,
                      unsigned workers) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  std::size_t total = 1;
  for (const SweepAxis& axis : grid) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.key + "' has no values");
    total *= axis.values.size();
  }

  RunConfig base = base_input;
  if (base.out_dir.empty()) base.out_dir = default_output_root();
  json base_doc = to_json(base);
  base_doc.erase("out");
  json grid_doc = json::array();
  for (const SweepAxis& axis : grid) grid_doc.push_back({{"key", axis.key}, {"values", axis.values}});

  SweepReport report;
  report.grid = grid;
  report.sweep_id = "sweep-" + sha256_hex(base_doc.dump() + grid_doc.dump()).substr(0, 12);
  report.dir = prepare_dir(base.out_dir / report.sweep_id);
  report.cells.resize(total);

  auto run_cell = [&](std::size_t index) {
    SweepCell& cell = report.cells[index];
    cell.index = index;
    cell.seed = derive_seed(base.seed, index);
    cell.corner_fit = kNaN;
    cell.analytic_corner = kNaN;
    cell.plateau = kNaN;
    json doc = base_doc;
    std::size_t rest = index;
    cell.values.resize(grid.size());
    for (std::size_t a = grid.size(); a-- > 0;) {
      cell.values[a] = grid[a].values[rest % grid[a].values.size()];
      rest /= grid[a].values.size();
    }
    try {
      bool seed_axis = false;
      for (std::size_t a = 0; a < grid.size(); ++a) {
        set_by_path(doc, grid[a].key, cell.values[a]);
        seed_axis = seed_axis || grid[a].key == "seed";
      }
      if (!seed_axis) doc["seed"] = cell.seed;
      RunConfig config = run_config_from_json(doc);
      cell.seed = config.seed;
      config.out_dir = report.dir;
      const RunResult result = run_single(config);
      cell.run_id = result.run_id;
      cell.events = result.events;
      cell.mean_stored = result.mean_stored;
      cell.mean_power = result.mean_power;
      if (result.psd) {
        cell.plateau = band_mean(*result.psd, 1.0, std::numbers::pi);
        if (config.model == Model::clock) {
          cell.analytic_corner = config.clock.p * config.clock.w;
          try {
            cell.corner_fit = fit_corner(result.psd_binned ? *result.psd_binned : *result.psd).corner;
          } catch (const std::domain_error&) {
          }
        }
      }
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  };

  const unsigned pool = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(total)));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < pool; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < total; i = next++) run_cell(i);
      });
    }
  }

  write_table(report.dir / "sweep.csv", report.table_header(), report.table_rows());
  return report;
}

SweepSpec sweep_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep configuration must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "base" && key != "grid" && key != "workers") {
      throw ConfigError("unknown sweep setting '" + key + "'");
    }
  }
  if (!doc.contains("base")) throw ConfigError("missing required setting 'base'");
  if (!doc.contains("grid") || !doc["grid"].is_object()) {
    throw ConfigError("setting 'grid' must be an object of key -> value list");
  }
  SweepSpec spec;
  spec.base = run_config_from_json(doc["base"]);
  for (const auto& [key, values] : doc["grid"].items()) {
    if (!values.is_array()) throw ConfigError("sweep axis '" + key + "' must be a list");
    spec.grid.push_back({key, std::vector<json>(values.begin(), values.end())});
  }
  if (spec.grid.empty()) throw ConfigError("sweep grid is empty");
  if (doc.contains("workers")) {
    const json& w = doc["workers"];
    if (!w.is_number_integer() || w.get<std::int64_t>() <= 0) {
      throw ConfigError("setting 'workers': expected a positive integer");
    }
    spec.workers = w.get<unsigned>();
  }
  return spec;
}

}  // namespace quietclock
