#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <locale>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quietclock/config.hpp"
#include "quietclock/errors.hpp"
#include "quietclock/output.hpp"
#include "quietclock/runner.hpp"
#include "quietclock/spectral.hpp"

namespace quietclock::cli {

namespace {

using nlohmann::json;

// Config keys and the flags that set them, for error messages.
const std::map<std::string, std::string>& flag_for_setting() {
  static const std::map<std::string, std::string> table{
      {"model", "--model"},         {"periods", "--periods"},     {"clock.p", "--p"},
      {"clock.w", "--w"},           {"clock.delta", "--delta"},   {"poisson.p", "--p"},
      {"poisson.mark", "--mark"},   {"laser.delta", "--delta"},   {"laser.quantum", "--quantum"},
      {"psd.segment_len", "--segment-len"}, {"burn_in", "--burn-in"},
  };
  return table;
}

std::string with_flag_hint(const std::string& message) {
  for (const auto& [setting, flag] : flag_for_setting()) {
    if (message.find("'" + setting + "'") != std::string::npos) {
      return message + " (flag " + flag + ")";
    }
  }
  return message;
}

struct SimulateFlags {
  std::string config;
  std::optional<std::string> model, periods, seed, burn_in, p, w, delta, quantum, mark, damping, e0,
      segment_len, window, bins_per_decade, mean, histogram_bin_width, out;
  std::vector<std::string> fano_windows;
  std::vector<std::string> outputs;
  bool no_psd = false;
  bool events = false;
};

struct CompareFlags {
  std::string file;
  std::optional<std::string> p, w, delta;
  double tolerance = 0.10;
  std::optional<double> omega_min, omega_max;
  std::string estimate_column = "s_est";
  int bins_per_decade = 0;
};

struct SweepFlags {
  std::string config;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
};

json scalar(const std::string& text) {
  // Keep numbers as numbers so config validation sees the intended type.
  try {
    return parse_double(text);
  } catch (const ConfigError&) {
    return text;
  }
}

json simulate_document(const SimulateFlags& f) {
  json doc = f.config.empty() ? json::object() : load_json_file(f.config);
  if (!doc.is_object()) throw ConfigError("--config: run configuration must be a JSON object");

  if (f.model) doc["model"] = *f.model;
  if (!doc.contains("model")) throw ConfigError("missing required setting 'model'");
  if (!doc["model"].is_string()) throw ConfigError("setting 'model': expected a string");
  const Model model = parse_model(doc["model"].get<std::string>());
  const std::string section(to_string(model));

  auto put = [&](const std::optional<std::string>& value, const char* flag, const char* key,
                 std::initializer_list<Model> applies) {
    if (!value) return;
    if (std::find(applies.begin(), applies.end(), model) == applies.end()) {
      throw ConfigError(std::string("flag ") + flag + " does not apply to model " + section);
    }
    set_by_path(doc, section + "." + key, scalar(*value));
  };
  put(f.p, "--p", "p", {Model::clock, Model::poisson});
  put(f.w, "--w", "w", {Model::clock});
  put(f.delta, "--delta", "delta", {Model::clock, Model::laser});
  put(f.quantum, "--quantum", "quantum", {Model::laser});
  put(f.mark, "--mark", "mark", {Model::poisson});
  put(f.e0, "--e0", "e0", {Model::clock});
  if (f.damping) put(f.damping, "--damping", "damping", {Model::clock});

  if (f.periods) doc["periods"] = *f.periods;
  if (f.seed) doc["seed"] = *f.seed;
  if (f.burn_in) doc["burn_in"] = *f.burn_in;
  if (f.histogram_bin_width) doc["histogram_bin_width"] = *f.histogram_bin_width;
  if (!f.fano_windows.empty()) {
    json windows = json::array();
    for (const std::string& w : f.fano_windows) windows.push_back(w);
    doc["fano_windows"] = windows;
  }

  const bool psd_flags = f.segment_len || f.window || f.bins_per_decade || f.mean;
  if (f.no_psd && psd_flags) throw ConfigError("--no-psd conflicts with spectral options");
  if (f.no_psd) doc["psd"] = false;
  if (psd_flags) {
    if (!doc.contains("psd") || !doc["psd"].is_object()) doc["psd"] = json::object();
    if (f.segment_len) doc["psd"]["segment_len"] = *f.segment_len;
    if (f.window) doc["psd"]["window"] = *f.window;
    if (f.bins_per_decade) doc["psd"]["bins_per_decade"] = *f.bins_per_decade;
    if (f.mean) doc["psd"]["mean"] = *f.mean;
  }

  if (!f.outputs.empty()) {
    json outputs = json::array();
    for (const std::string& o : f.outputs) outputs.push_back(o);
    doc["outputs"] = outputs;
  }
  if (f.out) doc["out"] = *f.out;
  return doc;
}

void print_summary(std::ostream& out, const RunConfig& config, const RunResult& r) {
  out << "run_id " << r.run_id << '\n';
  if (!r.dir.empty()) out << "artifacts " << r.dir.string() << '\n';
  out << "model " << to_string(config.model) << '\n';
  out << "periods " << r.analyzed_periods << '\n';
  out << "events " << r.events << '\n';
  out << "event_rate " << format_double(static_cast<double>(r.events) /
                                        static_cast<double>(r.analyzed_periods))
      << '\n';
  out << "mean_power " << format_double(r.mean_power) << '\n';
  out << "mean_stored " << format_double(r.mean_stored) << '\n';
  if (config.model == Model::clock) {
    out << "mean_energy_analytic " << format_double(mean_energy(config.clock)) << '\n';
  }
  out << "ledger input=" << format_double(r.ledger.input_total)
      << " dissipated=" << format_double(r.ledger.dissipated_total)
      << " stored_delta=" << format_double(r.ledger.stored_delta)
      << " relative_imbalance=" << format_double(r.ledger.relative_imbalance()) << '\n';
  if (r.gaps) {
    out << "gap mean=" << format_double(r.gaps->mean)
        << " variance=" << format_double(r.gaps->variance) << '\n';
  }
  if (r.marks) {
    out << "mark mean=" << format_double(r.marks->mean)
        << " variance=" << format_double(r.marks->variance) << '\n';
  }
  if (!r.fano.empty()) {
    out << "fano window,windows,mean_count,var_count,fano\n";
    for (const CountingStats& c : r.fano) {
      out << "fano " << c.window << ',' << c.windows << ',' << format_double(c.mean_count) << ','
          << format_double(c.var_count) << ',' << format_double(c.fano) << '\n';
    }
  }
  if (r.psd) {
    out << "psd segments=" << r.psd->segments << " segment_len=" << r.psd->segment_len
        << " plateau_mean=" << format_double(band_mean(*r.psd, 1.0, std::numbers::pi))
        << " reference_plateau=" << format_double(band_mean(*r.reference, 1.0, std::numbers::pi))
        << '\n';
  }
}

int cmd_simulate(const SimulateFlags& flags, std::ostream& out) {
  RunConfig config = run_config_from_json(simulate_document(flags));
  if (flags.events && !config.wants(Artifact::events)) config.outputs.push_back(Artifact::events);
  const RunResult result = run_single(config);
  print_summary(out, config, result);
  return kExitOk;
}

PsdEstimate column_estimate(const std::vector<PsdRow>& rows, bool analytic_column) {
  PsdEstimate est;
  for (const PsdRow& row : rows) {
    est.freqs.push_back(row.omega);
    est.values.push_back(analytic_column ? row.s_analytic : row.s_est);
  }
  est.segments = rows.front().n_segments;
  return est;
}

int cmd_compare(const CompareFlags& f, std::ostream& out) {
  const int given = (f.p ? 1 : 0) + (f.w ? 1 : 0) + (f.delta ? 1 : 0);
  if (given != 0 && given != 3) throw ConfigError("--p, --w and --delta must be given together");
  if (f.estimate_column != "s_est" && f.estimate_column != "s_analytic") {
    throw ConfigError("--estimate-column must be s_est or s_analytic");
  }
  if (!(f.tolerance > 0.0)) throw ConfigError("--tolerance must be > 0");
  if (f.bins_per_decade < 0) throw ConfigError("--bins-per-decade must be >= 0");

  std::optional<ClockParams> params;
  if (given == 3) {
    ClockParams c;
    c.p = parse_double(*f.p);
    c.w = parse_double(*f.w);
    c.delta = parse_double(*f.delta);
    validate(c);
    params = c;
  }

  const std::vector<PsdRow> rows = read_psd_csv(f.file);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].omega > 0.0) || (i > 0 && !(rows[i].omega > rows[i - 1].omega))) {
      throw ConfigError(f.file + ": omega column must be positive and strictly increasing");
    }
  }
  PsdEstimate estimate = column_estimate(rows, f.estimate_column == "s_analytic");
  PsdEstimate reference = params ? analytic_on_grid(*params, estimate) : column_estimate(rows, true);
  if (f.bins_per_decade > 0) {
    estimate = log_bin(estimate, f.bins_per_decade);
    reference = log_bin(reference, f.bins_per_decade);
  }

  const double lo = f.omega_min.value_or(0.0);
  const double hi = f.omega_max.value_or(std::numeric_limits<double>::infinity());
  double max_dev = 0.0;
  std::size_t checked = 0;
  std::size_t failed = 0;
  out << "omega,f,s_est,s_ref,ratio,status\n";
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double omega = estimate.freqs[i];
    if (omega < lo || omega > hi) continue;
    const double ref = reference.values[i];
    const double ratio = ref != 0.0 ? estimate.values[i] / ref
                                    : (estimate.values[i] == 0.0 ? 1.0
                                                                 : std::numeric_limits<double>::infinity());
    const double dev = std::fabs(ratio - 1.0);
    const bool ok = dev <= f.tolerance;
    max_dev = std::max(max_dev, dev);
    ++checked;
    if (!ok) ++failed;
    out << format_double(omega) << ',' << format_double(omega / (2.0 * std::numbers::pi)) << ','
        << format_double(estimate.values[i]) << ',' << format_double(ref) << ','
        << format_double(ratio) << ',' << (ok ? "ok" : "FAIL") << '\n';
  }
  if (checked == 0) throw ConfigError("no rows fall inside the requested omega range");

  out << "bands " << checked << " failed " << failed << '\n';
  out << "max_deviation " << format_double(max_dev) << " tolerance " << format_double(f.tolerance)
      << '\n';
  try {
    const double fitted = fit_corner(estimate, std::min(hi, 1.0)).corner;
    double expected = std::numeric_limits<double>::quiet_NaN();
    if (params) {
      expected = params->p * params->w;
    } else {
      expected = fit_corner(reference, std::min(hi, 1.0)).corner;
    }
    out << "corner fitted=" << format_double(fitted) << " expected=" << format_double(expected)
        << " shift=" << format_double(fitted / expected) << '\n';
  } catch (const std::domain_error&) {
    out << "corner unavailable\n";
  }
  out << "result " << (failed == 0 ? "PASS" : "FAIL") << '\n';
  return failed == 0 ? kExitOk : kExitCompareFailed;
}

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
  SweepSpec spec = sweep_spec_from_json(load_json_file(f.config));
  if (f.workers) {
    if (*f.workers == 0) throw ConfigError("--workers must be >= 1");
    spec.workers = *f.workers;
  }
  if (f.out) spec.base.out_dir = *f.out;
  const SweepReport report = run_sweep(spec.base, spec.grid, spec.workers);
  out << "sweep_id " << report.sweep_id << '\n';
  out << "artifacts " << report.dir.string() << '\n';
  const auto header = report.table_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : report.table_rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  std::size_t failed = 0;
  for (const SweepCell& c : report.cells) failed += c.ok ? 0 : 1;
  out << "cells " << report.cells.size() << " failed " << failed << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // Integer counts are streamed directly; keep them free of digit grouping.
  const std::locale previous = out.imbue(std::locale::classic());
  struct Restore {
    std::ostream& stream;
    const std::locale& locale;
    ~Restore() { stream.imbue(locale); }
  } restore{out, previous};

  CLI::App app{"Quiet-oscillator simulator: dissipated-power spectra and counting statistics"};
  app.require_subcommand(1);

  SimulateFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run one seeded simulation");
  simulate->add_option("--config", sim.config, "JSON run configuration (flags override it)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--model", sim.model, "clock | poisson | laser");
  simulate->add_option("--periods", sim.periods, "Number of periods (1e8 notation accepted)");
  simulate->add_option("--seed", sim.seed, "64-bit generator seed");
  simulate->add_option("--burn-in", sim.burn_in, "Periods discarded before analysis");
  simulate->add_option("--p", sim.p, "Event probability per period (clock, poisson)");
  simulate->add_option("--w", sim.w, "Molecule-to-bob weight ratio (clock)");
  simulate->add_option("--delta", sim.delta, "Input energy per period in J (clock, laser)");
  simulate->add_option("--quantum", sim.quantum, "Event energy in J (laser)");
  simulate->add_option("--mark", sim.mark, "Event energy in J (poisson)");
  simulate->add_option("--damping", sim.damping, "linearized | exact (clock)");
  simulate->add_option("--e0", sim.e0, "Initial energy in J (clock; default delta/(p w))");
  simulate->add_option("--segment-len", sim.segment_len, "Spectral segment length, power of two");
  simulate->add_option("--window", sim.window, "rectangular | hann");
  simulate->add_option("--bins-per-decade", sim.bins_per_decade, "Log bins for psd.csv; 0 = raw");
  simulate->add_option("--mean", sim.mean, "analytic | two_pass mean subtraction");
  simulate->add_flag("--no-psd", sim.no_psd, "Skip spectral estimation");
  simulate->add_option("--fano-windows", sim.fano_windows, "Counting windows in periods")
      ->delimiter(',');
  simulate->add_option("--histogram-bin-width", sim.histogram_bin_width, "Gap histogram bin width");
  simulate->add_option("--outputs", sim.outputs, "Artifacts: psd,summary,events,ledger")
      ->delimiter(',');
  simulate->add_flag("--events", sim.events, "Also write events.csv");
  simulate->add_option("--out", sim.out, "Output root (default $QUIETCLOCK_OUT or ./runs)");

  CompareFlags cmp;
  CLI::App* compare = app.add_subcommand("compare", "Compare a psd file against the analytic curve");
  compare->add_option("file", cmp.file, "psd.csv to check")->required();
  compare->add_option("--p", cmp.p, "Recompute the reference from these parameters");
  compare->add_option("--w", cmp.w);
  compare->add_option("--delta", cmp.delta);
  compare->add_option("--tolerance", cmp.tolerance, "Allowed |ratio - 1| per band")
      ->capture_default_str();
  compare->add_option("--omega-min", cmp.omega_min);
  compare->add_option("--omega-max", cmp.omega_max);
  compare->add_option("--estimate-column", cmp.estimate_column, "s_est | s_analytic")
      ->capture_default_str();
  compare->add_option("--bins-per-decade", cmp.bins_per_decade, "Re-bin rows before comparing");

  SweepFlags swp;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("--config", swp.config, "JSON sweep configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--workers", swp.workers, "Parallel cells");
  sweep->add_option("--out", swp.out, "Output root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return kExitConfigError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (compare->parsed()) return cmd_compare(cmp, out);
    return cmd_sweep(swp, out);
  } catch (const ConfigError& e) {
    err << "error: " << with_flag_hint(e.what()) << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace quietclock::cli
