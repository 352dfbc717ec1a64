#include "quietclock/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>

#include "quietclock/errors.hpp"
#include "quietclock/output.hpp"

namespace quietclock {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("setting '" + key + "': " + what);
}

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown setting '" + prefix + key + "'");
    }
  }
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number_of(const json& value, const std::string& key) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    try {
      return parse_double(value.get<std::string>());
    } catch (const ConfigError&) {
    }
  }
  bad(key, "expected a number");
}

std::uint64_t uint_of(const json& value, const std::string& key) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer()) {
    if (value.get<std::int64_t>() < 0) bad(key, "expected a non-negative integer");
    return value.get<std::uint64_t>();
  }
  try {
    if (value.is_number_float()) return parse_uint(format_double(value.get<double>()));
    if (value.is_string()) return parse_uint(value.get<std::string>());
  } catch (const ConfigError&) {
  }
  bad(key, "expected a non-negative integer");
}

std::string string_of(const json& value, const std::string& key) {
  if (!value.is_string()) bad(key, "expected a string");
  return value.get<std::string>();
}

double required_number(const json& obj, const std::string& section, const std::string& key) {
  const std::string full = section + "." + key;
  const json* v = obj.is_object() ? find(obj, key) : nullptr;
  if (v == nullptr) throw ConfigError("missing required setting '" + full + "'");
  return number_of(*v, full);
}

template <class F>
void optional_key(const json& obj, const std::string& key, F&& apply) {
  if (!obj.is_object()) return;
  if (const json* v = find(obj, key); v != nullptr) apply(*v);
}

std::uint64_t analyzed(const RunConfig& c) { return c.periods - c.burn_in; }

void resolve(RunConfig& config, bool psd_auto, bool outputs_auto) {
  const std::uint64_t n = analyzed(config);
  if (psd_auto && n >= 1024) config.psd = PsdConfig{};
  if (config.psd && config.psd->segment_len == 0) {
    config.psd->segment_len = default_segment_len(n);
  }
  if (config.fano_windows.empty()) config.fano_windows = default_fano_windows(n);
  if (outputs_auto) {
    config.outputs = {Artifact::summary, Artifact::ledger};
    if (config.psd) config.outputs.insert(config.outputs.begin(), Artifact::psd);
  }
}

}  // namespace

std::string_view to_string(Model model) {
  switch (model) {
    case Model::clock: return "clock";
    case Model::poisson: return "poisson";
    case Model::laser: return "laser";
  }
  return "?";
}

std::string_view to_string(MeanMode mode) {
  return mode == MeanMode::two_pass ? "two_pass" : "analytic";
}

std::string_view to_string(Artifact artifact) {
  switch (artifact) {
    case Artifact::psd: return "psd";
    case Artifact::summary: return "summary";
    case Artifact::events: return "events";
    case Artifact::ledger: return "ledger";
  }
  return "?";
}

Model parse_model(std::string_view text) {
  if (text == "clock") return Model::clock;
  if (text == "poisson") return Model::poisson;
  if (text == "laser") return Model::laser;
  throw ConfigError("model must be clock, poisson or laser, got '" + std::string(text) + "'");
}

MeanMode parse_mean_mode(std::string_view text) {
  if (text == "analytic") return MeanMode::analytic;
  if (text == "two_pass" || text == "two-pass") return MeanMode::two_pass;
  throw ConfigError("mean mode must be 'analytic' or 'two_pass', got '" + std::string(text) + "'");
}

Artifact parse_artifact(std::string_view text) {
  if (text == "psd") return Artifact::psd;
  if (text == "summary") return Artifact::summary;
  if (text == "events") return Artifact::events;
  if (text == "ledger") return Artifact::ledger;
  throw ConfigError("unknown output kind '" + std::string(text) + "'");
}

bool RunConfig::wants(Artifact artifact) const {
  return std::find(outputs.begin(), outputs.end(), artifact) != outputs.end();
}

std::size_t default_segment_len(std::uint64_t periods) {
  std::size_t m = 16;
  while (m < (std::size_t{1} << 20) && 2 * m <= periods / 64) m *= 2;
  return m;
}

std::vector<std::uint64_t> default_fano_windows(std::uint64_t periods) {
  std::vector<std::uint64_t> windows;
  for (std::uint64_t w : {100ULL, 1000ULL, 10000ULL}) {
    if (periods / w >= 10) windows.push_back(w);
  }
  return windows;
}

void validate(const RunConfig& config) {
  if (config.periods == 0) throw ConfigError("setting 'periods': must be >= 1");
  if (config.burn_in >= config.periods) {
    throw ConfigError("setting 'burn_in': must be smaller than 'periods'");
  }
  switch (config.model) {
    case Model::clock: validate(config.clock); break;
    case Model::poisson: validate(config.poisson); break;
    case Model::laser: validate(config.laser); break;
  }
  const std::uint64_t n = analyzed(config);
  if (config.psd) {
    const std::size_t m = config.psd->segment_len;
    if (m != 0 && (m < 2 || !is_power_of_two(m))) {
      throw ConfigError("setting 'psd.segment_len': must be a power of two >= 2");
    }
    if (m > n) {
      throw ConfigError("setting 'psd.segment_len': " + std::to_string(m) +
                        " exceeds the " + std::to_string(n) + " analyzed periods");
    }
    if (config.psd->bins_per_decade < 0) {
      throw ConfigError("setting 'psd.bins_per_decade': must be >= 0");
    }
  } else if (config.wants(Artifact::psd)) {
    throw ConfigError("output 'psd' requested but spectral estimation is disabled");
  }
  for (std::uint64_t w : config.fano_windows) {
    if (w == 0 || n / w < 10) {
      throw ConfigError("setting 'fano_windows': window " + std::to_string(w) +
                        " needs at least 10 windows within " + std::to_string(n) + " periods");
    }
  }
  if (config.histogram_bin_width == 0) {
    throw ConfigError("setting 'histogram_bin_width': must be >= 1");
  }
}

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("run configuration must be a JSON object");
  reject_unknown(doc, "", {"model", "periods", "seed", "burn_in", "clock", "poisson", "laser", "psd",
                           "fano_windows", "histogram_bin_width", "outputs", "out"});
  RunConfig c;

  const json* model = find(doc, "model");
  if (model == nullptr) throw ConfigError("missing required setting 'model'");
  c.model = parse_model(string_of(*model, "model"));

  const json* periods = find(doc, "periods");
  if (periods == nullptr) throw ConfigError("missing required setting 'periods'");
  c.periods = uint_of(*periods, "periods");
  optional_key(doc, "seed", [&](const json& v) { c.seed = uint_of(v, "seed"); });
  optional_key(doc, "burn_in", [&](const json& v) { c.burn_in = uint_of(v, "burn_in"); });

  const json empty = json::object();
  const json& clock = doc.contains("clock") ? doc["clock"] : empty;
  const json& poisson = doc.contains("poisson") ? doc["poisson"] : empty;
  const json& laser = doc.contains("laser") ? doc["laser"] : empty;
  const std::pair<const char*, const json*> sections[] = {
      {"clock", &clock}, {"poisson", &poisson}, {"laser", &laser}};
  for (const auto& [name, section] : sections) {
    if (!section->is_object()) {
      throw ConfigError(std::string("setting '") + name + "' must be an object");
    }
  }
  reject_unknown(clock, "clock.", {"delta", "p", "w", "damping", "e0"});
  reject_unknown(poisson, "poisson.", {"p", "mark"});
  reject_unknown(laser, "laser.", {"delta", "quantum"});

  // Only the selected model's parameters are required.
  auto clock_number = [&](const char* key, double& dst) {
    if (c.model == Model::clock) {
      dst = required_number(clock, "clock", key);
    } else {
      optional_key(clock, key, [&](const json& v) { dst = number_of(v, std::string("clock.") + key); });
    }
  };
  clock_number("delta", c.clock.delta);
  clock_number("p", c.clock.p);
  clock_number("w", c.clock.w);
  optional_key(clock, "damping", [&](const json& v) {
    c.clock.damping_rule = parse_damping_rule(string_of(v, "clock.damping"));
  });
  optional_key(clock, "e0", [&](const json& v) {
    if (!v.is_null()) c.clock.e0 = number_of(v, "clock.e0");
  });

  if (c.model == Model::poisson) {
    c.poisson.p = required_number(poisson, "poisson", "p");
    c.poisson.mark = required_number(poisson, "poisson", "mark");
  }
  if (c.model == Model::laser) {
    c.laser.delta = required_number(laser, "laser", "delta");
    c.laser.quantum = required_number(laser, "laser", "quantum");
  }

  bool psd_auto = true;
  if (const json* psd = find(doc, "psd"); psd != nullptr) {
    psd_auto = false;
    if (psd->is_object()) {
      reject_unknown(*psd, "psd.", {"segment_len", "window", "bins_per_decade", "mean"});
      PsdConfig p;
      optional_key(*psd, "segment_len",
                   [&](const json& v) { p.segment_len = uint_of(v, "psd.segment_len"); });
      optional_key(*psd, "window",
                   [&](const json& v) { p.window = parse_window(string_of(v, "psd.window")); });
      optional_key(*psd, "bins_per_decade", [&](const json& v) {
        p.bins_per_decade = static_cast<int>(uint_of(v, "psd.bins_per_decade"));
      });
      optional_key(*psd, "mean",
                   [&](const json& v) { p.mean_mode = parse_mean_mode(string_of(v, "psd.mean")); });
      c.psd = p;
    } else if (psd->is_boolean() && psd->get<bool>()) {
      c.psd = PsdConfig{};
    } else if (!psd->is_null() && !psd->is_boolean()) {
      bad("psd", "expected an object, true, false or null");
    }
  }

  optional_key(doc, "fano_windows", [&](const json& v) {
    if (!v.is_array()) bad("fano_windows", "expected an array of integers");
    for (const json& w : v) c.fano_windows.push_back(uint_of(w, "fano_windows"));
  });
  optional_key(doc, "histogram_bin_width",
               [&](const json& v) { c.histogram_bin_width = uint_of(v, "histogram_bin_width"); });

  bool outputs_auto = true;
  optional_key(doc, "outputs", [&](const json& v) {
    if (!v.is_array()) bad("outputs", "expected an array of strings");
    outputs_auto = false;
    std::set<Artifact> seen;
    for (const json& item : v) {
      const Artifact a = parse_artifact(string_of(item, "outputs"));
      if (seen.insert(a).second) c.outputs.push_back(a);
    }
  });
  optional_key(doc, "out", [&](const json& v) { c.out_dir = string_of(v, "out"); });

  // Range checks that must hold before defaults are derived from them.
  if (c.periods == 0) throw ConfigError("setting 'periods': must be >= 1");
  if (c.burn_in >= c.periods) throw ConfigError("setting 'burn_in': must be smaller than 'periods'");
  resolve(c, psd_auto, outputs_auto);
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  json doc;
  doc["model"] = to_string(c.model);
  doc["periods"] = c.periods;
  doc["seed"] = c.seed;
  doc["burn_in"] = c.burn_in;
  switch (c.model) {
    case Model::clock:
      doc["clock"] = {{"delta", c.clock.delta},
                      {"p", c.clock.p},
                      {"w", c.clock.w},
                      {"damping", to_string(c.clock.damping_rule)},
                      {"e0", c.clock.e0 ? json(*c.clock.e0) : json(nullptr)}};
      break;
    case Model::poisson:
      doc["poisson"] = {{"p", c.poisson.p}, {"mark", c.poisson.mark}};
      break;
    case Model::laser:
      doc["laser"] = {{"delta", c.laser.delta}, {"quantum", c.laser.quantum}};
      break;
  }
  if (c.psd) {
    doc["psd"] = {{"segment_len", c.psd->segment_len},
                  {"window", to_string(c.psd->window)},
                  {"bins_per_decade", c.psd->bins_per_decade},
                  {"mean", to_string(c.psd->mean_mode)}};
  } else {
    doc["psd"] = nullptr;
  }
  doc["fano_windows"] = c.fano_windows;
  doc["histogram_bin_width"] = c.histogram_bin_width;
  json outputs = json::array();
  for (Artifact a : c.outputs) outputs.push_back(to_string(a));
  doc["outputs"] = outputs;
  if (!c.out_dir.empty()) doc["out"] = c.out_dir.string();
  return doc;
}

json load_json_file(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string run_id(const RunConfig& config) {
  json doc = to_json(config);
  doc.erase("out");
  return std::string(to_string(config.model)) + "-" + std::to_string(config.seed) + "-" +
         sha256_hex(doc.dump()).substr(0, 12);
}

void set_by_path(json& doc, std::string_view dotted_key, const json& value) {
  if (dotted_key.empty()) throw ConfigError("empty sweep key");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part(dotted_key.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (part.empty()) throw ConfigError("malformed sweep key '" + std::string(dotted_key) + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string_view::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("QUIETCLOCK_OUT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

}  // namespace quietclock
