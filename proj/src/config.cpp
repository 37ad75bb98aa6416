#include "srb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <climits>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

namespace srb {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

TimeGrid RunConfig::grid() const { return TimeGrid::pulse_and_decay(duration, dt_pulse, t_end, dt_decay); }

Preparation RunConfig::preparation(double area_in_pi) const {
  Preparation p;
  p.mode = mode;
  p.pulse.area = area_in_pi * kPi;
  p.pulse.duration = duration;
  p.pulse.shape = shape;
  p.pulse.ramp = ramp;
  return p;
}

PhysicalParams RunConfig::physics_for(int n_atoms) const {
  PhysicalParams p = physics;
  p.n_atoms = n_atoms;
  return p;
}

DisorderPlan RunConfig::plan() const {
  DisorderPlan plan;
  plan.dist = {physics.beta_nominal, beta_std};
  plan.n_realizations = n_realizations;
  plan.seed = seed;
  return plan;
}

void RunConfig::validate() const {
  physics.validate();
  plan().dist.validate();
  if (n_phi < 1) throw ConfigError("physics.n_phi must be >= 1");
  if (n_realizations < 1) throw ConfigError("disorder.n_realizations must be >= 1");
  if (area_pi < 0.0 || !std::isfinite(area_pi)) throw ConfigError("pulse.area_pi must be >= 0");
  preparation().pulse.validate();
  if (!(dt_pulse > 0.0 && dt_decay > 0.0)) throw ConfigError("grid steps must be positive");
  if (!(t_end > 0.0)) throw ConfigError("grid.t_end must be positive");
  coherence.lo.validate();
  if (!(coherence.t_ref >= -duration && coherence.t_ref <= t_end)) throw ConfigError("heterodyne.t_ref outside the grid");
  if (!(coherence.fit_t_end > coherence.fit_t_begin)) throw ConfigError("heterodyne fit window is empty");
  if (!(coherence.sample_dt > 0.0 && coherence.max_lag > 0.0 && coherence.row_step > 0.0))
    throw ConfigError("heterodyne sampling steps must be positive");
  if (coherence.n_reps < 0) throw ConfigError("heterodyne.n_reps must be >= 0");
  if (coherence.n_reps == 1) throw ConfigError("heterodyne.n_reps must be 0 or >= 2");
  for (int n : scan.n_list)
    if (n < 1) throw ConfigError("scan.n_list entries must be >= 1");
  for (std::size_t i = 1; i < scan.n_list.size(); ++i)
    if (scan.n_list[i] <= scan.n_list[i - 1]) throw ConfigError("scan.n_list must be strictly ascending");
  for (double a : scan.area_list_pi)
    if (!(a >= 0.0 && a <= 2.5)) throw ConfigError("scan.area_list_pi entries must lie in [0, 2.5]");
}

namespace {

enum class Kind { number, integer, unsigned64, boolean, text, number_list, integer_list, text_list };

struct Field {
  const char* section;
  const char* key;
  Kind kind;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError("not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto t = trim(s);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError("not an integer: '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError("not an unsigned integer: '" + s + "'");
  return v;
}

int to_int32(const std::string& s) {
  const long long v = to_int(s);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError("integer out of range: '" + s + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  const auto t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

// shortest text that parses back to the same double
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

#define NUM(sec, name, expr) \
  Field{sec, name, Kind::number, [](RunConfig& c, const std::string& v) { expr = to_double(v); }, \
        [](const RunConfig& c) { return fmt(expr); }}
#define INT(sec, name, expr) \
  Field{sec, name, Kind::integer, [](RunConfig& c, const std::string& v) { expr = to_int32(v); }, \
        [](const RunConfig& c) { return std::to_string(expr); }}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      NUM("physics", "gamma", c.physics.gamma),
      NUM("physics", "beta_mean", c.physics.beta_nominal),
      NUM("physics", "beta_std", c.beta_std),
      INT("physics", "n_atoms", c.physics.n_atoms),
      INT("physics", "n_phi", c.n_phi),
      Field{"pulse", "mode", Kind::text,
            [](RunConfig& c, const std::string& v) {
              const auto t = trim(v);
              if (t == "driven") c.mode = Preparation::Mode::driven_pulse;
              else if (t == "ideal") c.mode = Preparation::Mode::ideal_instantaneous;
              else throw ConfigError("pulse.mode must be 'driven' or 'ideal'");
            },
            [](const RunConfig& c) {
              return std::string(c.mode == Preparation::Mode::driven_pulse ? "driven" : "ideal");
            }},
      NUM("pulse", "area_pi", c.area_pi),
      NUM("pulse", "duration", c.duration),
      Field{"pulse", "shape", Kind::text,
            [](RunConfig& c, const std::string& v) {
              const auto t = trim(v);
              if (t == "rectangular") c.shape = PulseShape::rectangular;
              else if (t == "smoothed") c.shape = PulseShape::smoothed_edge;
              else throw ConfigError("pulse.shape must be 'rectangular' or 'smoothed'");
            },
            [](const RunConfig& c) {
              return std::string(c.shape == PulseShape::rectangular ? "rectangular" : "smoothed");
            }},
      NUM("pulse", "ramp", c.ramp),
      NUM("grid", "t_end", c.t_end),
      NUM("grid", "dt_pulse", c.dt_pulse),
      NUM("grid", "dt_decay", c.dt_decay),
      INT("disorder", "n_realizations", c.n_realizations),
      Field{"disorder", "seed", Kind::unsigned64, [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      NUM("heterodyne", "p_lo", c.coherence.lo.p_lo),
      NUM("heterodyne", "omega_lo", c.coherence.lo.omega_lo),
      NUM("heterodyne", "polarization_overlap", c.coherence.lo.polarization_overlap),
      NUM("heterodyne", "t_ref", c.coherence.t_ref),
      NUM("heterodyne", "fit_t_begin", c.coherence.fit_t_begin),
      NUM("heterodyne", "fit_t_end", c.coherence.fit_t_end),
      NUM("heterodyne", "sample_dt", c.coherence.sample_dt),
      NUM("heterodyne", "max_lag", c.coherence.max_lag),
      NUM("heterodyne", "row_step", c.coherence.row_step),
      INT("heterodyne", "n_reps", c.coherence.n_reps),
      NUM("heterodyne", "bin_width", c.coherence.bin_width),
      NUM("heterodyne", "mc_t_begin", c.coherence.mc_t_begin),
      NUM("heterodyne", "mc_t_end", c.coherence.mc_t_end),
      NUM("heterodyne", "efficiency", c.coherence.efficiency),
      Field{"scan", "n_list", Kind::integer_list,
            [](RunConfig& c, const std::string& v) {
              c.scan.n_list.clear();
              for (const auto& x : split_list(v)) c.scan.n_list.push_back(to_int32(x));
            },
            [](const RunConfig& c) { return join(c.scan.n_list, [](int x) { return std::to_string(x); }); }},
      Field{"scan", "area_list_pi", Kind::number_list,
            [](RunConfig& c, const std::string& v) {
              c.scan.area_list_pi.clear();
              for (const auto& x : split_list(v)) c.scan.area_list_pi.push_back(to_double(x));
            },
            [](const RunConfig& c) { return join(c.scan.area_list_pi, fmt); }},
      Field{"fit", "target_files", Kind::text_list,
            [](RunConfig& c, const std::string& v) {
              const auto items = split_list(v);
              c.fit.targets.resize(items.size());
              for (std::size_t i = 0; i < items.size(); ++i) c.fit.targets[i].path = items[i];
            },
            [](const RunConfig& c) { return join(c.fit.targets, [](const FitTargetFile& t) { return t.path; }); }},
      Field{"fit", "target_n_atoms", Kind::integer_list,
            [](RunConfig& c, const std::string& v) {
              const auto items = split_list(v);
              if (items.size() != c.fit.targets.size())
                throw ConfigError("fit.target_n_atoms needs one entry per target file");
              for (std::size_t i = 0; i < items.size(); ++i) c.fit.targets[i].n_atoms = to_int32(items[i]);
            },
            [](const RunConfig& c) {
              return join(c.fit.targets, [](const FitTargetFile& t) { return std::to_string(t.n_atoms); });
            }},
      Field{"fit", "target_area_pi", Kind::number_list,
            [](RunConfig& c, const std::string& v) {
              const auto items = split_list(v);
              if (items.size() != c.fit.targets.size())
                throw ConfigError("fit.target_area_pi needs one entry per target file");
              for (std::size_t i = 0; i < items.size(); ++i) c.fit.targets[i].area_pi = to_double(items[i]);
            },
            [](const RunConfig& c) { return join(c.fit.targets, [](const FitTargetFile& t) { return fmt(t.area_pi); }); }},
      NUM("fit", "beta_lo", c.fit.bounds.beta_lo),
      NUM("fit", "beta_hi", c.fit.bounds.beta_hi),
      NUM("fit", "std_lo", c.fit.bounds.std_lo),
      NUM("fit", "std_hi", c.fit.bounds.std_hi),
      NUM("fit", "start_beta", c.fit.start_beta),
      NUM("fit", "start_std", c.fit.start_std),
      INT("fit", "max_evals", c.fit.max_evals),
      INT("fit", "max_restarts", c.fit.max_restarts),
      INT("fit", "start_lattice", c.fit.start_lattice),
      NUM("fit", "tolerance", c.fit.tolerance),
      Field{"output", "dir", Kind::text, [](RunConfig& c, const std::string& v) { c.out_dir = trim(v); },
            [](const RunConfig& c) { return c.out_dir; }},
      Field{"output", "overwrite", Kind::boolean, [](RunConfig& c, const std::string& v) { c.overwrite = to_bool(v); },
            [](const RunConfig& c) { return std::string(c.overwrite ? "true" : "false"); }},
  };
  return fields;
}

#undef NUM
#undef INT

using Flat = std::vector<std::pair<std::string, std::string>>;  // "section.key" -> value, file order

RunConfig apply_flat(const Flat& flat) {
  std::map<std::string, const Field*> by_name;
  for (const auto& f : schema()) by_name[std::string(f.section) + "." + f.key] = &f;
  // the target list must exist before its per-target columns
  std::map<std::string, std::string> values;
  for (const auto& [k, v] : flat) {
    if (!by_name.count(k)) throw ConfigError("unknown config key '" + k + "'");
    if (!values.emplace(k, v).second) throw ConfigError("duplicate config key '" + k + "'");
  }
  RunConfig cfg;
  for (const auto& f : schema()) {
    const auto it = values.find(std::string(f.section) + "." + f.key);
    if (it == values.end()) continue;
    try {
      f.set(cfg, it->second);
    } catch (const ConfigError& e) {
      throw ConfigError(it->first + ": " + e.what());
    }
  }
  return cfg;
}

Flat flatten_ini(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  Flat flat;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' outside a section");
    for (const auto& [key, value] : body) flat.emplace_back(section + "." + key, value.data());
  }
  return flat;
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return fmt(v.get<double>());
  throw ConfigError("unsupported JSON value " + v.dump());
}

Flat flatten_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("JSON config must be an object of sections");
  Flat flat;
  for (const auto& [section, body] : doc.items()) {
    if (!body.is_object()) throw ConfigError("JSON section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      std::string s;
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + json_scalar(value[i]);
      } else {
        s = json_scalar(value);
      }
      flat.emplace_back(section + "." + key, s);
    }
  }
  return flat;
}

}  // namespace

RunConfig parse_config(const std::string& text, bool json) {
  RunConfig cfg = apply_flat(json ? flatten_json(text) : flatten_ini(text));
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.extension() == ".json");
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out, current;
  for (const auto& f : schema()) {
    if (f.section != current) {
      out += (current.empty() ? "[" : "\n[") + std::string(f.section) + "]\n";
      current = f.section;
    }
    out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string serialize_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json doc;
  for (const auto& f : schema()) {
    const std::string v = f.get(cfg);
    auto& slot = doc[f.section][f.key];
    switch (f.kind) {
      case Kind::number: slot = to_double(v); break;
      case Kind::integer: slot = to_int(v); break;
      case Kind::unsigned64: slot = to_u64(v); break;
      case Kind::boolean: slot = to_bool(v); break;
      case Kind::text: slot = v; break;
      case Kind::number_list:
        slot = nlohmann::json::array();
        for (const auto& x : split_list(v)) slot.push_back(to_double(x));
        break;
      case Kind::integer_list:
        slot = nlohmann::json::array();
        for (const auto& x : split_list(v)) slot.push_back(to_int(x));
        break;
      case Kind::text_list:
        slot = nlohmann::json::array();
        for (const auto& x : split_list(v)) slot.push_back(x);
        break;
    }
  }
  return doc.dump(2) + "\n";
}

}  // namespace srb
