#include "config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "brownscene/error.hpp"

namespace brownscene::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ParameterError(key + ": not a number: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ParameterError(key + ": not a nonnegative integer: '" + v + "'");
  return x;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

template <class T>
Key size_key(const char* name, T ExperimentConfig::*member) {
  return {name,
          [=](ExperimentConfig& c, const std::string& v) { c.*member = static_cast<T>(to_u64(name, v)); },
          [=](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.*member); }};
}

Key real_key(const char* name, double ExperimentConfig::*member) {
  return {name, [=](ExperimentConfig& c, const std::string& v) { c.*member = to_double(name, v); },
          [=](const ExperimentConfig& c) -> std::optional<std::string> { return fmt(c.*member); }};
}

Key spec_real_key(const char* name, double ProcessSpec::*member) {
  return {name, [=](ExperimentConfig& c, const std::string& v) { c.spec.*member = to_double(name, v); },
          [=](const ExperimentConfig& c) -> std::optional<std::string> { return fmt(c.spec.*member); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"family",
       [](ExperimentConfig& c, const std::string& v) {
         const auto f = parse_family(v);
         if (!f) throw ParameterError("family: unknown process family '" + v + "'");
         c.spec.family = *f;
       },
       [](const ExperimentConfig& c) -> std::optional<std::string> { return std::string(to_string(c.spec.family)); }},
      spec_real_key("delta", &ProcessSpec::delta),
      spec_real_key("zeta", &ProcessSpec::zeta),
      spec_real_key("hurst", &ProcessSpec::hurst),
      real_key("dt", &ExperimentConfig::dt),
      size_key("n_steps", &ExperimentConfig::n_steps),
      {"T_grid",
       [](ExperimentConfig& c, const std::string& v) {
         c.T_grid.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.T_grid.push_back(to_double("T_grid", trim(item)));
       },
       [](const ExperimentConfig& c) -> std::optional<std::string> {
         std::string s;
         for (std::size_t i = 0; i < c.T_grid.size(); ++i) s += (i ? "," : "") + fmt(c.T_grid[i]);
         return s;
       }},
      size_key("n_replicas", &ExperimentConfig::n_replicas),
      size_key("master_seed", &ExperimentConfig::master_seed),
      real_key("barrier", &ExperimentConfig::barrier),
      real_key("dx_kappa", &ExperimentConfig::dx_kappa),
      real_key("dx_floor", &ExperimentConfig::dx_floor),
      {"dx", [](ExperimentConfig& c, const std::string& v) { c.dx = to_double("dx", v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> {
         if (!c.dx) return std::nullopt;
         return fmt(*c.dx);
       }},
      {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
       [](const ExperimentConfig& c) -> std::optional<std::string> { return c.out_dir; }},
      size_key("workers", &ExperimentConfig::workers),
      size_key("ks_replicas", &ExperimentConfig::ks_replicas),
      size_key("path_checks", &ExperimentConfig::path_checks),
      size_key("residual_paths", &ExperimentConfig::residual_paths),
      size_key("residual_steps", &ExperimentConfig::residual_steps),
      size_key("maximal_replicas", &ExperimentConfig::maximal_replicas),
      size_key("tail_replicas", &ExperimentConfig::tail_replicas),
      real_key("tail_dt", &ExperimentConfig::tail_dt),
      size_key("slepian_paths", &ExperimentConfig::slepian_paths),
      size_key("slepian_sceneries", &ExperimentConfig::slepian_sceneries),
      size_key("molchan_replicas_01", &ExperimentConfig::molchan_replicas_01),
      real_key("molchan_dt_01", &ExperimentConfig::molchan_dt_01),
  };
  return table;
}

bool on_grid(double t, double dt) { return grid_index(t, dt).has_value() && *grid_index(t, dt) > 0; }

}  // namespace

SimulationOptions ExperimentConfig::simulation() const { return {dt, dx_policy(), workers}; }

DxPolicy ExperimentConfig::dx_policy() const {
  DxPolicy p;
  p.kappa = dx_kappa;
  p.floor = dx_floor;
  p.fixed = dx;
  return p;
}

std::vector<std::string> ExperimentConfig::problems() const {
  std::vector<std::string> out;
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    const char* key = spec.family == ProcessFamily::kFractionalBM ? "hurst"
                      : (spec.delta > 1.0 && spec.delta <= 2.0) ? "zeta"
                                                                : "delta";
    out.push_back(std::string(key) + ": " + e.what());
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) out.push_back("dt: must be positive");
  if (n_steps < 1) out.push_back("n_steps: must be at least 1");
  if (n_replicas < 1) out.push_back("n_replicas: must be at least 1");
  if (T_grid.empty()) out.push_back("T_grid: must not be empty");
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    if (dt > 0.0 && !on_grid(T_grid[i], dt)) {
      out.push_back("T_grid: " + fmt(T_grid[i]) + " is not a positive multiple of dt");
      break;
    }
    if (i > 0 && !(T_grid[i] > T_grid[i - 1])) {
      out.push_back("T_grid: must be increasing");
      break;
    }
  }
  if (std::isnan(barrier)) out.push_back("barrier: must be a number");
  if (!(dx_kappa > 0.0)) out.push_back("dx_kappa: must be positive");
  if (!(dx_floor > 0.0)) out.push_back("dx_floor: must be positive");
  if (dx && !(*dx > 0.0)) out.push_back("dx: must be positive");
  if (out_dir.empty()) out.push_back("out_dir: must not be empty");
  if (workers < 1) out.push_back("workers: must be at least 1");
  if (!(tail_dt > 0.0) || !on_grid(1.0, tail_dt)) out.push_back("tail_dt: must divide 1");
  if (!(molchan_dt_01 > 0.0) || !on_grid(1.0, molchan_dt_01)) out.push_back("molchan_dt_01: must divide 1");
  if (dt > 0.0 && !on_grid(1.0, dt)) out.push_back("dt: must divide 1 (checks use t = 1)");
  if (slepian_sceneries < 2) out.push_back("slepian_sceneries: must be at least 2");
  return out;
}

void ExperimentConfig::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& s : p) msg += "\n  " + s;
  throw ParameterError(msg);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::vector<std::string> errors;
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* k = nullptr;
    for (const auto& cand : keys())
      if (key == cand.name) k = &cand;
    if (!k) {
      errors.push_back(key + ": unknown key");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back(key + ": given twice");
      continue;
    }
    try {
      k->set(c, value);
    } catch (const ParameterError& e) {
      errors.push_back(e.what());
    }
  }
  for (auto& p : c.problems()) errors.push_back(std::move(p));
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& s : errors) msg += "\n  " + s;
    throw ParameterError(msg);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : keys())
    if (auto v = k.get(config)) out += std::string(k.name) + " = " + *v + "\n";
  return out;
}

}  // namespace brownscene::harness
