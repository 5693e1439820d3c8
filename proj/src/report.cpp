#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "brownscene/error.hpp"

namespace brownscene::harness {

namespace {

void put(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

template <class... Ts>
void row(std::string& out, double first, Ts... rest) {
  put(out, first);
  ((out += ',', put(out, rest)), ...);
  out += '\n';
}

// JSON has no infinities; non-finite numbers become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

}  // namespace

std::filesystem::path ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir + (ec ? ": " + ec.message() : ""));
  return dir;
}

void write_text(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed for " + file.string());
}

std::string path_csv(const PathSample& path) {
  std::string out = "t,y\n";
  for (std::size_t k = 0; k < path.values.size(); ++k) row(out, static_cast<double>(k) * path.dt, path.values[k]);
  return out;
}

std::string local_time_csv(const LocalTimeField& field) {
  std::string out = "t,x,L\n";
  for (std::size_t j = 0; j < field.rows(); ++j) {
    const auto r = field.row(j);
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] != 0.0) row(out, field.checkpoints[j], field.grid.center(i), r[i]);
  }
  return out;
}

std::string delta_csv(const DeltaPath& d) {
  std::string out = "t,delta,running_sup,cond_var\n";
  for (std::size_t j = 0; j < d.checkpoints.size(); ++j)
    row(out, d.checkpoints[j], d.delta[j], d.running_sup[j], d.cond_var[j]);
  return out;
}

std::string persistence_csv(const PersistenceEstimate& e) {
  std::string out = "T,F_hat,ci_lo,ci_hi,F_hat_coarse\n";
  for (std::size_t k = 0; k < e.T_grid.size(); ++k)
    row(out, e.T_grid[k], e.F_hat[k], e.ci_lo[k], e.ci_hi[k], e.F_hat_coarse[k]);
  return out;
}

std::string molchan_csv(const MolchanEstimate& m) {
  std::string out = "T,I_hat,I_se,normalized,normalized_se,ci_lo,ci_hi,underflowed\n";
  for (std::size_t k = 0; k < m.T_grid.size(); ++k)
    row(out, m.T_grid[k], m.I_hat[k], m.I_se[k], m.normalized[k], m.normalized_se[k], m.ci_lo[k], m.ci_hi[k],
        static_cast<double>(m.flagged[k]));
  return out;
}

std::string tails_csv(const TailReport& r) {
  std::string out = "quantity,exponent,points,x_lo,x_hi,log_C,decay,local_exponent,admissible\n";
  for (const auto* e : {&r.delta1, &r.v1_upper, &r.v1_lower}) {
    out += e->quantity + ',';
    row(out, e->exponent, static_cast<double>(e->points), e->x_lo, e->x_hi, e->envelope.intercept,
        e->envelope.decay, e->local_exponent, e->admissible ? 1.0 : 0.0);
  }
  return out;
}

json spec_json(const ProcessSpec& spec) {
  json j{{"family", std::string(to_string(spec.family))},
         {"gamma", spec.gamma()},
         {"alpha", spec.alpha()},
         {"beta", spec.beta()}};
  if (spec.family == ProcessFamily::kStableLevy) {
    j["delta"] = spec.delta;
    j["zeta"] = spec.zeta;
    j["experimental"] = spec.experimental();
  }
  if (spec.family == ProcessFamily::kFractionalBM) j["hurst"] = spec.hurst;
  return j;
}

json persistence_json(const PersistenceEstimate& e) {
  const double expected = -e.spec.gamma() / 2.0;
  json j{{"process", spec_json(e.spec)},
         {"gamma", e.spec.gamma()},
         {"expected_exponent", expected},
         {"barrier", num(e.barrier)},
         {"n_replicas", e.n_replicas},
         {"dt", e.dt},
         {"workers", e.workers},
         {"T_grid", nums(e.T_grid)},
         {"F_hat", nums(e.F_hat)},
         {"ci_lo", nums(e.ci_lo)},
         {"ci_hi", nums(e.ci_hi)},
         {"F_hat_coarse", nums(e.F_hat_coarse)},
         {"sup_discretization_gap", e.sup_discretization_gap()},
         {"fit_window", {num(e.fit_window.t_lo), num(e.fit_window.t_hi)}},
         {"band", {expected - kSlopeBand, expected + kSlopeBand}},
         {"flags", e.flags}};
  if (e.fitted_slope) {
    j["fitted_slope"] = *e.fitted_slope;
    j["slope_se"] = e.slope_se;
    j["fit_points"] = e.fit_points;
    j["verdict"] = std::abs(*e.fitted_slope - expected) <= kSlopeBand ? "pass" : "fail";
  } else {
    j["fitted_slope"] = nullptr;
    j["verdict"] = "slope omitted";
  }
  return j;
}

json molchan_json(const MolchanEstimate& m) {
  std::vector<double> underflowed(m.flagged.begin(), m.flagged.end());
  return {{"gamma", m.gamma},
          {"n_replicas", m.n_replicas},
          {"T_grid", nums(m.T_grid)},
          {"I_hat", nums(m.I_hat)},
          {"I_se", nums(m.I_se)},
          {"normalized", nums(m.normalized)},
          {"normalized_se", nums(m.normalized_se)},
          {"ci_lo", nums(m.ci_lo)},
          {"ci_hi", nums(m.ci_hi)},
          {"underflowed_replicas", nums(underflowed)},
          {"max_delta_01", num(m.max_delta_01)},
          {"max_delta_01_se", num(m.max_delta_01_se)},
          {"n_replicas_01", m.n_replicas_01}};
}

json envelope_json(const TailEnvelopeResult& r) {
  return {{"quantity", r.quantity},
          {"side", r.side == TailSide::kRight ? "right" : "left"},
          {"exponent", r.exponent},
          {"points", r.points},
          {"x_range", {num(r.x_lo), num(r.x_hi)}},
          {"log_C", num(r.envelope.intercept)},
          {"decay", num(r.envelope.decay)},
          {"local_exponent", num(r.local_exponent)},
          {"low_power", r.low_power},
          {"admissible", r.admissible}};
}

json tails_json(const TailReport& r) {
  return {{"process", spec_json(r.spec)},
          {"n_replicas", r.n_replicas},
          {"delta_1", envelope_json(r.delta1)},
          {"v1_upper", envelope_json(r.v1_upper)},
          {"v1_lower", envelope_json(r.v1_lower)},
          {"pass", r.pass()}};
}

json maximal_json(const MaximalInequalityReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"x", x.x}, {"p_max", x.p_max}, {"p_end", x.p_end}, {"slack", x.slack}, {"pass", x.pass}});
  return {{"process", spec_json(r.spec)}, {"T", r.horizon}, {"n_replicas", r.n_replicas}, {"rows", rows},
          {"pass", r.pass}};
}

json slepian_json(const SlepianReport& r) {
  double min_p = 1.0, min_p_inc = 1.0;
  for (const auto& p : r.paths) {
    min_p = std::min(min_p, p.p_value);
    min_p_inc = std::min(min_p_inc, p.p_value_inc);
  }
  return {{"process", spec_json(r.spec)},
          {"u", r.u}, {"v", r.v}, {"w", r.w}, {"a", num(r.a)}, {"b", num(r.b)},
          {"n_paths", r.paths.size()},
          {"n_scenery", r.n_scenery},
          {"alpha", r.alpha},
          {"violations", r.violations},
          {"violations_increment", r.violations_inc},
          {"min_p_value", min_p},
          {"min_p_value_increment", min_p_inc},
          {"pass", r.pass()}};
}

json identity_json(const IdentityTest& t) {
  return {{"name", t.name}, {"statistic", t.ks.statistic}, {"p_value", t.ks.p_value}, {"n1", t.ks.n1},
          {"n2", t.ks.n2}, {"level", t.level}, {"pass", t.pass()}};
}

}  // namespace brownscene::harness
