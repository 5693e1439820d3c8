#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>

#include "brownscene/error.hpp"
#include "brownscene/estimators.hpp"
#include "brownscene/identities.hpp"

namespace brownscene::harness {

namespace {

std::vector<std::pair<std::string, std::string>> config_pairs(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  const std::string text = serialize_config(c);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl - pos);
    const auto eq = line.find(" = ");
    out.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    pos = nl + 1;
  }
  return out;
}

void write_json(const std::filesystem::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

template <class Fn>
CheckOutcome guarded(const std::string& name, Fn&& fn) {
  CheckOutcome out{name, false, json::object(), {}};
  try {
    fn(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.error = e.what();
  }
  return out;
}

PathSample fixed_path(const ProcessSpec& spec, std::size_t n, double dt, std::uint64_t master, std::size_t r) {
  return ReplicaSource(spec, static_cast<double>(n) * dt, dt, master).path(r);
}

}  // namespace

json summary_header(const std::string& command, const ExperimentConfig& config) {
  json cfg = json::object();
  for (const auto& [k, v] : config_pairs(config)) cfg[k] = v;
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", cfg}};
}

// ---------------------------------------------------------------------------

int cmd_simulate(const ExperimentConfig& config) {
  config.validate();
  const auto dir = ensure_directory(config.out_dir);
  const double horizon = static_cast<double>(config.n_steps) * config.dt;
  const ReplicaSource source(config.spec, horizon, config.dt, config.master_seed);
  const auto checkpoints = default_checkpoints(horizon, config.dt);
  json files = json::array();
  for (std::size_t r = 0; r < config.n_replicas; ++r) {
    const PathSample path = source.path(r);
    const auto field = compute_local_time(path, checkpoints, config.dx_policy());
    const auto scenery = sample_scenery(field.grid, source.scenery_seed(r));
    const auto delta = build_delta(field, scenery);
    const std::string id = std::to_string(r);
    write_text(dir / ("path_" + id + ".csv"), path_csv(path));
    write_text(dir / ("local_time_" + id + ".csv"), local_time_csv(field));
    write_text(dir / ("delta_" + id + ".csv"), delta_csv(delta));
    files.push_back({{"replica", r},
                     {"path_seed", path.seed},
                     {"scenery_seed", scenery.seed},
                     {"dx", field.grid.dx()},
                     {"bins", field.grid.bins()},
                     {"V_T", field.V.back()},
                     {"delta_T", delta.delta.back()}});
  }
  json j = summary_header("simulate", config);
  j["process"] = spec_json(config.spec);
  j["horizon"] = horizon;
  j["replicas"] = files;
  write_json(dir / "simulate.json", j);
  return kExitOk;
}

int cmd_persistence(const ExperimentConfig& config) {
  config.validate();
  const auto dir = ensure_directory(config.out_dir);
  PersistenceOptions opt;
  opt.sim = config.simulation();
  const auto e = estimate_persistence(config.spec, config.barrier, config.T_grid, config.n_replicas,
                                      config.master_seed, opt);
  write_text(dir / "persistence.csv", persistence_csv(e));
  json j = summary_header("persistence", config);
  j.update(persistence_json(e));
  write_json(dir / "persistence.json", j);
  for (const auto& f : e.flags) std::cerr << "flag: " << f << "\n";
  return j["verdict"] == "pass" ? kExitOk : kExitCheckFailed;
}

int cmd_molchan(const ExperimentConfig& config) {
  config.validate();
  const auto dir = ensure_directory(config.out_dir);
  MolchanOptions opt;
  opt.sim = config.simulation();
  opt.dt_01 = config.molchan_dt_01;
  opt.n_replicas_01 = config.molchan_replicas_01;
  const auto m = molchan_functional(config.spec, config.T_grid, config.n_replicas, config.master_seed, opt);
  write_text(dir / "molchan.csv", molchan_csv(m));
  json j = summary_header("molchan", config);
  j.update(molchan_json(m));
  const std::size_t last = m.T_grid.size() - 1;
  bool ok = m.n_replicas_01 > 0 && molchan_relative_gap(m, last) <= 0.15;
  if (last > 0) {
    j["stable_last_two"] = molchan_stable(m, last - 1, last);
    ok = ok && molchan_stable(m, last - 1, last);
  }
  if (m.n_replicas_01 > 0) j["relative_gap_at_largest_T"] = molchan_relative_gap(m, last);
  j["pass"] = ok;
  write_json(dir / "molchan.json", j);
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_tails(const ExperimentConfig& config) {
  config.validate();
  const auto dir = ensure_directory(config.out_dir);
  SimulationOptions sim = config.simulation();
  sim.dt = config.tail_dt;
  const auto r = tail_check(config.spec, config.n_replicas, config.master_seed, sim);
  write_text(dir / "tails.csv", tails_csv(r));
  json j = summary_header("tails", config);
  j.update(tails_json(r));
  write_json(dir / "tails.json", j);
  return r.pass() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// Validation suite

std::vector<CheckOutcome> run_validation(const ExperimentConfig& config,
                                         const std::function<void(const CheckOutcome&)>& log) {
  const ProcessSpec spec = config.spec;
  const SimulationOptions sim = config.simulation();
  const DxPolicy dx = config.dx_policy();
  const std::uint64_t master = config.master_seed;
  std::uint64_t stream = 0;
  auto seed = [&] { return derive_seed(master, SeedDomain::kAuxiliary, 1000 + stream++); };
  std::vector<CheckOutcome> out;
  auto record = [&](CheckOutcome c) {
    if (log) log(c);
    out.push_back(std::move(c));
  };

  // Occupation density formula on paths of residual_steps steps over [0, 1].
  record(guarded("occupation_density", [&](CheckOutcome& c) {
    const std::size_t n = config.residual_steps;
    const double dt = 1.0 / static_cast<double>(n);
    const std::uint64_t s = seed();
    std::vector<double> bump;
    double worst_exact = 0.0;
    for (std::size_t r = 0; r < config.residual_paths; ++r) {
      const PathSample p = fixed_path(spec, n, dt, s, r);
      const double t[] = {1.0};
      const auto field = compute_local_time(p, t, dx);
      bump.push_back(occupation_residual(p, field, GaussianBumpFn{0.0, 1.0}, 1.0));
      worst_exact = std::max(worst_exact, occupation_residual(p, field, ConstantFn{1.0}, 1.0));
      const std::size_t mid = field.grid.bins() / 2;
      const double a = field.grid.edge(mid >= 2 ? mid - 2 : 0);
      const double b = field.grid.edge(std::min(mid + 3, field.grid.bins()));
      worst_exact = std::max(worst_exact, occupation_residual(p, field, IndicatorFn{a, b}, 1.0));
    }
    std::nth_element(bump.begin(), bump.begin() + bump.size() / 2, bump.end());
    const double median = bump[bump.size() / 2];
    c.details = {{"paths", config.residual_paths}, {"steps", n}, {"median_bump_residual", median},
                 {"bump_threshold", 0.02}, {"max_exact_residual", worst_exact}, {"exact_threshold", 1e-12}};
    c.pass = median < 0.02 && worst_exact <= 1e-12;
  }));

  record(guarded("comparison_inequality", [&](CheckOutcome& c) {
    const ReplicaSource src(spec, 1.0, sim.dt, seed());
    const auto ok = run_campaign<int>(src, config.path_checks, sim.workers, [&](std::size_t, const PathSample& p) {
      const double t[] = {1.0};
      return comparison_check(p, compute_local_time(p, t, dx), 1.0) ? 1 : 0;
    });
    std::size_t violations = 0;
    for (int v : ok) violations += v ? 0 : 1;
    c.details = {{"paths", config.path_checks}, {"violations", violations}, {"tolerance", kDiscretizationTolerance}};
    c.pass = violations == 0;
  }));

  record(guarded("superadditivity", [&](CheckOutcome& c) {
    const ReplicaSource src(spec, 1.0, sim.dt, seed());
    const auto terms = run_campaign<SuperadditivityTerms>(
        src, config.path_checks, sim.workers,
        [&](std::size_t, const PathSample& p) { return superadditivity_terms(p, 0.5, 0.5, dx); });
    std::size_t violations = 0;
    std::vector<double> vs, vt;
    for (const auto& t : terms) {
      violations += t.whole * (1.0 + kDiscretizationTolerance) >= t.first + t.shifted ? 0 : 1;
      vs.push_back(t.first);
      vt.push_back(t.shifted);
    }
    const double corr = stats::correlation(vs, vt);
    c.details = {{"paths", config.path_checks}, {"violations", violations}, {"corr_Vs_Vt_shifted", corr}};
    c.pass = violations == 0;
    // V_s and the shifted V_t are independent when Y has independent increments.
    if (spec.family == ProcessFamily::kBrownian || spec.family == ProcessFamily::kStableLevy) {
      const double bound = 3.29 / std::sqrt(static_cast<double>(terms.size()));
      c.details["corr_bound"] = bound;
      c.pass = c.pass && std::abs(corr) <= bound;
    }
  }));

  record(guarded("increment_covariance", [&](CheckOutcome& c) {
    const ReplicaSource src(spec, 1.0, sim.dt, seed());
    const auto ok = run_campaign<int>(src, config.path_checks, sim.workers, [&](std::size_t, const PathSample& p) {
      const double t[] = {0.5, 1.0};
      return delta_increment_cov_check(compute_local_time(p, t, dx), 0.5, 1.0) ? 1 : 0;
    });
    std::size_t violations = 0;
    for (int v : ok) violations += v ? 0 : 1;
    c.details = {{"fields", config.path_checks}, {"violations", violations}};
    c.pass = violations == 0;
  }));

  record(guarded("maximal_inequality", [&](CheckOutcome& c) {
    const auto r = maximal_inequality_check(spec, 1.0, {0.5, 1.0, 2.0}, config.maximal_replicas, seed(), sim);
    c.details = maximal_json(r);
    c.pass = r.pass;
  }));

  record(guarded("slepian", [&](CheckOutcome& c) {
    const auto r = slepian_check(spec, 0.0, 0.5, 1.0, 1.0, 1.0, config.slepian_paths, config.slepian_sceneries,
                                 seed(), sim);
    c.details = slepian_json(r);
    c.pass = r.pass();
  }));

  record(guarded("tail_envelopes", [&](CheckOutcome& c) {
    SimulationOptions tsim = sim;
    tsim.dt = config.tail_dt;
    const auto r = tail_check(spec, config.tail_replicas, seed(), tsim);
    c.details = tails_json(r);
    c.pass = r.pass();
  }));

  record(guarded("ks_identities", [&](CheckOutcome& c) {
    const std::size_t n = config.ks_replicas;
    std::vector<IdentityTest> tests;
    for (double k : {2.0, 4.0, 16.0}) tests.push_back(ks_self_similarity(spec, k, n, seed(), sim));
    for (double s : {0.5, 1.0, 2.0}) tests.push_back(ks_stationary_increments_y(spec, s, n, seed(), sim));
    for (double k : {2.0, 4.0}) tests.push_back(ks_v_scaling(spec, k, n, seed(), sim));
    for (double t : {0.25, 0.5, 1.0}) tests.push_back(ks_delta_time_reversal(spec, 1.0, t, n, seed(), sim));
    tests.push_back(ks_delta_stationary_increments(spec, 0.5, 0.5, n, seed(), sim));
    tests.push_back(ks_delta_stationary_increments(spec, 1.0, 1.0, n, seed(), sim));
    tests.push_back(ks_delta_symmetry(spec, n, seed(), sim));
    tests.push_back(ks_conditional_gaussianity(spec, n, seed(), sim));
    // Reversal of Y: both signs are tested; the identity holds if one of them passes at every t.
    json reversal = json::array();
    for (double t : {0.25, 0.5, 1.0}) {
      const auto plus = ks_time_reversal_y(spec, 1.0, t, 1.0, n, seed(), sim);
      const auto minus = ks_time_reversal_y(spec, 1.0, t, -1.0, n, seed(), sim);
      reversal.push_back(identity_json(plus));
      reversal.push_back(identity_json(minus));
      tests.push_back(plus.ks.p_value >= minus.ks.p_value ? plus : minus);
    }
    json list = json::array();
    for (const auto& t : tests) list.push_back(identity_json(t));
    const std::size_t failures = count_failures(tests);
    c.details = {{"tests", list}, {"reversal_sign_tests", reversal}, {"count", tests.size()},
                 {"failures", failures}, {"allowed_failures", kAllowedKsFailures}};
    c.pass = failures <= kAllowedKsFailures;
  }));

  record(guarded("moment_identity", [&](CheckOutcome& c) {
    json rows = json::array();
    bool ok = true;
    const std::pair<double, double> pairs[] = {{0.5, 1.0}, {1.0, 2.0}, {0.25, 1.0}};
    for (const auto& [s, t] : pairs) {
      const auto m = moment_identity_check(spec, s, t, config.ks_replicas, seed(), sim);
      rows.push_back({{"s", s}, {"t", t}, {"lhs", m.lhs}, {"rhs", m.rhs}, {"z", m.z}, {"pass", m.pass}});
      ok = ok && m.pass;
    }
    c.details = {{"pairs", rows}, {"z_bound", kMomentZ}};
    c.pass = ok;
  }));

  record(guarded("persistence", [&](CheckOutcome& c) {
    PersistenceOptions opt;
    opt.sim = sim;
    const auto e = estimate_persistence(spec, config.barrier, config.T_grid, config.n_replicas, seed(), opt);
    c.details = persistence_json(e);
    c.pass = c.details["verdict"] == "pass";
    if (!e.fitted_slope && !e.flags.empty()) c.error = e.flags.back();
  }));

  return out;
}

int cmd_validate(const ExperimentConfig& config) {
  config.validate();
  const auto dir = ensure_directory(config.out_dir);
  const auto checks = run_validation(config, [](const CheckOutcome& c) {
    std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.error.empty()) std::cerr << ": " << c.error;
    std::cerr << "\n";
  });
  json j = summary_header("validate", config);
  j["process"] = spec_json(config.spec);
  json list = json::array();
  bool all = true;
  for (const auto& c : checks) {
    json e{{"name", c.name}, {"pass", c.pass}, {"details", c.details}};
    if (!c.error.empty()) e["error"] = c.error;
    list.push_back(e);
    all = all && c.pass;
  }
  j["checks"] = list;
  j["pass"] = all;
  write_json(dir / "validate.json", j);
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace brownscene::harness
