#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "brownscene/estimators.hpp"
#include "brownscene/local_time.hpp"
#include "brownscene/process.hpp"
#include "brownscene/replica.hpp"
#include "brownscene/scenery.hpp"
#include "brownscene/stats.hpp"

namespace brownscene {

/// Outcome of one distributional identity test.
struct IdentityTest {
  std::string name;
  stats::KsResult ks;
  double level = 0.01;
  bool pass() const noexcept { return ks.passes(level); }
};

inline constexpr double kKsLevel = 0.01;

/// One scalar per replica: fn(path, scenery_seed) -> double.
template <class Fn>
std::vector<double> replica_values(const ProcessSpec& spec, double horizon, std::size_t n, std::uint64_t seed,
                                   const SimulationOptions& sim, Fn&& fn) {
  const ReplicaSource source(spec, horizon, sim.dt, seed);
  return run_campaign<double>(source, n, sim.workers, [&](std::size_t r, const PathSample& path) {
    return fn(path, source.scenery_seed(r));
  });
}

/// Delta at the given grid steps of one replica.
inline std::vector<double> delta_at_steps(const PathSample& path, const SceneryField& scenery,
                                          std::span<const std::size_t> steps) {
  std::vector<double> out(steps.size());
  stream_delta(path, scenery, [&](std::size_t k, double d) {
    for (std::size_t j = 0; j < steps.size(); ++j)
      if (steps[j] == k) out[j] = d;
  });
  return out;
}

namespace detail {

inline std::vector<double> scaled(std::vector<double> v, double factor) {
  for (double& x : v) x *= factor;
  return v;
}

inline std::string family_label(const ProcessSpec& spec) {
  std::string s(to_string(spec.family));
  if (spec.family == ProcessFamily::kStableLevy) s += "(" + std::to_string(spec.delta).substr(0, 4) + ")";
  if (spec.family == ProcessFamily::kFractionalBM) s += "(H=" + std::to_string(spec.hurst).substr(0, 4) + ")";
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Driving process

/// Y(c) / c^gamma against Y(1), independent replica sets.
inline IdentityTest ks_self_similarity(const ProcessSpec& spec, double c, std::size_t n, std::uint64_t seed,
                                       const SimulationOptions& sim = {}) {
  auto end = [](const PathSample& p, std::uint64_t) { return p.values.back(); };
  auto a = replica_values(spec, 1.0, n, substream(seed, 1), sim, end);
  auto b = replica_values(spec, c, n, substream(seed, 2), sim, end);
  return {"Y self-similarity " + detail::family_label(spec) + " c=" + std::to_string(c).substr(0, 4),
          stats::ks_two_sample(std::move(a), detail::scaled(std::move(b), std::pow(c, -spec.gamma()))), kKsLevel};
}

/// Y(s + 1) - Y(s) against Y(1).
inline IdentityTest ks_stationary_increments_y(const ProcessSpec& spec, double s, std::size_t n, std::uint64_t seed,
                                               const SimulationOptions& sim = {}) {
  const std::size_t ks = steps_for(s, sim.dt);
  auto a = replica_values(spec, 1.0, n, substream(seed, 1), sim,
                          [](const PathSample& p, std::uint64_t) { return p.values.back(); });
  auto b = replica_values(spec, s + 1.0, n, substream(seed, 2), sim,
                          [&](const PathSample& p, std::uint64_t) { return p.values.back() - p.values[ks]; });
  return {"Y stationary increments " + detail::family_label(spec) + " s=" + std::to_string(s).substr(0, 4),
          stats::ks_two_sample(std::move(a), std::move(b)), kKsLevel};
}

/// Marginal of the reversed path at t against sign * Y(t).
inline IdentityTest ks_time_reversal_y(const ProcessSpec& spec, double horizon, double t, double sign, std::size_t n,
                                       std::uint64_t seed, const SimulationOptions& sim = {}) {
  const std::size_t kt = steps_for(t, sim.dt);
  auto a = replica_values(spec, horizon, n, substream(seed, 1), sim, [&](const PathSample& p, std::uint64_t) {
    return reverse_path(p, horizon).values[kt];
  });
  auto b = replica_values(spec, t, n, substream(seed, 2), sim,
                          [&](const PathSample& p, std::uint64_t) { return sign * p.values.back(); });
  return {"Y time reversal " + detail::family_label(spec) + " t=" + std::to_string(t).substr(0, 4) +
              (sign > 0 ? " sign=+" : " sign=-"),
          stats::ks_two_sample(std::move(a), std::move(b)), kKsLevel};
}

// ---------------------------------------------------------------------------
// Self-intersection local time

/// V_c / c^{2 - gamma} against V_1. The horizon-1 paths use step dt / c so
/// both sides carry the same number of steps: the binned estimator of V is
/// biased at finite resolution, and that bias would otherwise differ between
/// the two sides.
inline IdentityTest ks_v_scaling(const ProcessSpec& spec, double c, std::size_t n, std::uint64_t seed,
                                 const SimulationOptions& sim = {}) {
  auto v_end = [&](const PathSample& p, std::uint64_t) {
    const double t[] = {p.horizon()};
    return compute_local_time(p, t, sim.dx).V[0];
  };
  SimulationOptions fine = sim;
  fine.dt = sim.dt / c;
  auto a = replica_values(spec, 1.0, n, substream(seed, 1), fine, v_end);
  auto b = replica_values(spec, c, n, substream(seed, 2), sim, v_end);
  return {"V scaling " + detail::family_label(spec) + " c=" + std::to_string(c).substr(0, 4),
          stats::ks_two_sample(std::move(a), detail::scaled(std::move(b), std::pow(c, spec.gamma() - 2.0))),
          kKsLevel};
}

// ---------------------------------------------------------------------------
// Scenery process

/// Delta_{T - t} - Delta_T against Delta_t.
inline IdentityTest ks_delta_time_reversal(const ProcessSpec& spec, double horizon, double t, std::size_t n,
                                           std::uint64_t seed, const SimulationOptions& sim = {}) {
  const std::size_t kT = steps_for(horizon, sim.dt);
  const std::size_t kt = steps_for(t, sim.dt);
  const std::size_t idx[] = {kT - kt, kT};
  const std::size_t one[] = {kt};
  auto a = replica_values(spec, horizon, n, substream(seed, 1), sim, [&](const PathSample& p, std::uint64_t s) {
    const auto d = delta_at_steps(p, sample_scenery(grid_for_path(p, sim.dx), s), idx);
    return d[0] - d[1];
  });
  auto b = replica_values(spec, t, n, substream(seed, 2), sim, [&](const PathSample& p, std::uint64_t s) {
    return delta_at_steps(p, sample_scenery(grid_for_path(p, sim.dx), s), one)[0];
  });
  return {"Delta time reversal " + detail::family_label(spec) + " t/T=" + std::to_string(t / horizon).substr(0, 4),
          stats::ks_two_sample(std::move(a), std::move(b)), kKsLevel};
}

/// Delta_{s + t} - Delta_s against Delta_t.
inline IdentityTest ks_delta_stationary_increments(const ProcessSpec& spec, double s, double t, std::size_t n,
                                                   std::uint64_t seed, const SimulationOptions& sim = {}) {
  const std::size_t idx[] = {steps_for(s, sim.dt), steps_for(s + t, sim.dt)};
  const std::size_t one[] = {steps_for(t, sim.dt)};
  auto a = replica_values(spec, s + t, n, substream(seed, 1), sim, [&](const PathSample& p, std::uint64_t sd) {
    const auto d = delta_at_steps(p, sample_scenery(grid_for_path(p, sim.dx), sd), idx);
    return d[1] - d[0];
  });
  auto b = replica_values(spec, t, n, substream(seed, 2), sim, [&](const PathSample& p, std::uint64_t sd) {
    return delta_at_steps(p, sample_scenery(grid_for_path(p, sim.dx), sd), one)[0];
  });
  return {"Delta stationary increments " + detail::family_label(spec) + " s=" + std::to_string(s).substr(0, 4) +
              " t=" + std::to_string(t).substr(0, 4),
          stats::ks_two_sample(std::move(a), std::move(b)), kKsLevel};
}

/// Delta_1 against -Delta_1 (independent sets).
inline IdentityTest ks_delta_symmetry(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                                      const SimulationOptions& sim = {}) {
  auto d1 = [&](const PathSample& p, std::uint64_t s) {
    return delta_on_grid(p, sample_scenery(grid_for_path(p, sim.dx), s)).back();
  };
  auto a = replica_values(spec, 1.0, n, substream(seed, 1), sim, d1);
  auto b = replica_values(spec, 1.0, n, substream(seed, 2), sim, d1);
  return {"Delta_1 symmetry " + detail::family_label(spec),
          stats::ks_two_sample(std::move(a), detail::scaled(std::move(b), -1.0)), kKsLevel};
}

/// For one fixed path, Delta_1 / sqrt(V_1) over scenery replicas against N(0, 1).
inline IdentityTest ks_conditional_gaussianity(const ProcessSpec& spec, std::size_t n_scenery, std::uint64_t seed,
                                               const SimulationOptions& sim = {}) {
  const PathSample path = sample_path(spec, steps_for(1.0, sim.dt), sim.dt, derive_seed(seed, SeedDomain::kPath, 0));
  const double one[] = {1.0};
  const auto field = compute_local_time(path, one, sim.dx);
  const double sd = std::sqrt(field.V[0]);
  std::vector<double> z(n_scenery);
  SceneryField scenery;
  for (std::size_t r = 0; r < n_scenery; ++r) {
    resample_scenery(scenery, field.grid, derive_seed(seed, SeedDomain::kScenery, r));
    double d = 0.0;
    const auto row = field.row(0);
    for (std::size_t i = 0; i < row.size(); ++i) d += row[i] * scenery.dW[i];
    z[r] = d / sd;
  }
  return {"conditional Gaussianity " + detail::family_label(spec),
          stats::ks_one_sample(std::move(z), stats::normal_cdf), kKsLevel};
}

// ---------------------------------------------------------------------------
// Moment identity E|Delta_t - Delta_s|^2 = |t - s|^{2h} E[Delta_1^2]

struct MomentCheck {
  double s = 0.0, t = 0.0;
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;
  double z = 0.0;
  bool pass = false;
};

inline constexpr double kMomentZ = 3.29;

inline MomentCheck moment_identity_check(const ProcessSpec& spec, double s, double t, std::size_t n,
                                         std::uint64_t seed, const SimulationOptions& sim = {}) {
  const double hi = std::max(s, t);
  const std::size_t idx[] = {steps_for(s, sim.dt), steps_for(t, sim.dt)};
  const std::size_t one[] = {steps_for(1.0, sim.dt)};
  auto inc2 = replica_values(spec, hi, n, substream(seed, 1), sim, [&](const PathSample& p, std::uint64_t sd) {
    const auto d = delta_at_steps(p, sample_scenery(grid_for_path(p, sim.dx), sd), idx);
    return (d[1] - d[0]) * (d[1] - d[0]);
  });
  auto d1sq = replica_values(spec, 1.0, n, substream(seed, 2), sim, [&](const PathSample& p, std::uint64_t sd) {
    const double d = delta_at_steps(p, sample_scenery(grid_for_path(p, sim.dx), sd), one)[0];
    return d * d;
  });
  const auto l = stats::mean_estimate(inc2);
  const auto r = stats::mean_estimate(d1sq);
  const double h = 1.0 - spec.gamma() / 2.0;
  const double factor = std::pow(std::abs(t - s), 2.0 * h);
  MomentCheck m{s, t, l.mean, l.se, factor * r.mean, factor * r.se, 0.0, false};
  m.z = (m.lhs - m.rhs) / std::hypot(m.lhs_se, m.rhs_se);
  m.pass = std::abs(m.z) <= kMomentZ;
  return m;
}

// ---------------------------------------------------------------------------
// The scheduled identity suite: 20 two-sample tests at level 0.01

inline std::vector<ProcessSpec> reference_families() {
  return {ProcessSpec::brownian(), ProcessSpec::stable_levy(1.5), ProcessSpec::fractional(0.75),
          ProcessSpec::iterated()};
}

inline constexpr std::size_t kScheduledKsTests = 20;
inline constexpr std::size_t kAllowedKsFailures = 1;

/// Self-similarity of Y (4 families x c in {2, 16}), V scaling (4 families, c = 2),
/// Delta time reversal at t in {T/4, T/2, T}, Delta stationary increments at
/// (s, t) in {(0.5, 0.5), (1, 1)}, and Delta_1 symmetry for three drivers.
/// Every test draws its own replica sets.
inline std::vector<IdentityTest> scheduled_identity_tests(std::uint64_t master, std::size_t n,
                                                          const SimulationOptions& sim = {}) {
  std::vector<IdentityTest> out;
  std::uint64_t k = 0;
  auto next = [&] { return derive_seed(master, SeedDomain::kAuxiliary, k++); };
  for (const auto& spec : reference_families())
    for (double c : {2.0, 16.0}) out.push_back(ks_self_similarity(spec, c, n, next(), sim));
  for (const auto& spec : reference_families()) out.push_back(ks_v_scaling(spec, 2.0, n, next(), sim));
  const auto bm = ProcessSpec::brownian();
  for (double t : {0.25, 0.5, 1.0}) out.push_back(ks_delta_time_reversal(bm, 1.0, t, n, next(), sim));
  out.push_back(ks_delta_stationary_increments(bm, 0.5, 0.5, n, next(), sim));
  out.push_back(ks_delta_stationary_increments(bm, 1.0, 1.0, n, next(), sim));
  for (const auto& spec : {bm, ProcessSpec::fractional(0.75), ProcessSpec::iterated()})
    out.push_back(ks_delta_symmetry(spec, n, next(), sim));
  return out;
}

inline std::size_t count_failures(const std::vector<IdentityTest>& tests) {
  std::size_t f = 0;
  for (const auto& t : tests) f += t.pass() ? 0 : 1;
  return f;
}

}  // namespace brownscene
