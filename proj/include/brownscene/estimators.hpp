#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brownscene/error.hpp"
#include "brownscene/local_time.hpp"
#include "brownscene/process.hpp"
#include "brownscene/replica.hpp"
#include "brownscene/scenery.hpp"
#include "brownscene/stats.hpp"

namespace brownscene {

// ===========================================================================
// Persistence probability F(T) = P[sup_{[0,T]} Delta <= barrier]

struct FitWindow {
  double t_lo = 0.0;
  double t_hi = std::numeric_limits<double>::infinity();
};

enum class FitWeighting { kInverseVariance, kUniform };

struct FitOptions {
  FitWeighting weighting = FitWeighting::kInverseVariance;
  double min_count = 0.0;  // minimum surviving replicas for a point to enter the fit
};

struct ExponentFit {
  double slope = 0.0;
  double se = 0.0;
  std::size_t points = 0;
};

struct PersistenceEstimate {
  ProcessSpec spec;
  double barrier = 1.0;
  std::vector<double> T_grid;
  std::size_t n_replicas = 0;
  std::vector<double> F_hat;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  /// F_hat with the supremum taken over every second time step only; the gap
  /// to F_hat measures the undershoot of the discretized supremum.
  std::vector<double> F_hat_coarse;
  std::optional<double> fitted_slope;
  double slope_se = 0.0;
  std::size_t fit_points = 0;
  FitWindow fit_window;
  std::vector<std::string> flags;
  double dt = 0.0;
  unsigned workers = 1;

  /// Largest |F_hat - F_hat_coarse| over the grid.
  double sup_discretization_gap() const {
    double g = 0.0;
    for (std::size_t k = 0; k < F_hat.size() && k < F_hat_coarse.size(); ++k)
      g = std::max(g, std::abs(F_hat[k] - F_hat_coarse[k]));
    return g;
  }
};

/// Estimate from survivor counts (which may be fractional, for synthetic input).
inline PersistenceEstimate persistence_from_counts(const ProcessSpec& spec, double barrier,
                                                   std::vector<double> T_grid,
                                                   std::span<const double> survivors, std::size_t n) {
  if (T_grid.size() != survivors.size()) throw ParameterError("persistence: grid and counts differ in size");
  if (n == 0) throw ParameterError("persistence: no replicas");
  PersistenceEstimate e;
  e.spec = spec;
  e.barrier = barrier;
  e.T_grid = std::move(T_grid);
  e.n_replicas = n;
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const double f = survivors[k] / nd;
    const auto ci = stats::wilson_interval(survivors[k], nd);
    e.F_hat.push_back(f);
    e.ci_lo.push_back(std::min(ci.lo, f));
    e.ci_hi.push_back(std::max(ci.hi, f));
    if (survivors[k] <= 0.0 || survivors[k] >= nd)
      e.flags.push_back("T=" + std::to_string(e.T_grid[k]) + ": " +
                        (survivors[k] <= 0.0 ? "no replica survives" : "every replica survives") +
                        ", point omitted from the slope fit");
  }
  e.F_hat_coarse = e.F_hat;  // no coarse supremum available from counts alone
  return e;
}

/// Weighted least squares of log F_hat on log T over the window. Points with
/// F_hat in {0, 1} or fewer than min_count survivors are skipped.
inline ExponentFit fit_exponent(const PersistenceEstimate& e, const FitWindow& window,
                                const FitOptions& options = {}) {
  std::vector<double> x, y, w;
  const double nd = static_cast<double>(e.n_replicas);
  for (std::size_t k = 0; k < e.T_grid.size(); ++k) {
    const double t = e.T_grid[k];
    const double f = e.F_hat[k];
    if (t < window.t_lo * (1 - 1e-12) || t > window.t_hi * (1 + 1e-12)) continue;
    if (!(f > 0.0 && f < 1.0) || f * nd < options.min_count) continue;
    x.push_back(std::log(t));
    y.push_back(std::log(f));
    if (options.weighting == FitWeighting::kUniform) {
      w.push_back(1.0);
    } else {
      const double sd = (std::log(e.ci_hi[k]) - std::log(e.ci_lo[k])) / (2.0 * stats::kZ95);
      w.push_back(1.0 / (sd * sd));
    }
  }
  if (x.size() < 3)
    throw EstimationError("fit_exponent: " + std::to_string(x.size()) + " usable points in window, need 3");
  const auto fit = stats::weighted_line_fit(x, y, w, options.weighting == FitWeighting::kInverseVariance);
  return {fit.slope, fit.slope_se, x.size()};
}

/// Window covering the last two decades of the grid, [T_max / 100, T_max].
inline FitWindow two_decade_window(std::span<const double> T_grid) {
  if (T_grid.empty()) return {};
  const double top = *std::max_element(T_grid.begin(), T_grid.end());
  return {top / 100.0, top};
}

struct PersistenceOptions {
  SimulationOptions sim{};
  double min_count = 50.0;
};

/// Attaches the default fit (two-decade window, >= min_count survivors); a
/// failed fit leaves fitted_slope empty and records the reason in flags.
inline void attach_default_fit(PersistenceEstimate& e, double min_count) {
  e.fit_window = two_decade_window(e.T_grid);
  try {
    const auto fit = fit_exponent(e, e.fit_window, {FitWeighting::kInverseVariance, min_count});
    e.fitted_slope = fit.slope;
    e.slope_se = fit.se;
    e.fit_points = fit.points;
  } catch (const EstimationError& err) {
    e.fitted_slope.reset();
    e.flags.push_back(std::string("slope omitted: ") + err.what());
  }
}

inline void check_increasing(std::span<const double> grid, const char* what) {
  if (grid.empty()) throw ParameterError(std::string(what) + ": empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw ParameterError(std::string(what) + ": grid must be increasing");
}

inline PersistenceEstimate estimate_persistence(const ProcessSpec& spec, double barrier,
                                                std::vector<double> T_grid, std::size_t n_replicas,
                                                std::uint64_t master_seed,
                                                const PersistenceOptions& options = {}) {
  spec.validate();
  check_increasing(T_grid, "estimate_persistence");
  if (n_replicas < 100) throw ParameterError("estimate_persistence: need at least 100 replicas");
  const double dt = options.sim.dt;
  std::vector<std::size_t> steps;
  for (double t : T_grid) steps.push_back(steps_for(t, dt));
  const ReplicaSource source(spec, T_grid.back(), dt, master_seed);

  struct Sups {
    std::vector<double> fine, coarse;
  };
  const auto sups = run_campaign<Sups>(source, n_replicas, options.sim.workers,
                                       [&](std::size_t r, const PathSample& path) {
    const auto scenery = replica_scenery(source, r, path, options.sim.dx);
    Sups s{std::vector<double>(steps.size()), std::vector<double>(steps.size())};
    double fine = 0.0, coarse = 0.0;
    std::size_t j = 0;
    stream_delta(path, scenery, [&](std::size_t k, double d) {
      fine = std::max(fine, d);
      if (k % 2 == 0) coarse = std::max(coarse, d);
      while (j < steps.size() && steps[j] == k) {
        s.fine[j] = fine;
        s.coarse[j] = coarse;
        ++j;
      }
    });
    return s;
  });

  std::vector<double> alive(steps.size(), 0.0), alive_coarse(steps.size(), 0.0);
  for (const auto& s : sups)
    for (std::size_t j = 0; j < steps.size(); ++j) {
      if (s.fine[j] <= barrier) alive[j] += 1.0;
      if (s.coarse[j] <= barrier) alive_coarse[j] += 1.0;
    }
  auto e = persistence_from_counts(spec, barrier, T_grid, alive, n_replicas);
  for (std::size_t j = 0; j < steps.size(); ++j) e.F_hat_coarse[j] = alive_coarse[j] / static_cast<double>(n_replicas);
  e.dt = dt;
  e.workers = options.sim.workers;
  attach_default_fit(e, options.min_count);
  return e;
}

// ===========================================================================
// Molchan functional I(T) = E[(int_0^T e^{Delta_t} dt)^{-1}]

/// log of the trapezoidal integral of exp(delta) over each prefix [0, steps[j] dt].
/// Evaluated as a running log-sum-exp so large excursions do not overflow.
inline std::vector<double> log_exp_integrals(std::span<const double> delta, double dt,
                                             std::span<const std::size_t> steps) {
  std::vector<double> out(steps.size());
  if (delta.empty()) throw ParameterError("log_exp_integrals: empty path");
  double m = delta[0];
  double interior = 0.0;  // sum_{k=1}^{K-1} exp(delta_k - m)
  std::size_t j = 0;
  for (std::size_t k = 0; k < delta.size() && j < steps.size(); ++k) {
    while (j < steps.size() && steps[j] == k) {
      if (k == 0) throw ParameterError("log_exp_integrals: zero-length horizon");
      const double ends = 0.5 * (std::exp(delta[0] - m) + std::exp(delta[k] - m));
      out[j] = std::log(dt) + m + std::log(interior + ends);
      ++j;
    }
    if (k > 0) {
      if (delta[k] > m) {
        interior *= std::exp(m - delta[k]);
        m = delta[k];
      }
      interior += std::exp(delta[k] - m);
    }
  }
  if (j != steps.size()) throw ParameterError("log_exp_integrals: horizon beyond the path");
  return out;
}

struct MolchanEstimate {
  double gamma = 0.5;
  std::vector<double> T_grid;
  std::size_t n_replicas = 0;
  std::vector<double> I_hat;
  std::vector<double> I_se;
  std::vector<double> normalized;     // I_hat T^{gamma/2} / (1 - gamma/2)
  std::vector<double> normalized_se;
  std::vector<double> ci_lo;          // 95% normal interval of `normalized`
  std::vector<double> ci_hi;
  std::vector<std::size_t> flagged;   // replicas whose reciprocal underflowed to 0
  double max_delta_01 = 0.0;          // E[max_{[0,1]} Delta], separate campaign
  double max_delta_01_se = 0.0;
  std::size_t n_replicas_01 = 0;
};

/// reciprocals[j][r] = 1 / int_0^{T_j} e^{Delta} for replica r; maxima[r] = max_{[0,1]} Delta.
inline MolchanEstimate molchan_from_samples(double gamma, std::vector<double> T_grid,
                                            const std::vector<std::vector<double>>& reciprocals,
                                            std::span<const double> maxima) {
  MolchanEstimate m;
  m.gamma = gamma;
  m.T_grid = std::move(T_grid);
  m.n_replicas = reciprocals.empty() ? 0 : reciprocals.front().size();
  const double norm = 1.0 - gamma / 2.0;
  for (std::size_t j = 0; j < m.T_grid.size(); ++j) {
    const auto est = stats::mean_estimate(reciprocals[j]);
    std::size_t zero = 0;
    for (double v : reciprocals[j])
      if (!(v >= std::numeric_limits<double>::min())) ++zero;
    const double scale = std::pow(m.T_grid[j], gamma / 2.0) / norm;
    m.I_hat.push_back(est.mean);
    m.I_se.push_back(est.se);
    m.normalized.push_back(est.mean * scale);
    m.normalized_se.push_back(est.se * scale);
    m.ci_lo.push_back((est.mean - stats::kZ95 * est.se) * scale);
    m.ci_hi.push_back((est.mean + stats::kZ95 * est.se) * scale);
    m.flagged.push_back(zero);
  }
  if (!maxima.empty()) {
    const auto mx = stats::mean_estimate(maxima);
    m.max_delta_01 = mx.mean;
    m.max_delta_01_se = mx.se;
    m.n_replicas_01 = mx.n;
  }
  return m;
}

struct MolchanOptions {
  SimulationOptions sim{};
  double dt_01 = 1.0 / 16384.0;        // grid for the E[max_{[0,1]} Delta] campaign
  std::size_t n_replicas_01 = 20000;
};

/// E[max_{[0,1]} Delta] with its standard error.
inline stats::MeanEstimate expected_max_delta(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                                              double dt, const DxPolicy& dx, unsigned workers) {
  const ReplicaSource source(spec, 1.0, dt, seed);
  const auto maxima = run_campaign<double>(source, n, workers, [&](std::size_t r, const PathSample& path) {
    const auto scenery = replica_scenery(source, r, path, dx);
    double mx = 0.0;
    stream_delta(path, scenery, [&](std::size_t, double d) { mx = std::max(mx, d); });
    return mx;
  });
  return stats::mean_estimate(maxima);
}

inline MolchanEstimate molchan_functional(const ProcessSpec& spec, std::vector<double> T_grid,
                                          std::size_t n_replicas, std::uint64_t seed,
                                          const MolchanOptions& options = {}) {
  spec.validate();
  check_increasing(T_grid, "molchan_functional");
  if (n_replicas < 2) throw ParameterError("molchan_functional: need at least two replicas");
  const double dt = options.sim.dt;
  std::vector<std::size_t> steps;
  for (double t : T_grid) steps.push_back(steps_for(t, dt));
  const ReplicaSource source(spec, T_grid.back(), dt, seed);
  const auto logs = run_campaign<std::vector<double>>(source, n_replicas, options.sim.workers,
                                                      [&](std::size_t r, const PathSample& path) {
    const auto scenery = replica_scenery(source, r, path, options.sim.dx);
    return log_exp_integrals(delta_on_grid(path, scenery), dt, steps);
  });
  std::vector<std::vector<double>> recips(steps.size(), std::vector<double>(n_replicas));
  for (std::size_t r = 0; r < n_replicas; ++r)
    for (std::size_t j = 0; j < steps.size(); ++j) recips[j][r] = std::exp(-logs[r][j]);

  const ReplicaSource source01(spec, 1.0, options.dt_01, substream(seed, 0x6d6178303131ULL));
  std::vector<double> maxima;
  if (options.n_replicas_01 > 0) {
    maxima = run_campaign<double>(source01, options.n_replicas_01, options.sim.workers,
                                  [&](std::size_t r, const PathSample& path) {
      const auto scenery = replica_scenery(source01, r, path, options.sim.dx);
      double mx = 0.0;
      stream_delta(path, scenery, [&](std::size_t, double d) { mx = std::max(mx, d); });
      return mx;
    });
  }
  return molchan_from_samples(spec.gamma(), std::move(T_grid), recips, maxima);
}

/// Normalized I at grid points i and j agree within the joint 95% interval.
inline bool molchan_stable(const MolchanEstimate& m, std::size_t i, std::size_t j) {
  const double joint = stats::kZ95 * std::hypot(m.normalized_se[i], m.normalized_se[j]);
  return std::abs(m.normalized[i] - m.normalized[j]) <= joint;
}

/// Relative gap between normalized I at grid point i and E[max_{[0,1]} Delta].
inline double molchan_relative_gap(const MolchanEstimate& m, std::size_t i) {
  return std::abs(m.normalized[i] / m.max_delta_01 - 1.0);
}

// ===========================================================================
// Maximal inequality P[max_{[0,T]} Delta >= x] <= 2 P[Delta_T >= x]

struct MaximalInequalityRow {
  double x = 0.0;
  double p_max = 0.0;
  double p_end = 0.0;
  double slack = 0.0;
  bool pass = false;
};

struct MaximalInequalityReport {
  ProcessSpec spec;
  double horizon = 1.0;
  std::size_t n_replicas = 0;
  std::vector<MaximalInequalityRow> rows;
  bool pass = false;
};

/// Per x: pass iff p_max <= 2 p_end + 2 J, J the Wilson half-width of p_max
/// combined in quadrature with that of 2 p_end.
inline MaximalInequalityReport maximal_inequality_from_samples(const ProcessSpec& spec, double horizon,
                                                               std::span<const double> maxima,
                                                               std::span<const double> ends,
                                                               std::span<const double> x_grid) {
  MaximalInequalityReport rep{spec, horizon, maxima.size(), {}, true};
  const double n = static_cast<double>(maxima.size());
  for (double x : x_grid) {
    double cm = 0.0, ce = 0.0;
    for (double v : maxima) cm += v >= x ? 1.0 : 0.0;
    for (double v : ends) ce += v >= x ? 1.0 : 0.0;
    MaximalInequalityRow row;
    row.x = x;
    row.p_max = cm / n;
    row.p_end = ce / static_cast<double>(ends.size());
    const double hm = stats::wilson_interval(cm, n).half_width();
    const double he = stats::wilson_interval(ce, static_cast<double>(ends.size())).half_width();
    row.slack = 2.0 * std::hypot(hm, 2.0 * he);
    row.pass = row.p_max <= 2.0 * row.p_end + row.slack;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

inline MaximalInequalityReport maximal_inequality_check(const ProcessSpec& spec, double horizon,
                                                        std::vector<double> x_grid, std::size_t n_replicas,
                                                        std::uint64_t seed, const SimulationOptions& sim = {}) {
  spec.validate();
  for (double x : x_grid)
    if (!(x >= 0.0)) throw ParameterError("maximal_inequality_check: x must be nonnegative");
  const ReplicaSource source(spec, horizon, sim.dt, seed);
  struct MaxEnd {
    double max, end;
  };
  const auto res = run_campaign<MaxEnd>(source, n_replicas, sim.workers, [&](std::size_t r, const PathSample& path) {
    const auto scenery = replica_scenery(source, r, path, sim.dx);
    MaxEnd me{0.0, 0.0};
    stream_delta(path, scenery, [&](std::size_t, double d) {
      me.max = std::max(me.max, d);
      me.end = d;
    });
    return me;
  });
  std::vector<double> maxima, ends;
  for (const auto& me : res) {
    maxima.push_back(me.max);
    ends.push_back(me.end);
  }
  return maximal_inequality_from_samples(spec, horizon, maxima, ends, x_grid);
}

// ===========================================================================
// Tail envelopes

enum class TailSide { kRight, kLeft };

/// log P_hat[X >= x] <= log C - c x^p   (right), or
/// log P_hat[X <= x] <= log C - c x^-p  (left),
/// fitted over order statistics whose tail count lies in [min_count, n/2].
struct TailEnvelopeResult {
  std::string quantity;
  TailSide side = TailSide::kRight;
  double exponent = 0.0;
  stats::EnvelopeLine envelope;
  std::size_t points = 0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  double local_exponent = 0.0;  // slope of log(-log P_hat) on log x (or log 1/x); diagnostic only
  bool low_power = true;
  bool admissible = false;
};

inline constexpr std::size_t kMinTailPoints = 5;

inline TailEnvelopeResult tail_envelope(std::string quantity, std::vector<double> samples, double exponent,
                                        TailSide side, double min_count = 50.0, std::size_t levels = 40) {
  TailEnvelopeResult res;
  res.quantity = std::move(quantity);
  res.side = side;
  res.exponent = exponent;
  const std::size_t n = samples.size();
  if (n == 0) return res;
  // right tail: sorted descending, P_hat[X >= s_(k)] = k / n for the k-th largest
  if (side == TailSide::kRight) std::sort(samples.begin(), samples.end(), std::greater<>());
  else std::sort(samples.begin(), samples.end());
  std::vector<double> u, y, lx, ly;
  const double k_top = static_cast<double>(n) / 2.0;
  std::size_t last_k = 0;
  if (k_top >= min_count && min_count >= 1.0) {
    const double ratio = std::pow(min_count / k_top, 1.0 / static_cast<double>(levels - 1));
    for (std::size_t l = 0; l < levels; ++l) {
      const auto k = static_cast<std::size_t>(std::llround(k_top * std::pow(ratio, static_cast<double>(l))));
      if (k == last_k || k == 0) continue;
      last_k = k;
      const double x = samples[k - 1];
      if (!(x > 0.0)) continue;
      const double p = static_cast<double>(k) / static_cast<double>(n);
      u.push_back(side == TailSide::kRight ? std::pow(x, exponent) : std::pow(x, -exponent));
      y.push_back(std::log(p));
      lx.push_back(side == TailSide::kRight ? std::log(x) : -std::log(x));
      ly.push_back(std::log(-std::log(p)));
      res.x_lo = res.points == 0 ? x : std::min(res.x_lo, x);
      res.x_hi = std::max(res.x_hi, x);
      ++res.points;
    }
  }
  res.low_power = res.points < kMinTailPoints;
  if (res.points >= 2) {
    res.envelope = stats::upper_envelope(u, y);
    std::vector<double> ones(lx.size(), 1.0);
    try {
      res.local_exponent = stats::weighted_line_fit(lx, ly, ones, false).slope;
    } catch (const EstimationError&) {
      res.local_exponent = 0.0;
    }
  }
  res.admissible = !res.low_power && res.envelope.valid;
  return res;
}

struct TailReport {
  ProcessSpec spec;
  std::size_t n_replicas = 0;
  TailEnvelopeResult delta1;    // Delta_1 right tail, exponent 2 alpha / (1 + alpha)
  TailEnvelopeResult v1_upper;  // V_1 right tail, exponent alpha
  TailEnvelopeResult v1_lower;  // V_1 left tail, exponent beta
  bool pass() const noexcept { return delta1.admissible && v1_upper.admissible && v1_lower.admissible; }
};

inline double delta1_tail_exponent(const ProcessSpec& spec) {
  return 2.0 * spec.alpha() / (1.0 + spec.alpha());
}

/// One campaign on [0, 1] yields both Delta_1 and V_1 per replica.
inline TailReport tail_check(const ProcessSpec& spec, std::size_t n_replicas, std::uint64_t seed,
                             const SimulationOptions& sim = {}) {
  spec.validate();
  const ReplicaSource source(spec, 1.0, sim.dt, seed);
  struct DV {
    double delta, v;
  };
  const double one[] = {1.0};
  const auto res = run_campaign<DV>(source, n_replicas, sim.workers, [&](std::size_t r, const PathSample& path) {
    const auto field = compute_local_time(path, one, sim.dx);
    const auto scenery = sample_scenery(field.grid, source.scenery_seed(r));
    return DV{build_delta(field, scenery).delta[0], field.V[0]};
  });
  std::vector<double> d, v;
  for (const auto& x : res) {
    d.push_back(x.delta);
    v.push_back(x.v);
  }
  TailReport rep;
  rep.spec = spec;
  rep.n_replicas = n_replicas;
  rep.delta1 = tail_envelope("Delta_1", d, delta1_tail_exponent(spec), TailSide::kRight);
  rep.v1_upper = tail_envelope("V_1 upper", v, spec.alpha(), TailSide::kRight);
  rep.v1_lower = tail_envelope("V_1 lower", std::move(v), spec.beta(), TailSide::kLeft);
  return rep;
}

inline TailEnvelopeResult tail_check_delta1(const ProcessSpec& spec, std::size_t n_replicas, std::uint64_t seed,
                                            const SimulationOptions& sim = {}) {
  return tail_check(spec, n_replicas, seed, sim).delta1;
}

// ===========================================================================
// Conditional Slepian inequalities

struct SlepianPathResult {
  double p_first = 0.0;       // P[sup_{[u,v]} Delta <= a | Y]
  double p_second = 0.0;      // P[sup_{[v,w]} Delta <= b | Y]
  double p_joint = 0.0;
  double p_second_inc = 0.0;  // P[sup_{[v,w]} (Delta - Delta_v) <= b | Y]
  double p_joint_inc = 0.0;
  double se = 0.0;            // delta-method SE of p_joint - p_first p_second
  double se_inc = 0.0;
  double p_value = 1.0;       // one-sided exact test against negative association
  double p_value_inc = 1.0;
  bool pass = false;
  bool pass_inc = false;
};

struct SlepianReport {
  ProcessSpec spec;
  double u = 0.0, v = 0.0, w = 0.0, a = 1.0, b = 1.0;
  std::size_t n_scenery = 0;
  double alpha = 0.0;
  std::vector<SlepianPathResult> paths;
  std::size_t violations = 0;
  std::size_t violations_inc = 0;
  bool pass() const noexcept { return violations == 0 && violations_inc == 0; }
};

namespace detail {

/// P[X <= x] for X hypergeometric with population n, k marked, m drawn.
inline double hypergeometric_cdf(std::size_t x, std::size_t n, std::size_t k, std::size_t m) {
  auto lchoose = [](double a, double b) { return std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1); };
  const double nd = static_cast<double>(n), kd = static_cast<double>(k), md = static_cast<double>(m);
  const std::size_t lo = m + k > n ? m + k - n : 0;
  const std::size_t hi = std::min({x, k, m});
  const double denom = lchoose(nd, md);
  double p = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double jd = static_cast<double>(j);
    p += std::exp(lchoose(kd, jd) + lchoose(nd - kd, md - jd) - denom);
  }
  return std::min(p, 1.0);
}

struct ProductStatistic {
  double p_joint, p_a, p_b, se, p_value;
};

// p_joint >= p_a p_b from paired indicator samples. se is the delta-method
// error of p_joint - p_a p_b; p_value is Fisher's one-sided exact test of
// the 2x2 table against negative association, which stays valid when one of
// the events is rare.
inline ProductStatistic product_statistic(std::span<const unsigned char> ia, std::span<const unsigned char> ib) {
  const std::size_t n = ia.size();
  const double nd = static_cast<double>(n);
  std::size_t ca = 0, cb = 0, cj = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ca += ia[i];
    cb += ib[i];
    cj += ia[i] & ib[i];
  }
  const double pa = static_cast<double>(ca) / nd, pb = static_cast<double>(cb) / nd, pj = static_cast<double>(cj) / nd;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double infl = (ia[i] & ib[i]) - pj - pb * (ia[i] - pa) - pa * (ib[i] - pb);
    ss += infl * infl;
  }
  const double se = n > 1 ? std::sqrt(ss / (nd - 1) / nd) : 0.0;
  return {pj, pa, pb, se, hypergeometric_cdf(cj, n, ca, cb)};
}

}  // namespace detail

/// Per-path significance level; 50 paths x 2 inequalities keep the family-wise
/// false-alarm rate under 5% at the independence boundary.
inline constexpr double kSlepianAlpha = 5e-4;

inline SlepianReport slepian_check(const ProcessSpec& spec, double u, double v, double w, double a, double b,
                                   std::size_t n_path, std::size_t n_scenery, std::uint64_t seed,
                                   const SimulationOptions& sim = {}) {
  spec.validate();
  if (!(0.0 <= u && u < v && v < w)) throw ParameterError("slepian_check: need 0 <= u < v < w");
  if (n_scenery < 1) throw ParameterError("slepian_check: need scenery replicas");
  const auto ku_opt = grid_index(u, sim.dt);
  if (!ku_opt) throw ParameterError("slepian_check: u is off the time grid");
  const std::size_t ku = *ku_opt, kv = steps_for(v, sim.dt), kw = steps_for(w, sim.dt);
  const ReplicaSource source(spec, w, sim.dt, seed);
  SlepianReport rep{spec, u, v, w, a, b, n_scenery, kSlepianAlpha, {}, 0, 0};
  rep.paths = run_campaign<SlepianPathResult>(source, n_path, sim.workers, [&](std::size_t p, const PathSample& path) {
    const GridSpec grid = grid_for_path(path, sim.dx);
    std::vector<unsigned char> first(n_scenery), second(n_scenery), second_inc(n_scenery);
    SceneryField scenery;
    const std::uint64_t base = source.scenery_seed(p);
    for (std::size_t s = 0; s < n_scenery; ++s) {
      resample_scenery(scenery, grid, substream(base, s));
      double sup1 = -std::numeric_limits<double>::infinity();
      double sup2 = sup1, sup2_inc = sup1, at_v = 0.0;
      stream_delta(path, scenery, [&](std::size_t k, double d) {
        if (k >= ku && k <= kv) sup1 = std::max(sup1, d);
        if (k == kv) at_v = d;
        if (k >= kv && k <= kw) {
          sup2 = std::max(sup2, d);
          sup2_inc = std::max(sup2_inc, d - at_v);
        }
      });
      first[s] = sup1 <= a;
      second[s] = sup2 <= b;
      second_inc[s] = sup2_inc <= b;
    }
    const auto plain = detail::product_statistic(first, second);
    const auto inc = detail::product_statistic(first, second_inc);
    SlepianPathResult res;
    res.p_joint = plain.p_joint;
    res.p_first = plain.p_a;
    res.p_second = plain.p_b;
    res.se = plain.se;
    res.p_value = plain.p_value;
    res.p_joint_inc = inc.p_joint;
    res.p_second_inc = inc.p_b;
    res.se_inc = inc.se;
    res.p_value_inc = inc.p_value;
    res.pass = res.p_value >= kSlepianAlpha;
    res.pass_inc = res.p_value_inc >= kSlepianAlpha;
    return res;
  });
  for (const auto& r : rep.paths) {
    rep.violations += r.pass ? 0 : 1;
    rep.violations_inc += r.pass_inc ? 0 : 1;
  }
  return rep;
}

}  // namespace brownscene
