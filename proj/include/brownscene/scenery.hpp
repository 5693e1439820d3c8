#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "brownscene/error.hpp"
#include "brownscene/local_time.hpp"
#include "brownscene/process.hpp"
#include "brownscene/rng.hpp"

namespace brownscene {

/// White-noise increments dW_i ~ N(0, dx), one per grid bin.
struct SceneryField {
  GridSpec grid;
  std::vector<double> dW;
  std::uint64_t seed = 0;
};

inline SceneryField sample_scenery(const GridSpec& grid, std::uint64_t seed) {
  SceneryField s{grid, std::vector<double>(grid.bins()), seed};
  Rng rng(seed);
  const double sd = std::sqrt(grid.dx());
  for (auto& w : s.dW) w = sd * rng.normal();
  return s;
}

/// In-place redraw for campaigns that reuse one buffer per worker.
inline void resample_scenery(SceneryField& s, const GridSpec& grid, std::uint64_t seed) {
  s.grid = grid;
  s.seed = seed;
  s.dW.resize(grid.bins());
  Rng rng(seed);
  const double sd = std::sqrt(grid.dx());
  for (auto& w : s.dW) w = sd * rng.normal();
}

/// Delta_t = int L_t(x) dW(x) at the checkpoints of a local-time field.
struct DeltaPath {
  std::vector<double> checkpoints;
  std::vector<double> delta;
  std::vector<double> running_sup;  // max over checkpoints t_i <= t_j
  std::vector<double> cond_var;     // V_{t_j}, the conditional variance given Y
};

inline DeltaPath build_delta(const LocalTimeField& field, const SceneryField& scenery) {
  if (!(field.grid == scenery.grid) || scenery.dW.size() != field.grid.bins())
    throw ParameterError("build_delta: local-time and scenery grids differ");
  const std::size_t m = field.rows();
  DeltaPath d{field.checkpoints, std::vector<double>(m), std::vector<double>(m), field.V};
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const auto row = field.row(j);
    double s = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * scenery.dW[i];
    d.delta[j] = s;
    sup = std::max(sup, s);
    d.running_sup[j] = sup;
  }
  return d;
}

/// E[Delta_s Delta_t | Y] = sum_i L_s(x_i) L_t(x_i) dx.
inline double conditional_covariance(const LocalTimeField& field, double s, double t) {
  const auto a = field.row(field.require_index(s));
  const auto b = field.row(field.require_index(t));
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += a[i] * b[i];
  return c * field.grid.dx();
}

/// E[Delta_t (Delta_s - Delta_t) | Y] >= 0 for t <= s, the covariance sign
/// condition behind the conditional Slepian and maximal inequalities.
/// Evaluated as sum_i L_t (L_s - L_t) dx so that every term is nonnegative
/// when local time is monotone.
inline bool delta_increment_cov_check(const LocalTimeField& field, double t, double s) {
  if (t > s) throw ParameterError("delta_increment_cov_check: requires t <= s");
  const auto lt = field.row(field.require_index(t));
  const auto ls = field.row(field.require_index(s));
  double c = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < lt.size(); ++i) {
    c += lt[i] * (ls[i] - lt[i]);
    scale += ls[i] * ls[i];
  }
  const double eps = 16.0 * std::numeric_limits<double>::epsilon() * scale;
  return c >= -eps;
}

/// Streams Delta at every step of the path's time grid without materialising
/// the local-time matrix: visit(k, Delta_{k dt}) for k = 0..n. Step k adds
/// sum_i share_i / dx * dW_i over the bins the segment crosses, which is the
/// same sum build_delta forms from the field.
template <class Visit>
inline void stream_delta(const PathSample& path, const SceneryField& scenery, Visit&& visit) {
  const GridSpec& grid = scenery.grid;
  const double inv_dx = 1.0 / grid.dx();
  const double* dw = scenery.dW.data();
  double delta = 0.0;
  visit(std::size_t{0}, 0.0);
  const std::size_t n = path.steps();
  for (std::size_t k = 0; k < n; ++k) {
    double inc = 0.0;
    for_each_segment_share(grid, path.values[k], path.values[k + 1], path.dt,
                           [&](std::size_t i, double share) { inc += share * dw[i]; });
    delta += inc * inv_dx;
    visit(k + 1, delta);
  }
}

/// Full-resolution Delta path as a vector (length n + 1).
inline std::vector<double> delta_on_grid(const PathSample& path, const SceneryField& scenery) {
  std::vector<double> out(path.steps() + 1);
  stream_delta(path, scenery, [&](std::size_t k, double d) { out[k] = d; });
  return out;
}

/// Checkpoint times for CSV export: a uniform grid of spacing `fine` on [0, min(1, T)]
/// merged with the dyadic times T 2^-j down to the time step.
inline std::vector<double> default_checkpoints(double horizon, double dt, double fine = 1.0 / 16.0) {
  std::vector<double> ts;
  const double top = std::min(1.0, horizon);
  const double step = std::max(fine, dt);
  for (std::size_t i = 0; static_cast<double>(i) * step <= top * (1 + 1e-12); ++i)
    if (grid_index(static_cast<double>(i) * step, dt)) ts.push_back(static_cast<double>(i) * step);
  for (double t = horizon; t >= dt * (1 - 1e-12); t *= 0.5)
    if (grid_index(t, dt)) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  std::vector<double> out;
  for (double t : ts)
    if (out.empty() || std::abs(t - out.back()) > 1e-9 * std::max(1.0, t)) out.push_back(t);
  return out;
}

}  // namespace brownscene
