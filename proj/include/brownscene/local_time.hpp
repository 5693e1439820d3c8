#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "brownscene/error.hpp"
#include "brownscene/process.hpp"

namespace brownscene {

/// Uniform partition of [x_min, x_max] into bins of width dx.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(double x_min, double x_max, double dx) : x_min_(x_min), x_max_(x_max), dx_(dx) {
    if (!(dx > 0.0) || !std::isfinite(dx)) throw ParameterError("GridSpec: dx must be positive");
    if (!(x_min < x_max)) throw ParameterError("GridSpec: x_min must be below x_max");
    bins_ = static_cast<std::size_t>(std::ceil((x_max - x_min) / dx - 1e-9));
    bins_ = std::max<std::size_t>(bins_, 1);
  }

  /// Odd number of bins with bin centres at integer multiples of dx, covering
  /// [-reach - dx, reach + dx]. reach = 0 gives three bins centred at 0.
  static GridSpec centered(double reach, double dx) {
    const double k = std::ceil(reach / dx) + 1.0;
    return GridSpec(-(k + 0.5) * dx, (k + 0.5) * dx, dx);
  }

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double dx() const noexcept { return dx_; }
  std::size_t bins() const noexcept { return bins_; }

  double edge(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
  double center(std::size_t i) const noexcept { return x_min_ + (static_cast<double>(i) + 0.5) * dx_; }

  /// Bin holding x; bins are half-open [edge(i), edge(i+1)), clamped at the ends.
  std::size_t bin_of(double x) const noexcept {
    const double u = std::floor((x - x_min_) / dx_);
    if (u <= 0.0) return 0;
    const auto i = static_cast<std::size_t>(u);
    return std::min(i, bins_ - 1);
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
    return a.x_min_ == b.x_min_ && a.dx_ == b.dx_ && a.bins_ == b.bins_;
  }

 private:
  double x_min_ = -1.5;
  double x_max_ = 1.5;
  double dx_ = 1.0;
  std::size_t bins_ = 3;
};

/// Bin width selection: dx = max(kappa * s, floor), where s is the robust
/// per-step scale of the path (median |increment| / 0.6745, falling back to the
/// RMS increment when the median is zero). `fixed` overrides the rule.
/// Bins are capped at max_bins by widening dx.
struct DxPolicy {
  double kappa = 1.0;
  double floor = 1e-9;
  std::optional<double> fixed;
  std::size_t max_bins = std::size_t{1} << 20;

  static DxPolicy fixed_width(double dx) {
    DxPolicy p;
    p.fixed = dx;
    return p;
  }
};

inline double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Robust per-step increment scale of a path, from at most kScaleSample
/// evenly strided increments.
inline constexpr std::size_t kScaleSample = 8192;

inline double increment_scale(const PathSample& path) {
  const std::size_t n = path.steps();
  if (n == 0) return 0.0;
  const std::size_t stride = (n + kScaleSample - 1) / kScaleSample;
  std::vector<double> inc;
  inc.reserve(n / stride + 1);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; k += stride) {
    const double d = std::abs(path.values[k + 1] - path.values[k]);
    inc.push_back(d);
    ss += d * d;
  }
  auto mid = inc.begin() + static_cast<std::ptrdiff_t>(inc.size() / 2);
  std::nth_element(inc.begin(), mid, inc.end());
  const double med = *mid / 0.6744897501960817;
  if (med > 0.0) return med;
  return std::sqrt(ss / static_cast<double>(inc.size()));
}

inline double resolve_dx(const PathSample& path, const DxPolicy& policy) {
  const double reach = max_abs(path.values);
  double dx = policy.fixed ? *policy.fixed : std::max(policy.kappa * increment_scale(path), policy.floor);
  if (!(dx > 0.0)) throw ParameterError("dx policy produced a non-positive bin width");
  if (policy.max_bins > 3) {
    const double cap = 2.0 * (reach + 2.0 * dx) / static_cast<double>(policy.max_bins - 3);
    dx = std::max(dx, cap);
  }
  return dx;
}

/// Grid sized from the path's range: covers [-max|Y| - dx, max|Y| + dx].
inline GridSpec grid_for_path(const PathSample& path, const DxPolicy& policy = {}) {
  const double dx = resolve_dx(path, policy);
  return GridSpec::centered(max_abs(path.values), dx);
}

/// Visits the bins the straight segment a -> b crosses with the share of the
/// step's time spent in each: visit(bin, share). Shares sum to dt; a flat
/// segment puts all of dt into bin_of(a).
template <class Visit>
inline void for_each_segment_share(const GridSpec& grid, double a, double b, double dt, Visit&& visit) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const std::size_t i0 = grid.bin_of(lo);
  const std::size_t i1 = grid.bin_of(hi);
  if (i0 == i1) {
    visit(i0, dt);
    return;
  }
  const double rate = dt / (hi - lo);
  double used = std::max(grid.edge(i0 + 1) - lo, 0.0) * rate;
  visit(i0, used);
  const double inner = grid.dx() * rate;
  for (std::size_t i = i0 + 1; i < i1; ++i) {
    visit(i, inner);
    used += inner;
  }
  visit(i1, std::max(dt - used, 0.0));
}

/// Local time L_t(x) on a spatial grid at a list of checkpoint times, in
/// time-per-space units, plus V_t = sum_i L_t(x_i)^2 dx.
struct LocalTimeField {
  GridSpec grid;
  std::vector<double> checkpoints;
  std::vector<double> L;  // row-major, checkpoints.size() x grid.bins()
  std::vector<double> V;

  std::size_t rows() const noexcept { return checkpoints.size(); }

  std::span<const double> row(std::size_t j) const noexcept {
    return {L.data() + j * grid.bins(), grid.bins()};
  }

  std::optional<std::size_t> index_of(double t) const noexcept {
    for (std::size_t j = 0; j < checkpoints.size(); ++j)
      if (std::abs(checkpoints[j] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return j;
    return std::nullopt;
  }

  std::size_t require_index(double t) const {
    auto j = index_of(t);
    if (!j) throw ParameterError("t=" + std::to_string(t) + " is not a checkpoint of the field");
    return *j;
  }
};

namespace detail {

// Neumaier summation.
struct CompensatedSum {
  double sum = 0.0, carry = 0.0;
  void add(double x) noexcept {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

inline std::vector<std::size_t> checkpoint_steps(const PathSample& path, std::span<const double> checkpoints) {
  if (path.values.size() < 2) throw ParameterError("local time needs a path with at least one step");
  std::vector<std::size_t> steps;
  steps.reserve(checkpoints.size());
  for (std::size_t j = 0; j < checkpoints.size(); ++j) {
    const auto k = grid_index(checkpoints[j], path.dt);
    if (!k || *k > path.steps())
      throw ParameterError("checkpoint t=" + std::to_string(checkpoints[j]) + " is not on the path's time grid");
    if (j > 0 && *k <= steps.back()) throw ParameterError("checkpoints must be strictly increasing");
    steps.push_back(*k);
  }
  return steps;
}

}  // namespace detail

/// Occupation-time binning of the piecewise-linear path on an explicit grid.
inline LocalTimeField compute_local_time(const PathSample& path, std::span<const double> checkpoints,
                                         const GridSpec& grid) {
  const auto steps = detail::checkpoint_steps(path, checkpoints);
  const std::size_t bins = grid.bins();
  LocalTimeField field{grid, {checkpoints.begin(), checkpoints.end()},
                       std::vector<double>(steps.size() * bins, 0.0), std::vector<double>(steps.size(), 0.0)};
  std::vector<double> mass(bins, 0.0);
  const double inv_dx = 1.0 / grid.dx();
  std::size_t k = 0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    for (; k < steps[j]; ++k) {
      for_each_segment_share(grid, path.values[k], path.values[k + 1], path.dt,
                             [&](std::size_t i, double share) { mass[i] += share; });
    }
    double* out = field.L.data() + j * bins;
    double v = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
      out[i] = mass[i] * inv_dx;
      v += out[i] * out[i];
    }
    field.V[j] = v * grid.dx();
  }
  return field;
}

inline LocalTimeField compute_local_time(const PathSample& path, std::span<const double> checkpoints,
                                         const DxPolicy& policy = {}) {
  return compute_local_time(path, checkpoints, grid_for_path(path, policy));
}

/// V_t for a checkpoint t of the field.
inline double self_intersection(const LocalTimeField& field, double t) {
  return field.V[field.require_index(t)];
}

/// Sum_i L_t(x_i) dx; equals t up to rounding.
inline double occupation_mass(const LocalTimeField& field, std::size_t j) {
  detail::CompensatedSum m;
  for (double l : field.row(j)) m.add(l);
  return m.value() * field.grid.dx();
}

// ---------------------------------------------------------------------------
// Occupation density formula

struct ConstantFn {
  double value = 1.0;
};
/// Indicator of the half-open interval [a, b).
struct IndicatorFn {
  double a = 0.0;
  double b = 1.0;
};
/// exp(-((x - center)/width)^2)
struct GaussianBumpFn {
  double center = 0.0;
  double width = 1.0;
};
/// cos(frequency x + phase)
struct CosineFn {
  double frequency = 1.0;
  double phase = 0.0;
};
using TestFunction = std::variant<ConstantFn, IndicatorFn, GaussianBumpFn, CosineFn>;

inline double evaluate(const TestFunction& f, double x) {
  return std::visit(
      [x](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, ConstantFn>) return g.value;
        else if constexpr (std::is_same_v<G, IndicatorFn>) return (x >= g.a && x < g.b) ? 1.0 : 0.0;
        else if constexpr (std::is_same_v<G, GaussianBumpFn>) {
          const double z = (x - g.center) / g.width;
          return std::exp(-z * z);
        } else return std::cos(g.frequency * x + g.phase);
      },
      f);
}

/// Exact integral of f along one linear segment of duration dt from a to b.
inline double segment_integral(const TestFunction& f, double a, double b, double dt) {
  const double span = b - a;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  return std::visit(
      [&](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, ConstantFn>) {
          return g.value * dt;
        } else if constexpr (std::is_same_v<G, IndicatorFn>) {
          if (lo == hi) return (lo >= g.a && lo < g.b) ? dt : 0.0;
          const double len = std::max(0.0, std::min(hi, g.b) - std::max(lo, g.a));
          return dt * len / (hi - lo);
        } else {
          auto simpson = [&] {
            return dt * (evaluate(f, a) + 4.0 * evaluate(f, 0.5 * (a + b)) + evaluate(f, b)) / 6.0;
          };
          if constexpr (std::is_same_v<G, GaussianBumpFn>) {
            if (std::abs(span) < 1e-4 * g.width) return simpson();
            const double ea = std::erf((a - g.center) / g.width);
            const double eb = std::erf((b - g.center) / g.width);
            return dt * g.width * std::sqrt(std::numbers::pi) * 0.5 * (eb - ea) / span;
          } else {
            if (std::abs(span * g.frequency) < 1e-4) return simpson();
            return dt * (std::sin(g.frequency * b + g.phase) - std::sin(g.frequency * a + g.phase)) /
                   (g.frequency * span);
          }
        }
      },
      f);
}

/// Relative gap between int_0^t f(Y_s) ds (exact along the piecewise-linear
/// path) and sum_i f(x_i) L_t(x_i) dx (bin centres x_i).
inline double occupation_residual(const PathSample& path, const LocalTimeField& field,
                                  const TestFunction& f, double t, double floor_eps = 1e-12) {
  const std::size_t j = field.require_index(t);
  const auto k = grid_index(t, path.dt);
  if (!k || *k > path.steps()) throw ParameterError("occupation_residual: t is not on the path grid");
  detail::CompensatedSum time_side, space_side;
  for (std::size_t s = 0; s < *k; ++s) time_side.add(segment_integral(f, path.values[s], path.values[s + 1], path.dt));
  const auto row = field.row(j);
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] != 0.0) space_side.add(evaluate(f, field.grid.center(i)) * row[i] * field.grid.dx());
  return std::abs(time_side.value() - space_side.value()) / std::max(std::abs(time_side.value()), floor_eps);
}

inline double occupation_residual(const PathSample& path, const TestFunction& f, double t,
                                  const DxPolicy& policy = {}) {
  const double ts[] = {t};
  return occupation_residual(path, compute_local_time(truncated_path(path, t), ts, policy), f, t);
}

// ---------------------------------------------------------------------------
// Pathwise inequalities

/// Relative allowance for binning error in the pathwise inequality checks.
inline constexpr double kDiscretizationTolerance = 0.05;

/// 1 / (2 max_{s<=t} |Y(s)|) <= V_t (1 + tol).
inline bool comparison_check(const PathSample& path, const LocalTimeField& field, double t,
                             double tol = kDiscretizationTolerance) {
  const double v = self_intersection(field, t);
  const auto k = grid_index(t, path.dt);
  if (!k || *k > path.steps()) throw ParameterError("comparison_check: t is not on the path grid");
  const double m = max_abs(std::span<const double>(path.values.data(), *k + 1));
  if (m == 0.0) return true;
  return 1.0 / (2.0 * m) <= v * (1.0 + tol);
}

struct SuperadditivityTerms {
  double whole = 0.0;    // V_{s+t}
  double first = 0.0;    // V_s
  double shifted = 0.0;  // V_t of u -> Y(u + s) - Y(s)
};

/// All three self-intersection times share one bin width. The shifted path is
/// binned on the whole path's grid translated by -Y(s), so its local time is
/// evaluated at x - Y(s) on the same cells.
inline SuperadditivityTerms superadditivity_terms(const PathSample& path, double s, double t,
                                                  const DxPolicy& policy = {}) {
  if (!(s > 0.0) || !(t > 0.0)) throw ParameterError("superadditivity: s and t must be positive");
  const PathSample whole = truncated_path(path, s + t);
  const GridSpec grid = grid_for_path(whole, policy);
  const double cps[] = {s, s + t};
  const auto field = compute_local_time(whole, cps, grid);
  const PathSample tail = shifted_path(whole, s);
  const double ys = whole.values[*grid_index(s, whole.dt)];
  const GridSpec moved(grid.x_min() - ys, grid.x_max() - ys, grid.dx());
  const double ct[] = {t};
  const auto tail_field = compute_local_time(tail, ct, moved);
  return {field.V[1], field.V[0], tail_field.V[0]};
}

/// V_{s+t} >= V_s + V_t^{(s)} up to the relative tolerance.
inline bool superadditivity_check(const PathSample& path, double s, double t, const DxPolicy& policy = {},
                                  double tol = kDiscretizationTolerance) {
  const auto terms = superadditivity_terms(path, s, t, policy);
  return terms.whole * (1.0 + tol) >= terms.first + terms.shifted;
}

}  // namespace brownscene
