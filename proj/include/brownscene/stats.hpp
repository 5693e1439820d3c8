#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "brownscene/error.hpp"

namespace brownscene::stats {

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  double variance = 0.0;
  std::size_t n = 0;
};

/// Two-pass mean and unbiased variance.
inline MeanEstimate mean_estimate(std::span<const double> x) {
  MeanEstimate m;
  m.n = x.size();
  if (x.empty()) return m;
  double s = 0.0;
  for (double v : x) s += v;
  m.mean = s / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.variance = ss / static_cast<double>(x.size() - 1);
    m.se = std::sqrt(m.variance / static_cast<double>(x.size()));
  }
  return m;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Sample correlation coefficient.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  const auto ma = mean_estimate(a);
  const auto mb = mean_estimate(b);
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
  c /= static_cast<double>(a.size() - 1);
  return c / std::sqrt(ma.variance * mb.variance);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;  // sup |F1 - F2|
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  bool passes(double level) const noexcept { return p_value >= level; }
};

/// Asymptotic p-value with the Stephens small-sample correction.
inline double ks_p_value(double d, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r{d, ks_p_value(d, na * nb / (na + nb)), a.size(), b.size()};
  return r;
}

/// One-sample test against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw ParameterError("ks_one_sample: empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n), a.size(), 0};
}

// ---------------------------------------------------------------------------
// Binomial proportions

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double half_width() const noexcept { return 0.5 * (hi - lo); }
};

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for a proportion; `successes` may be fractional
/// (synthetic or reweighted counts).
inline Interval wilson_interval(double successes, double n, double z = kZ95) {
  if (!(n > 0.0)) throw ParameterError("wilson_interval: n must be positive");
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(std::max(p * (1.0 - p) / n + z2 / (4.0 * n * n), 0.0)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// ---------------------------------------------------------------------------
// Regression

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares y = intercept + slope x. With inverse-variance
/// weights the slope error is sqrt(1 / Sxx_w); with uniform weights (all 1) it
/// is estimated from the residuals.
inline LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> w, bool weights_are_inverse_variance) {
  if (x.size() != y.size() || x.size() != w.size()) throw ParameterError("weighted_line_fit: size mismatch");
  if (x.size() < 2) throw EstimationError("weighted_line_fit: need at least two points");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw EstimationError("weighted_line_fit: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = x.size();
  if (weights_are_inverse_variance) {
    f.slope_se = std::sqrt(1.0 / sxx);
  } else if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += w[i] * r * r;
    }
    f.slope_se = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  }
  return f;
}

// ---------------------------------------------------------------------------
// One-sided envelopes

struct EnvelopeLine {
  double intercept = 0.0;  // log C
  double decay = 0.0;      // c in y <= log C - c u
  bool valid = false;
};

/// Tightest line y = intercept - decay * u lying on or above every point
/// (u_i, y_i) in the sense of least total gap: the supporting line of the
/// upper convex hull at the mean abscissa. valid iff decay > 0.
inline EnvelopeLine upper_envelope(std::span<const double> u, std::span<const double> y) {
  if (u.size() != y.size()) throw ParameterError("upper_envelope: size mismatch");
  EnvelopeLine e;
  if (u.size() < 2) return e;
  std::vector<std::size_t> order(u.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return u[a] < u[b] || (u[a] == u[b] && y[a] > y[b]);
  });
  // Andrew's monotone chain, upper hull, left to right.
  std::vector<std::size_t> hull;
  for (std::size_t idx : order) {
    if (!hull.empty() && u[hull.back()] == u[idx]) continue;  // keep the highest y per abscissa
    while (hull.size() >= 2) {
      const auto a = hull[hull.size() - 2];
      const auto b = hull.back();
      const double cross = (u[b] - u[a]) * (y[idx] - y[a]) - (y[b] - y[a]) * (u[idx] - u[a]);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(idx);
  }
  if (hull.size() < 2) return e;
  double mu = 0.0;
  for (double v : u) mu += v;
  mu /= static_cast<double>(u.size());
  std::size_t seg = 0;
  while (seg + 2 < hull.size() && u[hull[seg + 1]] < mu) ++seg;
  const auto a = hull[seg];
  const auto b = hull[seg + 1];
  const double slope = (y[b] - y[a]) / (u[b] - u[a]);
  e.decay = -slope;
  e.intercept = y[a] - slope * u[a];
  e.valid = e.decay > 0.0 && std::isfinite(e.intercept);
  return e;
}

}  // namespace brownscene::stats
