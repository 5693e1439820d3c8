#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "brownscene/error.hpp"
#include "brownscene/fft.hpp"
#include "brownscene/rng.hpp"

namespace brownscene {

enum class ProcessFamily { kBrownian, kStableLevy, kFractionalBM, kIteratedBM };

inline std::string_view to_string(ProcessFamily f) noexcept {
  switch (f) {
    case ProcessFamily::kBrownian: return "brownian";
    case ProcessFamily::kStableLevy: return "stable";
    case ProcessFamily::kFractionalBM: return "fbm";
    case ProcessFamily::kIteratedBM: return "ibm";
  }
  return "unknown";
}

inline std::optional<ProcessFamily> parse_family(std::string_view s) noexcept {
  if (s == "brownian") return ProcessFamily::kBrownian;
  if (s == "stable") return ProcessFamily::kStableLevy;
  if (s == "fbm") return ProcessFamily::kFractionalBM;
  if (s == "ibm") return ProcessFamily::kIteratedBM;
  return std::nullopt;
}

/// Driving process Y together with its scaling constants.
///
/// gamma() is the self-similarity index of Y. alpha() and beta() are the tail
/// exponents of the self-intersection local time V_1:
///   P[V_1 >= x] <= C exp(-c x^alpha),  P[V_1 <= x] <= C exp(-c x^-beta).
/// Brownian motion is treated as the stable case delta = 2.
struct ProcessSpec {
  ProcessFamily family = ProcessFamily::kBrownian;
  double delta = 2.0;  // stability index, StableLevy only
  double zeta = 0.0;   // skewness, StableLevy only
  double hurst = 0.5;  // FractionalBM only

  static ProcessSpec brownian() { return {}; }
  static ProcessSpec stable_levy(double delta, double zeta = 0.0) {
    return {ProcessFamily::kStableLevy, delta, zeta, 0.5};
  }
  static ProcessSpec fractional(double hurst) {
    return {ProcessFamily::kFractionalBM, 2.0, 0.0, hurst};
  }
  static ProcessSpec iterated() { return {ProcessFamily::kIteratedBM, 2.0, 0.0, 0.5}; }

  void validate() const {
    switch (family) {
      case ProcessFamily::kStableLevy:
        if (!(delta > 1.0 && delta <= 2.0))
          throw ParameterError("stable index delta must lie in (1, 2], got " + std::to_string(delta));
        if (!(zeta >= -1.0 && zeta <= 1.0))
          throw ParameterError("skewness zeta must lie in [-1, 1], got " + std::to_string(zeta));
        break;
      case ProcessFamily::kFractionalBM:
        if (!(hurst > 0.0 && hurst < 1.0))
          throw ParameterError("Hurst index must lie in (0, 1), got " + std::to_string(hurst));
        break;
      default: break;
    }
  }

  double gamma() const noexcept {
    switch (family) {
      case ProcessFamily::kBrownian: return 0.5;
      case ProcessFamily::kStableLevy: return 1.0 / delta;
      case ProcessFamily::kFractionalBM: return hurst;
      case ProcessFamily::kIteratedBM: return 0.25;
    }
    return 0.5;
  }

  double alpha() const noexcept {
    switch (family) {
      case ProcessFamily::kBrownian: return 2.0;
      case ProcessFamily::kStableLevy: return delta;
      case ProcessFamily::kFractionalBM: return 1.0 / hurst;
      case ProcessFamily::kIteratedBM: return 4.0 / 3.0;
    }
    return 2.0;
  }

  double beta() const noexcept {
    switch (family) {
      case ProcessFamily::kBrownian: return 2.0 / 3.0;
      case ProcessFamily::kStableLevy: return delta / (2.0 * delta - 1.0);
      case ProcessFamily::kFractionalBM: return 2.0;
      case ProcessFamily::kIteratedBM: return 4.0 / 3.0;
    }
    return 2.0 / 3.0;
  }

  /// Self-similarity index of the scenery process, 1 - gamma/2.
  double scenery_index() const noexcept { return 1.0 - gamma() / 2.0; }

  /// Skewed stable laws are accepted but not covered by the persistence results.
  bool experimental() const noexcept {
    return family == ProcessFamily::kStableLevy && zeta != 0.0;
  }

  friend bool operator==(const ProcessSpec&, const ProcessSpec&) = default;
};

/// Discretized trajectory Y(k dt), k = 0..n, with values[0] = 0.
struct PathSample {
  ProcessSpec spec;
  double dt = 1.0;
  std::vector<double> values;
  std::uint64_t seed = 0;

  std::size_t steps() const noexcept { return values.empty() ? 0 : values.size() - 1; }
  double horizon() const noexcept { return static_cast<double>(steps()) * dt; }
};

/// Step index of time t on a grid of spacing dt, if t lies on it.
inline std::optional<std::size_t> grid_index(double t, double dt) noexcept {
  if (!(t >= 0.0) || !(dt > 0.0)) return std::nullopt;
  const double k = std::round(t / dt);
  if (std::abs(k * dt - t) > 1e-9 * std::max(1.0, std::abs(t))) return std::nullopt;
  return static_cast<std::size_t>(k);
}

namespace detail {

inline void check_grid(std::size_t n, double dt) {
  if (n < 1) throw ParameterError("path needs at least one step");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("time step must be positive");
}

// Unit-time strictly stable variate with E exp(iuX) = exp(-|u|^d (1 + i z sgn(u) tan(pi d/2))),
// by Chambers-Mallows-Stuck. Our z is minus the usual skewness parameter.
inline double stable_variate(Rng& rng, double d, double z) {
  const double v = std::numbers::pi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  if (d == 2.0) return 2.0 * std::sin(v) * std::sqrt(w);
  const double b_std = -z;
  const double t = b_std * std::tan(std::numbers::pi * d / 2.0);
  const double shift = std::atan(t) / d;
  const double scale = std::pow(1.0 + t * t, 1.0 / (2.0 * d));
  const double a = d * (v + shift);
  return scale * std::sin(a) / std::pow(std::cos(v), 1.0 / d) *
         std::pow(std::cos(v - a) / w, (1.0 - d) / d);
}

// Autocovariance of unit-step fractional Gaussian noise at lag k.
inline double fgn_autocovariance(double hurst, double k) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(k + 1.0), h2) - 2.0 * std::pow(std::abs(k), h2) +
                std::pow(std::abs(k - 1.0), h2));
}

}  // namespace detail

enum class FbmMethod { kAuto, kCirculant, kCholesky };

/// Exact fractional Gaussian noise sampler for a fixed (H, n).
///
/// Circulant embedding of the noise covariance into size 2m, m = 2^ceil(log2 n);
/// each draw costs one FFT and yields two independent paths (real and imaginary
/// parts). When the embedding has a negative eigenvalue, or when Cholesky is
/// requested, the dense Cholesky factor of the n x n covariance is used
/// instead; that route is limited to n <= kCholeskyLimit.
class FbmSampler {
 public:
  static constexpr std::size_t kCholeskyLimit = 4096;

  FbmSampler(double hurst, std::size_t n, FbmMethod method = FbmMethod::kAuto)
      : hurst_(hurst), n_(n) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw ParameterError("Hurst index must lie in (0, 1)");
    if (n < 1) throw ParameterError("path needs at least one step");
    if (method != FbmMethod::kCholesky) {
      if (build_circulant()) return;
      if (method == FbmMethod::kCirculant || n > kCholeskyLimit) {
        throw GenerationError("circulant embedding is not nonnegative definite (min eigenvalue " +
                              std::to_string(min_eigenvalue_) + ", H=" + std::to_string(hurst) +
                              ", n=" + std::to_string(n) + ") and n exceeds the Cholesky limit");
      }
    }
    if (n > kCholeskyLimit)
      throw GenerationError("Cholesky fallback limited to n <= " + std::to_string(kCholeskyLimit));
    build_cholesky();
  }

  bool uses_circulant() const noexcept { return fft_ != nullptr; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  std::size_t steps() const noexcept { return n_; }

  /// Two independent unit-step noise sequences of length n.
  std::pair<std::vector<double>, std::vector<double>> noise_pair(Rng& rng) const {
    if (!uses_circulant()) {
      auto a = cholesky_noise(rng);
      auto b = cholesky_noise(rng);
      return {std::move(a), std::move(b)};
    }
    const std::size_t big = fft_->size();
    std::vector<std::complex<double>> buf(big);
    for (std::size_t k = 0; k < big; ++k) {
      const double re = rng.normal();
      const double im = rng.normal();
      buf[k] = {sqrt_eig_[k] * re, sqrt_eig_[k] * im};
    }
    fft_->transform(buf);
    std::vector<double> a(n_), b(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      a[j] = buf[j].real();
      b[j] = buf[j].imag();
    }
    return {std::move(a), std::move(b)};
  }

  std::vector<double> noise(Rng& rng) const {
    if (!uses_circulant()) return cholesky_noise(rng);
    return noise_pair(rng).first;
  }

 private:
  bool build_circulant() {
    std::size_t m = 1;
    while (m < n_) m <<= 1;
    const std::size_t big = 2 * m;
    std::vector<std::complex<double>> row(big);
    for (std::size_t k = 0; k <= m; ++k) row[k] = detail::fgn_autocovariance(hurst_, double(k));
    for (std::size_t k = m + 1; k < big; ++k) row[k] = row[big - k];
    auto fft = std::make_unique<ComplexFft>(big);
    fft->transform(row);
    sqrt_eig_.resize(big);
    min_eigenvalue_ = row[0].real();
    const double tol = 1e-10 * std::abs(row[0].real());
    for (std::size_t k = 0; k < big; ++k) {
      const double lam = row[k].real();
      min_eigenvalue_ = std::min(min_eigenvalue_, lam);
      if (lam < -tol) {
        sqrt_eig_.clear();
        return false;
      }
      sqrt_eig_[k] = std::sqrt(std::max(lam, 0.0) / static_cast<double>(big));
    }
    fft_ = std::move(fft);
    return true;
  }

  void build_cholesky() {
    // Packed lower triangle, row i holds entries 0..i.
    chol_.assign(n_ * (n_ + 1) / 2, 0.0);
    std::vector<double> acov(n_);
    for (std::size_t k = 0; k < n_; ++k) acov[k] = detail::fgn_autocovariance(hurst_, double(k));
    auto at = [this](std::size_t i, std::size_t j) -> double& { return chol_[i * (i + 1) / 2 + j]; };
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = acov[i - j];
        const double* ri = &chol_[i * (i + 1) / 2];
        const double* rj = &chol_[j * (j + 1) / 2];
        for (std::size_t k = 0; k < j; ++k) s -= ri[k] * rj[k];
        if (i == j) {
          if (!(s > 0.0)) throw GenerationError("fGn covariance is not positive definite");
          at(i, i) = std::sqrt(s);
        } else {
          at(i, j) = s / at(j, j);
        }
      }
    }
  }

  std::vector<double> cholesky_noise(Rng& rng) const {
    std::vector<double> z(n_);
    for (auto& v : z) v = rng.normal();
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* ri = &chol_[i * (i + 1) / 2];
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += ri[k] * z[k];
      out[i] = s;
    }
    return out;
  }

  double hurst_;
  std::size_t n_;
  double min_eigenvalue_ = 0.0;
  std::unique_ptr<ComplexFft> fft_;
  std::vector<double> sqrt_eig_;
  std::vector<double> chol_;
};

/// Sampler for one (spec, n, dt) configuration. draw() is a pure function of
/// the seed and may be called concurrently.
class PathGenerator {
 public:
  PathGenerator(ProcessSpec spec, std::size_t n, double dt, FbmMethod fbm = FbmMethod::kAuto)
      : spec_(spec), n_(n), dt_(dt) {
    spec_.validate();
    detail::check_grid(n, dt);
    if (spec_.family == ProcessFamily::kFractionalBM)
      fbm_ = std::make_shared<const FbmSampler>(spec_.hurst, n, fbm);
  }

  const ProcessSpec& spec() const noexcept { return spec_; }
  std::size_t steps() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }

  /// Number of independent paths one underlying draw produces (2 for circulant fBm).
  std::size_t paths_per_draw() const noexcept {
    return fbm_ && fbm_->uses_circulant() ? 2 : 1;
  }

  PathSample draw(std::uint64_t seed) const {
    switch (spec_.family) {
      case ProcessFamily::kBrownian: return brownian(seed);
      case ProcessFamily::kStableLevy: return stable(seed);
      case ProcessFamily::kFractionalBM: return fbm_pair(seed).first;
      case ProcessFamily::kIteratedBM: return iterated(seed);
    }
    return brownian(seed);
  }

  /// Two independent paths from one seed. For circulant fBm this shares one FFT;
  /// the first element always equals draw(seed).
  std::pair<PathSample, PathSample> draw_pair(std::uint64_t seed) const {
    if (spec_.family == ProcessFamily::kFractionalBM) return fbm_pair(seed);
    return {draw(seed), draw(substream(seed, 0x7061697264ULL))};
  }

 private:
  PathSample make(std::uint64_t seed) const {
    PathSample p{spec_, dt_, std::vector<double>(n_ + 1, 0.0), seed};
    return p;
  }

  PathSample brownian(std::uint64_t seed) const {
    PathSample p = make(seed);
    Rng rng(seed);
    const double sd = std::sqrt(dt_);
    double y = 0.0;
    for (std::size_t k = 1; k <= n_; ++k) {
      y += sd * rng.normal();
      p.values[k] = y;
    }
    return p;
  }

  PathSample stable(std::uint64_t seed) const {
    PathSample p = make(seed);
    Rng rng(seed);
    const double scale = std::pow(dt_, 1.0 / spec_.delta);
    double y = 0.0;
    for (std::size_t k = 1; k <= n_; ++k) {
      y += scale * detail::stable_variate(rng, spec_.delta, spec_.zeta);
      p.values[k] = y;
    }
    return p;
  }

  std::pair<PathSample, PathSample> fbm_pair(std::uint64_t seed) const {
    Rng rng(seed);
    const double scale = std::pow(dt_, spec_.hurst);
    auto to_path = [&](const std::vector<double>& noise, std::uint64_t s) {
      PathSample p = make(s);
      double y = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        y += scale * noise[k];
        p.values[k + 1] = y;
      }
      return p;
    };
    auto [a, b] = fbm_->noise_pair(rng);
    return {to_path(a, seed), to_path(b, seed)};
  }

  // Y(t) = B(B~(t)): the inner B~ is a Brownian path on the time grid; the outer
  // two-sided B lives on a spatial grid of spacing dt covering [-M, M] with
  // M = 1.05 max|B~|, and is linearly interpolated at B~(k dt).
  PathSample iterated(std::uint64_t seed) const {
    PathSample p = make(seed);
    Rng inner_rng(substream(seed, 1));
    Rng outer_rng(substream(seed, 2));
    const double sd = std::sqrt(dt_);
    std::vector<double> inner(n_ + 1, 0.0);
    double reach = 0.0;
    for (std::size_t k = 1; k <= n_; ++k) {
      inner[k] = inner[k - 1] + sd * inner_rng.normal();
      reach = std::max(reach, std::abs(inner[k]));
    }
    const double dx = dt_;
    const double m = std::max(1.05 * reach, dx);
    const std::size_t half = static_cast<std::size_t>(std::ceil(m / dx)) + 1;
    // outer[i] = B((i - half) dx)
    std::vector<double> outer(2 * half + 1, 0.0);
    const double osd = std::sqrt(dx);
    for (std::size_t i = half + 1; i <= 2 * half; ++i) outer[i] = outer[i - 1] + osd * outer_rng.normal();
    for (std::size_t i = half; i-- > 0;) outer[i] = outer[i + 1] + osd * outer_rng.normal();
    for (std::size_t k = 1; k <= n_; ++k) {
      const double u = inner[k] / dx + static_cast<double>(half);
      const auto i = std::min(static_cast<std::size_t>(std::floor(u)), 2 * half - 1);
      const double w = u - static_cast<double>(i);
      p.values[k] = (1.0 - w) * outer[i] + w * outer[i + 1];
    }
    return p;
  }

  ProcessSpec spec_;
  std::size_t n_;
  double dt_;
  std::shared_ptr<const FbmSampler> fbm_;
};

inline PathSample sample_brownian(std::size_t n, double dt, std::uint64_t seed) {
  return PathGenerator(ProcessSpec::brownian(), n, dt).draw(seed);
}

inline PathSample sample_stable_levy(const ProcessSpec& spec, std::size_t n, double dt,
                                     std::uint64_t seed) {
  if (spec.family != ProcessFamily::kStableLevy) throw ParameterError("spec is not a stable Levy process");
  return PathGenerator(spec, n, dt).draw(seed);
}

inline PathSample sample_fbm(const ProcessSpec& spec, std::size_t n, double dt, std::uint64_t seed,
                             FbmMethod method = FbmMethod::kAuto) {
  if (spec.family != ProcessFamily::kFractionalBM) throw ParameterError("spec is not a fractional BM");
  return PathGenerator(spec, n, dt, method).draw(seed);
}

inline PathSample sample_ibm(std::size_t n, double dt, std::uint64_t seed) {
  return PathGenerator(ProcessSpec::iterated(), n, dt).draw(seed);
}

inline PathSample sample_path(const ProcessSpec& spec, std::size_t n, double dt, std::uint64_t seed) {
  return PathGenerator(spec, n, dt).draw(seed);
}

/// t -> Y(T - t) - Y(T) for t in [0, T]; T must be a grid time within the path.
inline PathSample reverse_path(const PathSample& path, double horizon) {
  const auto k = grid_index(horizon, path.dt);
  if (!k || *k > path.steps() || *k == 0)
    throw ParameterError("reverse_path: T=" + std::to_string(horizon) + " is not a grid time of the path");
  PathSample out{path.spec, path.dt, std::vector<double>(*k + 1), path.seed};
  const double end = path.values[*k];
  for (std::size_t i = 0; i <= *k; ++i) out.values[i] = path.values[*k - i] - end;
  return out;
}

/// u -> Y(u + s) - Y(s) for u in [0, T - s].
inline PathSample shifted_path(const PathSample& path, double s) {
  const auto k = grid_index(s, path.dt);
  if (!k || *k >= path.steps()) throw ParameterError("shifted_path: s is not an interior grid time");
  PathSample out{path.spec, path.dt, std::vector<double>(path.steps() - *k + 1), path.seed};
  const double base = path.values[*k];
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = path.values[*k + i] - base;
  return out;
}

/// Prefix of a path up to grid time t.
inline PathSample truncated_path(const PathSample& path, double t) {
  const auto k = grid_index(t, path.dt);
  if (!k || *k > path.steps() || *k == 0) throw ParameterError("truncated_path: t is not a grid time");
  PathSample out{path.spec, path.dt,
                 std::vector<double>(path.values.begin(), path.values.begin() + *k + 1), path.seed};
  return out;
}

}  // namespace brownscene
