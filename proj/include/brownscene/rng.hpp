#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>

namespace brownscene {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Disjoint hash domains for the independent random inputs of one replica.
enum class SeedDomain : std::uint64_t {
  kPath = 0x50415448ULL,     // driving process Y
  kScenery = 0x5343454eULL,  // white-noise scenery W
  kAuxiliary = 0x41555821ULL,
};

/// Seed of replica `index` in `domain` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, SeedDomain domain,
                                    std::uint64_t index) noexcept {
  std::uint64_t h = mix64(master ^ mix64(static_cast<std::uint64_t>(domain)));
  return mix64(h ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Sub-stream of an already derived seed (e.g. inner/outer Brownian motions of one path).
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t k) noexcept {
  return mix64(seed ^ mix64(~k));
}

/// xoshiro256++ (Blackman & Vigna); state seeded from SplitMix64.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

namespace detail {

struct ZigguratTables {
  static constexpr double kR = 3.442619855899;
  static constexpr double kV = 9.91256303526217e-3;
  double x[129];
  double ratio[128];

  ZigguratTables() noexcept {
    const double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[128] = 0.0;
    for (int i = 2; i < 128; ++i)
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
    for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

inline const ZigguratTables& ziggurat_tables() noexcept {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Variate source used by every sampler. The transforms are written out here
/// (rather than using <random> distributions) so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : engine_(seed) {}

  std::uint64_t bits() noexcept { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (128-layer ziggurat, Doornik's formulation).
  double normal() noexcept {
    const auto& zt = detail::ziggurat_tables();
    for (;;) {
      const std::uint64_t b = engine_();
      const std::size_t i = b & 0x7f;
      const double u = 2.0 * ((static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53) - 1.0;
      if (std::abs(u) < zt.ratio[i]) return u * zt.x[i];
      if (i == 0) return tail(u < 0.0);
      const double x = u * zt.x[i];
      const double f0 = std::exp(-0.5 * (zt.x[i] * zt.x[i] - x * x));
      const double f1 = std::exp(-0.5 * (zt.x[i + 1] * zt.x[i + 1] - x * x));
      if (f1 + uniform() * (f0 - f1) < 1.0) return x;
    }
  }

  /// Exponential with unit mean.
  double exponential() noexcept { return -std::log(uniform()); }

 private:
  double tail(bool negative) noexcept {
    const double r = detail::ZigguratTables::kR;
    double x, y;
    do {
      x = std::log(uniform()) / r;
      y = std::log(uniform());
    } while (-2.0 * y < x * x);
    return negative ? x - r : r - x;
  }

  Xoshiro256pp engine_;
};

}  // namespace brownscene
