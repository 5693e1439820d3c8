#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "brownscene/rng.hpp"
#include "brownscene/stats.hpp"

using namespace brownscene;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.bits(), b.bits());
  Rng c(42), d(43);
  EXPECT_NE(c.bits(), d.bits());
}

TEST(Rng, DerivedSeedsAreDistinctAcrossDomainsAndIndices) {
  std::set<std::uint64_t> seen;
  for (auto dom : {SeedDomain::kPath, SeedDomain::kScenery, SeedDomain::kAuxiliary})
    for (std::uint64_t r = 0; r < 2000; ++r) seen.insert(derive_seed(7, dom, r));
  EXPECT_EQ(seen.size(), 6000u);
  EXPECT_NE(derive_seed(7, SeedDomain::kPath, 0), derive_seed(8, SeedDomain::kPath, 0));
  EXPECT_NE(substream(5, 1), substream(5, 2));
}

TEST(Rng, UniformIsInsideOpenInterval) {
  Rng rng(1);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, NormalMomentsAndTail) {
  Rng rng(2);
  const int n = 1000000;
  double s1 = 0, s2 = 0, s4 = 0;
  int beyond = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
    beyond += std::abs(z) > detail::ZigguratTables::kR;
  }
  EXPECT_NEAR(s1 / n, 0.0, 5e-3);
  EXPECT_NEAR(s2 / n, 1.0, 5e-3);
  EXPECT_NEAR(s4 / n, 3.0, 0.03);
  // P[|Z| > 3.4426] = 5.76e-4, exercised by the tail sampler
  const double p = 2.0 * (1.0 - stats::normal_cdf(detail::ZigguratTables::kR));
  EXPECT_NEAR(static_cast<double>(beyond) / n, p, 5.0 * std::sqrt(p / n));
}

TEST(Rng, NormalPassesKsAgainstCdf) {
  Rng rng(3);
  std::vector<double> z(50000);
  for (auto& v : z) v = rng.normal();
  EXPECT_GT(stats::ks_one_sample(z, stats::normal_cdf).p_value, 0.01);
}

TEST(Rng, ExponentialHasUnitMean) {
  Rng rng(4);
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += rng.exponential();
  EXPECT_NEAR(s / n, 1.0, 4.0 / std::sqrt(n));
}
