#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "brownscene/campaign.hpp"
#include "brownscene/replica.hpp"
#include "brownscene/scenery.hpp"
#include "brownscene/stats.hpp"

using namespace brownscene;

TEST(Scenery, IncrementsHaveVarianceDx) {
  const auto g = GridSpec::centered(50.0, 0.01);
  const auto s = sample_scenery(g, 1);
  ASSERT_EQ(s.dW.size(), g.bins());
  const auto m = stats::mean_estimate(s.dW);
  EXPECT_NEAR(m.mean, 0.0, 4.0 * m.se);
  EXPECT_NEAR(m.variance, 0.01, 0.01 * 4.0 * std::sqrt(2.0 / s.dW.size()));
}

TEST(Scenery, ResampleMatchesFreshDraw) {
  const auto g = GridSpec::centered(2.0, 0.1);
  SceneryField buf = sample_scenery(GridSpec::centered(5.0, 0.5), 3);
  resample_scenery(buf, g, 4);
  const auto fresh = sample_scenery(g, 4);
  EXPECT_EQ(buf.dW, fresh.dW);
  EXPECT_EQ(buf.grid, fresh.grid);
}

TEST(Delta, HandComputed) {
  const PathSample path{ProcessSpec::brownian(), 1.0, {0.0, 1.0}, 0};
  const auto g = GridSpec::centered(1.0, 0.5);
  const double cp[] = {1.0};
  const auto f = compute_local_time(path, cp, g);
  SceneryField s{g, {0, 0, 0, 1.0, 2.0, -4.0, 0}, 0};
  const auto d = build_delta(f, s);
  EXPECT_DOUBLE_EQ(d.delta[0], 0.5 * 1.0 + 1.0 * 2.0 + 0.5 * -4.0);
  EXPECT_DOUBLE_EQ(d.cond_var[0], 0.75);
}

TEST(Delta, StreamingAgreesWithFieldAtCheckpoints) {
  for (const auto& spec : {ProcessSpec::brownian(), ProcessSpec::stable_levy(1.5), ProcessSpec::iterated()}) {
    const auto path = sample_path(spec, 1024, 1.0 / 256.0, 5);
    const auto g = grid_for_path(path);
    const auto s = sample_scenery(g, 6);
    const auto cps = default_checkpoints(4.0, 1.0 / 256.0);
    const auto f = compute_local_time(path, cps, g);
    const auto d = build_delta(f, s);
    const auto full = delta_on_grid(path, s);
    ASSERT_EQ(full.size(), 1025u);
    EXPECT_EQ(full[0], 0.0);
    for (std::size_t j = 0; j < cps.size(); ++j) {
      const auto k = *grid_index(cps[j], 1.0 / 256.0);
      EXPECT_NEAR(full[k], d.delta[j], 1e-10 * (1.0 + std::abs(d.delta[j])));
      if (j > 0) {
        EXPECT_GE(d.running_sup[j], d.running_sup[j - 1]);
      }
      EXPECT_GE(d.running_sup[j], d.delta[j]);
    }
  }
}

TEST(Delta, GridMismatchIsRejected) {
  const auto path = sample_brownian(64, 1.0 / 64.0, 7);
  const double cp[] = {1.0};
  const auto f = compute_local_time(path, cp);
  const auto s = sample_scenery(GridSpec::centered(3.0, 0.3), 8);
  EXPECT_THROW(build_delta(f, s), ParameterError);
}

TEST(Delta, ConditionallyGaussianGivenPath) {
  const auto path = sample_brownian(1024, 1.0 / 1024.0, 9);
  const auto g = grid_for_path(path);
  const double cp[] = {1.0};
  const auto f = compute_local_time(path, cp, g);
  std::vector<double> z;
  for (std::uint64_t k = 0; k < 5000; ++k)
    z.push_back(build_delta(f, sample_scenery(g, derive_seed(10, SeedDomain::kScenery, k))).delta[0] /
                std::sqrt(f.V[0]));
  EXPECT_GT(stats::ks_one_sample(z, stats::normal_cdf).p_value, 0.01);
}

TEST(Delta, ConditionalCovarianceMatchesScenerySampling) {
  const auto path = sample_brownian(1024, 1.0 / 512.0, 11);
  const auto g = grid_for_path(path);
  const double cp[] = {0.5, 2.0};
  const auto f = compute_local_time(path, cp, g);
  const double c = conditional_covariance(f, 0.5, 2.0);
  double acc = 0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto d = build_delta(f, sample_scenery(g, derive_seed(12, SeedDomain::kScenery, k)));
    acc += d.delta[0] * d.delta[1];
  }
  EXPECT_NEAR(acc / n, c, 4.0 * std::sqrt(f.V[0] * f.V[1] * 2.0 / n));
  EXPECT_DOUBLE_EQ(conditional_covariance(f, 2.0, 2.0), f.V[1] * 1.0 + 0.0 * c);
}

TEST(Delta, IncrementCovarianceIsNonnegative) {
  for (const auto& spec : {ProcessSpec::brownian(), ProcessSpec::fractional(0.75), ProcessSpec::iterated()}) {
    for (std::uint64_t r = 0; r < 100; ++r) {
      const auto path = sample_path(spec, 256, 1.0 / 256.0, derive_seed(13, SeedDomain::kPath, r));
      const double cp[] = {0.25, 0.5, 1.0};
      const auto f = compute_local_time(path, cp);
      EXPECT_TRUE(delta_increment_cov_check(f, 0.5, 1.0));
      EXPECT_TRUE(delta_increment_cov_check(f, 0.25, 1.0));
    }
  }
  const auto path = sample_brownian(16, 1.0 / 16.0, 14);
  const double cp[] = {0.5, 1.0};
  EXPECT_THROW(delta_increment_cov_check(compute_local_time(path, cp), 1.0, 0.5), ParameterError);
}

TEST(Delta, UnconditionalVarianceIsMeanSelfIntersection) {
  std::vector<double> d, v;
  const double cp[] = {1.0};
  for (std::uint64_t r = 0; r < 20000; ++r) {
    const auto path = sample_brownian(256, 1.0 / 256.0, derive_seed(15, SeedDomain::kPath, r));
    const auto f = compute_local_time(path, cp);
    d.push_back(build_delta(f, sample_scenery(f.grid, derive_seed(15, SeedDomain::kScenery, r))).delta[0]);
    v.push_back(f.V[0]);
  }
  const auto md = stats::mean_estimate(d);
  const auto mv = stats::mean_estimate(v);
  EXPECT_NEAR(md.mean, 0.0, 4.0 * md.se);
  EXPECT_NEAR(md.variance, mv.mean, 0.05 * mv.mean);
}

TEST(Checkpoints, DefaultsMergeFineAndDyadicTimes) {
  const auto ts = default_checkpoints(8.0, 1.0 / 64.0);
  EXPECT_EQ(ts.front(), 0.0);
  EXPECT_EQ(ts.back(), 8.0);
  for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_LT(ts[i - 1], ts[i]);
  for (double t : {1.0 / 64.0, 0.0625, 0.5, 1.0, 2.0, 4.0}) {
    bool found = false;
    for (double x : ts) found |= x == t;
    EXPECT_TRUE(found) << t;
  }
}

TEST(Campaign, ResultsDoNotDependOnWorkerCount) {
  for (const auto& spec : {ProcessSpec::brownian(), ProcessSpec::fractional(0.75)}) {
    const ReplicaSource src(spec, 4.0, 1.0 / 64.0, 16);
    auto fn = [&](std::size_t r, const PathSample& p) {
      const double cp[] = {4.0};
      const auto f = compute_local_time(p, cp);
      return build_delta(f, replica_scenery(src, r, p, DxPolicy{})).delta[0];
    };
    const auto a = run_campaign<double>(src, 101, 1, fn);
    const auto b = run_campaign<double>(src, 101, 3, fn);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 101u);
    EXPECT_EQ(src.path(57).values, src.block_paths(57 / src.paths_per_block())[57 % src.paths_per_block()].values);
  }
}

TEST(Campaign, PairedFbmReplicasAreDistinct) {
  const ReplicaSource src(ProcessSpec::fractional(0.75), 1.0, 1.0 / 64.0, 17);
  EXPECT_EQ(src.paths_per_block(), 2u);
  EXPECT_EQ(src.blocks(5), 3u);
  EXPECT_NE(src.path(0).values, src.path(1).values);
  EXPECT_NE(src.scenery_seed(0), src.scenery_seed(1));
}

TEST(Campaign, OffGridHorizonIsRejected) {
  EXPECT_THROW(steps_for(1.01, 1.0 / 64.0), ParameterError);
  EXPECT_THROW(steps_for(0.0, 1.0 / 64.0), ParameterError);
  EXPECT_EQ(steps_for(2.0, 1.0 / 64.0), 128u);
}

TEST(Campaign, ExceptionsPropagate) {
  EXPECT_THROW(parallel_for_blocks(10, 3,
                                   [](std::size_t b) {
                                     if (b == 7) throw std::runtime_error("boom");
                                   }),
               std::runtime_error);
  const auto sq = map_replicas<std::size_t>(50, 4, [](std::size_t r) { return r * r; });
  for (std::size_t r = 0; r < 50; ++r) EXPECT_EQ(sq[r], r * r);
}
