#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "brownscene/estimators.hpp"
#include "brownscene/rng.hpp"

using namespace brownscene;

namespace {

std::vector<double> dyadic(int lo, int hi) {
  std::vector<double> t;
  for (int k = lo; k <= hi; ++k) t.push_back(std::ldexp(1.0, k));
  return t;
}

}  // namespace

TEST(PersistenceFit, RecoversSyntheticPowerLaw) {
  const auto T = dyadic(4, 12);
  const std::size_t n = 1000000;
  std::vector<double> alive;
  for (double t : T) alive.push_back(n * 0.9 * std::pow(t, -0.3));
  auto e = persistence_from_counts(ProcessSpec::brownian(), 1.0, T, alive, n);
  EXPECT_TRUE(e.flags.empty());
  const auto fit = fit_exponent(e, {0.0, 1e9}, {FitWeighting::kUniform, 0.0});
  EXPECT_NEAR(fit.slope, -0.3, 1e-12);
  EXPECT_EQ(fit.points, T.size());
  const auto wfit = fit_exponent(e, {0.0, 1e9});
  EXPECT_NEAR(wfit.slope, -0.3, 1e-12);
  EXPECT_GT(wfit.se, 0.0);
  attach_default_fit(e, 50.0);
  ASSERT_TRUE(e.fitted_slope.has_value());
  EXPECT_NEAR(*e.fitted_slope, -0.3, 1e-12);
  EXPECT_DOUBLE_EQ(e.fit_window.t_lo, 40.96);
  EXPECT_EQ(e.fit_points, 7u);  // 2^6 .. 2^12
}

// Oracle (tests/oracles/regression_oracles.py): slope -0.167391401999 for T^-1/4 (ln T)^1/2.
TEST(PersistenceFit, LogCorrectionBiasesSlope) {
  const auto T = dyadic(6, 12);
  const std::size_t n = 1000000;
  std::vector<double> alive;
  for (double t : T) alive.push_back(n * 0.3 * std::pow(t, -0.25) * std::sqrt(std::log(t)));
  const auto e = persistence_from_counts(ProcessSpec::brownian(), 1.0, T, alive, n);
  EXPECT_NEAR(fit_exponent(e, {0.0, 1e9}, {FitWeighting::kUniform, 0.0}).slope, -0.167391401999, 1e-9);
}

TEST(PersistenceFit, DegenerateCountsAreFlaggedAndSkipped) {
  const std::vector<double> T{1, 2, 4, 8, 16};
  const std::vector<double> alive{100, 60, 40, 20, 0};
  auto e = persistence_from_counts(ProcessSpec::brownian(), 1.0, T, alive, 100);
  ASSERT_EQ(e.flags.size(), 2u);
  EXPECT_NE(e.flags[0].find("every replica survives"), std::string::npos);
  EXPECT_NE(e.flags[1].find("no replica survives"), std::string::npos);
  EXPECT_EQ(fit_exponent(e, {0, 100}).points, 3u);
  EXPECT_THROW(fit_exponent(e, {0, 100}, {FitWeighting::kInverseVariance, 30.0}), EstimationError);
  attach_default_fit(e, 30.0);
  EXPECT_FALSE(e.fitted_slope.has_value());
  EXPECT_NE(e.flags.back().find("slope omitted"), std::string::npos);
  EXPECT_THROW(persistence_from_counts(ProcessSpec::brownian(), 1.0, T, alive, 0), ParameterError);
  EXPECT_THROW(persistence_from_counts(ProcessSpec::brownian(), 1.0, {1, 2}, alive, 100), ParameterError);
}

TEST(PersistenceFit, ConfidenceBandsContainEstimate) {
  const std::vector<double> T{1, 2, 4};
  const std::vector<double> alive{80, 50, 10};
  const auto e = persistence_from_counts(ProcessSpec::brownian(), 1.0, T, alive, 100);
  for (std::size_t k = 0; k < T.size(); ++k) {
    EXPECT_LE(e.ci_lo[k], e.F_hat[k]);
    EXPECT_GE(e.ci_hi[k], e.F_hat[k]);
  }
}

TEST(Persistence, SmallCampaignIsMonotoneAndDeterministic) {
  PersistenceOptions opt;
  opt.sim.dt = 1.0 / 16.0;
  const std::vector<double> T{1, 2, 4, 8};
  const auto a = estimate_persistence(ProcessSpec::brownian(), 1.0, T, 400, 3, opt);
  opt.sim.workers = 3;
  const auto b = estimate_persistence(ProcessSpec::brownian(), 1.0, T, 400, 3, opt);
  EXPECT_EQ(a.F_hat, b.F_hat);
  EXPECT_EQ(b.workers, 3u);
  for (std::size_t k = 0; k < T.size(); ++k) {
    if (k > 0) {
      EXPECT_LE(a.F_hat[k], a.F_hat[k - 1]);
    }
    EXPECT_GE(a.F_hat_coarse[k], a.F_hat[k]);  // coarser supremum is smaller
  }
  EXPECT_GT(a.F_hat[0], 0.0);
  EXPECT_LT(a.F_hat[3], 1.0);
  EXPECT_GE(a.sup_discretization_gap(), 0.0);
}

TEST(Persistence, InputValidation) {
  PersistenceOptions opt;
  opt.sim.dt = 1.0 / 16.0;
  EXPECT_THROW(estimate_persistence(ProcessSpec::brownian(), 1.0, {1, 2}, 50, 1, opt), ParameterError);
  EXPECT_THROW(estimate_persistence(ProcessSpec::brownian(), 1.0, {2, 1}, 200, 1, opt), ParameterError);
  EXPECT_THROW(estimate_persistence(ProcessSpec::brownian(), 1.0, {1.01}, 200, 1, opt), ParameterError);
  EXPECT_THROW(estimate_persistence(ProcessSpec::stable_levy(0.9), 1.0, {1}, 200, 1, opt), ParameterError);
}

TEST(Molchan, LogExpIntegralsAreStable) {
  const std::vector<double> flat(9, 2.0);
  const std::size_t steps[] = {4, 8};
  const auto l = log_exp_integrals(flat, 0.25, steps);
  EXPECT_NEAR(l[0], std::log(1.0) + 2.0, 1e-14);
  EXPECT_NEAR(l[1], std::log(2.0) + 2.0, 1e-14);

  std::vector<double> d{0.0, 1.0, -0.5, 3.0, 2.0};
  const std::size_t all[] = {4};
  double trap = 0.5 * (std::exp(d[0]) + std::exp(d[4]));
  for (int k = 1; k < 4; ++k) trap += std::exp(d[k]);
  EXPECT_NEAR(log_exp_integrals(d, 0.1, all)[0], std::log(0.1 * trap), 1e-13);

  std::vector<double> big{0.0, 900.0, 1000.0};
  const std::size_t two[] = {2};
  EXPECT_TRUE(std::isfinite(log_exp_integrals(big, 1.0, two)[0]));
  EXPECT_NEAR(log_exp_integrals(big, 1.0, two)[0], 1000.0 + std::log(0.5), 1e-9);
  const std::size_t zero[] = {0};
  EXPECT_THROW(log_exp_integrals(big, 1.0, zero), ParameterError);
  const std::size_t far[] = {5};
  EXPECT_THROW(log_exp_integrals(big, 1.0, far), ParameterError);
}

TEST(Molchan, SampleSummaries) {
  const std::vector<double> T{4, 16};
  std::vector<std::vector<double>> rec{{0.5, 0.5, 0.5, 0.0}, {0.25, 0.25, 0.25, 0.25}};
  const std::vector<double> maxima{0.5, 0.7};
  const auto m = molchan_from_samples(0.5, T, rec, maxima);
  EXPECT_DOUBLE_EQ(m.I_hat[0], 0.375);
  EXPECT_EQ(m.flagged[0], 1u);
  EXPECT_EQ(m.flagged[1], 0u);
  EXPECT_NEAR(m.normalized[1], 0.25 * 2.0 / 0.75, 1e-14);
  EXPECT_DOUBLE_EQ(m.normalized_se[1], 0.0);
  EXPECT_DOUBLE_EQ(m.max_delta_01, 0.6);
  EXPECT_EQ(m.n_replicas_01, 2u);
  EXPECT_NEAR(molchan_relative_gap(m, 1), (2.0 / 3.0) / 0.6 - 1.0, 1e-14);
}

TEST(Molchan, SmallCampaignIsDeterministic) {
  MolchanOptions opt;
  opt.sim.dt = 1.0 / 16.0;
  opt.dt_01 = 1.0 / 256.0;
  opt.n_replicas_01 = 200;
  const auto a = molchan_functional(ProcessSpec::brownian(), {4, 16}, 200, 5, opt);
  opt.sim.workers = 2;
  const auto b = molchan_functional(ProcessSpec::brownian(), {4, 16}, 200, 5, opt);
  EXPECT_EQ(a.I_hat, b.I_hat);
  EXPECT_EQ(a.max_delta_01, b.max_delta_01);
  EXPECT_GT(a.I_hat[0], a.I_hat[1]);
  EXPECT_GT(a.max_delta_01, 0.0);
  EXPECT_TRUE(molchan_stable(a, 0, 0));
}

TEST(MaximalInequality, SyntheticSamples) {
  const std::vector<double> maxima{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const std::vector<double> ends{1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  const double x[] = {0.5};
  const auto ok = maximal_inequality_from_samples(ProcessSpec::brownian(), 1.0, maxima, ends, x);
  EXPECT_TRUE(ok.pass);
  EXPECT_DOUBLE_EQ(ok.rows[0].p_max, 0.4);
  EXPECT_DOUBLE_EQ(ok.rows[0].p_end, 0.2);

  std::vector<double> m2(100000, 0.0), e2(100000, 0.0);
  for (int i = 0; i < 50000; ++i) m2[i] = 1.0;
  for (int i = 0; i < 10000; ++i) e2[i] = 1.0;
  EXPECT_FALSE(maximal_inequality_from_samples(ProcessSpec::brownian(), 1.0, m2, e2, x).pass);
}

TEST(MaximalInequality, HoldsForBrownianCampaign) {
  SimulationOptions sim;
  sim.dt = 1.0 / 64.0;
  const auto r = maximal_inequality_check(ProcessSpec::brownian(), 1.0, {0.5, 1.0}, 2000, 6, sim);
  EXPECT_TRUE(r.pass);
  for (const auto& row : r.rows) EXPECT_GE(row.p_max, row.p_end);
  EXPECT_THROW(maximal_inequality_check(ProcessSpec::brownian(), 1.0, {-1.0}, 10, 6, sim), ParameterError);
}

TEST(TailEnvelope, ExponentialSample) {
  Rng rng(7);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.exponential();
  const auto r = tail_envelope("exp", x, 1.0, TailSide::kRight);
  EXPECT_TRUE(r.admissible);
  EXPECT_GE(r.points, kMinTailPoints);
  EXPECT_NEAR(r.envelope.decay, 1.0, 0.15);
  EXPECT_NEAR(r.local_exponent, 1.0, 0.35);
  EXPECT_GT(r.x_hi, r.x_lo);
}

TEST(TailEnvelope, GaussianSampleAdmitsQuadraticExponent) {
  Rng rng(11);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  const auto r = tail_envelope("gauss", x, 2.0, TailSide::kRight);
  EXPECT_TRUE(r.admissible);
  EXPECT_GT(r.envelope.decay, 0.3);
  EXPECT_LT(r.envelope.decay, 1.0);
}

TEST(TailEnvelope, LeftTailAndLowPower) {
  Rng rng(8);
  std::vector<double> x(50000);
  for (auto& v : x) v = 1.0 / rng.exponential();  // P[X <= x] = exp(-1/x)
  const auto r = tail_envelope("inv", x, 1.0, TailSide::kLeft);
  EXPECT_TRUE(r.admissible);
  EXPECT_NEAR(r.envelope.decay, 1.0, 0.15);
  x.resize(90);
  const auto small = tail_envelope("inv", x, 1.0, TailSide::kLeft);
  EXPECT_TRUE(small.low_power);
  EXPECT_FALSE(small.admissible);
  EXPECT_EQ(tail_envelope("none", {}, 1.0, TailSide::kRight).points, 0u);
}

TEST(Tails, ExponentsPerFamily) {
  EXPECT_DOUBLE_EQ(delta1_tail_exponent(ProcessSpec::brownian()), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(delta1_tail_exponent(ProcessSpec::fractional(0.5)), 4.0 / 3.0);
  EXPECT_NEAR(delta1_tail_exponent(ProcessSpec::iterated()), 8.0 / 7.0, 1e-15);
}

TEST(Tails, SmallBrownianCampaign) {
  SimulationOptions sim;
  sim.dt = 1.0 / 64.0;
  const auto r = tail_check(ProcessSpec::brownian(), 5000, 9, sim);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.n_replicas, 5000u);
  EXPECT_EQ(r.v1_lower.side, TailSide::kLeft);
}

TEST(Slepian, SmallBrownianCheckPasses) {
  SimulationOptions sim;
  sim.dt = 1.0 / 64.0;
  const auto r = slepian_check(ProcessSpec::brownian(), 0.0, 0.5, 1.0, 1.0, 1.0, 4, 400, 10, sim);
  EXPECT_EQ(r.paths.size(), 4u);
  EXPECT_TRUE(r.pass());
  for (const auto& p : r.paths) {
    EXPECT_LE(p.p_joint, std::min(p.p_first, p.p_second));
    EXPECT_GE(p.p_value, 0.0);
  }
  EXPECT_THROW(slepian_check(ProcessSpec::brownian(), 0.3, 0.2, 1.0, 1, 1, 1, 10, 1, sim), ParameterError);
  EXPECT_THROW(slepian_check(ProcessSpec::brownian(), 0.01, 0.5, 1.0, 1, 1, 1, 10, 1, sim), ParameterError);
}
