#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/simlab.hpp"

using namespace evlab;
using namespace evlab::simlab;

namespace {

SimConfig config(std::size_t reps, std::size_t horizon, std::size_t threads = 1, std::uint64_t seed = 7) {
  SimConfig c;
  c.reps = reps;
  c.horizon = horizon;
  c.threads = threads;
  c.seed = seed;
  return c;
}

Constructor lr_constructor(double p0, double p1) {
  return Constructor{"lr", [p0, p1](std::span<const double> x) {
                       return families::lr_eprocess(families::bernoulli(p0), families::bernoulli(p1), x);
                     }};
}

}  // namespace

TEST(SimConfig, Validation) {
  EXPECT_THROW(config(0, 10).validate(), ConfigError);
  EXPECT_THROW(config(10, 0).validate(), ConfigError);
  EXPECT_THROW(config(10, 10, 0).validate(), ConfigError);
  auto c = config(10, 10);
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Summarize, MeanAndStandardError) {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  auto r = summarize("x", v, config(4, 1));
  EXPECT_DOUBLE_EQ(r.estimate, 2.5);
  EXPECT_NEAR(r.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(r.reps, 4u);
  EXPECT_TRUE(r.within(2.0, 1.0));
  EXPECT_FALSE(r.exceeds(2.0, 1.0));
}

TEST(RunReplications, ResultsIndependentOfThreadCount) {
  const std::function<double(std::size_t, Rng&)> body = [](std::size_t i, Rng& rng) {
    return rng.uniform() + static_cast<double>(i);
  };
  auto a = run_replications(config(1000, 1, 1), body);
  auto b = run_replications(config(1000, 1, 8), body);
  EXPECT_EQ(a, b);
}

TEST(RunReplications, SmallestIndexErrorKeepsItsClass) {
  const std::function<double(std::size_t, Rng&)> body = [](std::size_t i, Rng&) -> double {
    if (i == 300) throw NumericalError("boom");
    if (i == 700) throw DataError("later");
    return 0.0;
  };
  for (std::size_t threads : {1u, 4u}) {
    try {
      run_replications(config(1000, 1, threads), body);
      FAIL() << "expected a throw";
    } catch (const NumericalError& e) {
      EXPECT_NE(std::string(e.what()).find("replication 300"), std::string::npos);
    }
  }
}

TEST(McStoppedMean, ConstantConstructorIsExactlyOne) {
  auto r = mc_stopped_mean(bernoulli_sampler(0.5), constant_constructor(), StoppingRule::fixed_horizon(10),
                           config(200, 10));
  EXPECT_EQ(r.estimate, 1.0);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_THROW(mc_stopped_mean(bernoulli_sampler(0.5), constant_constructor(),
                               StoppingRule::fixed_horizon(11), config(200, 10)),
               ConfigError);
}

TEST(McStoppedMean, LikelihoodRatioValidAndDeterministic) {
  const auto rule = StoppingRule::first_crossing(20.0, 200);
  auto a = mc_stopped_mean(bernoulli_sampler(0.5), lr_constructor(0.5, 0.7), rule, config(4000, 200, 1));
  auto b = mc_stopped_mean(bernoulli_sampler(0.5), lr_constructor(0.5, 0.7), rule, config(4000, 200, 3));
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_TRUE(a.within(1.0));
  EXPECT_EQ(a.metadata.at("rule"), rule.describe());
}

TEST(VilleCoverage, BelowAlphaForLikelihoodRatio) {
  auto r = ville_coverage(bernoulli_sampler(0.5), lr_constructor(0.5, 0.7), config(4000, 300));
  EXPECT_TRUE(r.within(0.05));
  EXPECT_GT(r.estimate, 0.0);
}

TEST(GrowthRate, ApproachesKullbackLeibler) {
  auto r = growth_rate(bernoulli_sampler(0.7), lr_constructor(0.5, 0.7), config(2000, 200));
  const double kl = 0.7 * std::log(0.7 / 0.5) + 0.3 * std::log(0.3 / 0.5);
  EXPECT_NEAR(r.estimate, kl, 4.0 * r.std_error);
  EXPECT_EQ(r.ruin_frequency.value_or(-1.0), 0.0);
}

TEST(GrowthRate, RuinIsReportedSeparately) {
  auto ruin = growth_rate(bernoulli_sampler(1.0), lr_constructor(0.5, 0.0), config(50, 5));
  EXPECT_EQ(ruin.ruin_frequency.value_or(-1.0), 1.0);
  EXPECT_EQ(ruin.estimate, -kInfinity);
}

TEST(Samplers, LabelsAndSupport) {
  EXPECT_EQ(bernoulli_sampler(0.5).label, "bernoulli:0.5");
  EXPECT_EQ(gaussian_sampler(0.0, 1.0).label, "gaussian:0,1");
  EXPECT_EQ(beta_sampler(2.0, 3.0).label, "beta:2,3");
  EXPECT_THROW(bernoulli_sampler(1.5), ConfigError);
  EXPECT_THROW(gaussian_sampler(0.0, -1.0), ConfigError);
  Rng rng(1);
  std::vector<double> x(1000);
  beta_sampler(0.5, 0.5).fill(rng, x);
  for (double v : x) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(LambdaGridDefault, ShapeAndWeights) {
  auto g = default_lambda_grid();
  ASSERT_EQ(g.lambdas.size(), 42u);
  double total = 0.0;
  for (double w : g.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(*std::max_element(g.lambdas.begin(), g.lambdas.end()), 2.0, 1e-12);
  EXPECT_NEAR(*std::min_element(g.lambdas.begin(), g.lambdas.end()), -2.0, 1e-12);
}

TEST(Replays, GaussianGlrMatchesFamilies) {
  std::vector<double> x{0.3, -1.2, 2.5, 0.7, 0.1};
  double sum = 0.0;
  for (double v : x) sum += v;
  for (auto [lo, hi] : {std::pair{-10.0, 10.0}, std::pair{0.5, 2.0}}) {
    const double got = gaussian_log_glr(5.0, sum, 1.0, lo, hi);
    const double want = families::log_glr(families::ParamSet::grid({0.0}), families::ParamSet::interval(lo, hi),
                                          families::GaussianMeanParameter{1.0}, x);
    EXPECT_NEAR(got, want, 1e-8);
  }
}

TEST(Replays, TwoOnesObservedAnalysis) {
  TwoOnesSpec spec;
  auto r = two_ones_replay(spec, config(2000, 1000));
  EXPECT_NEAR(r.observed_p_fixed, 0.5, 1e-12);
  EXPECT_NEAR(r.observed_p_stopping, 19.0 / 32.0, 1e-12);
  EXPECT_NEAR(r.observed_lr, std::pow(0.6, 2) * std::pow(1.4, 3), 1e-12);
  EXPECT_TRUE(r.stopped_lr.within(1.0));
}

TEST(Replays, PHackingSmall) {
  PHackingSpec spec;
  spec.max_n = 200;
  auto r = p_hacking_replay(spec, config(2000, 200));
  EXPECT_GT(r.naive.estimate, 0.05);
  EXPECT_TRUE(r.eprocess.within(0.05));
}

TEST(Replays, TwoBatchNeverContinueMatchesOneBatch) {
  TwoBatchSpec spec;
  spec.never_continue = true;
  auto r = two_batch_replay(spec, config(5000, 100));
  EXPECT_EQ(r.continued.estimate, 0.0);
  // With one batch Fisher and the pooled test coincide.
  EXPECT_EQ(r.fisher.estimate, r.pooled.estimate);
  EXPECT_TRUE(r.fisher.within(0.05));
}

TEST(Replays, GlrInflationZeroLength) {
  GlrInflationSpec spec;
  spec.max_n = 0;
  EXPECT_EQ(glr_inflation(spec, config(10, 1)).estimate, 0.0);
}
