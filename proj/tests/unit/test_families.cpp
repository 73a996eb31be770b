#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/rng.hpp"
#include "oracles.hpp"

using namespace evlab;
using namespace evlab::families;

namespace {

std::vector<double> normals(std::size_t n, double mean, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = mean + sd * rng.normal();
  return x;
}

double normal_logpdf(double x, double m, double s) {
  return -0.5 * std::log(2.0 * M_PI * s * s) - (x - m) * (x - m) / (2.0 * s * s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Likelihood ratios

TEST(LrEprocess, BernoulliMatchesDirectProduct) {
  std::vector<double> x{1, 0, 1, 1, 0, 1};
  auto tr = lr_eprocess(bernoulli(0.5), bernoulli(0.7), x);
  double k = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    k *= x[i] == 1.0 ? 0.7 / 0.5 : 0.3 / 0.5;
    EXPECT_NEAR(tr.capital_at(i + 1), k, 1e-13);
  }
}

TEST(LrEprocess, GaussianMatchesDirectProduct) {
  auto x = normals(50, 0.0, 1.0, 1);
  auto tr = lr_eprocess(gaussian(0.0, 2.0), gaussian(0.5, 2.0), x);
  double log_k = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    log_k += normal_logpdf(x[i], 0.5, 2.0) - normal_logpdf(x[i], 0.0, 2.0);
    EXPECT_NEAR(tr.log_capital()[i], log_k, 1e-11);
  }
}

TEST(LrEprocess, NullMassZeroGivesInfinity) {
  std::vector<double> x{0.0, 1.0, 0.0};
  auto tr = lr_eprocess(bernoulli(0.0), bernoulli(0.5), x);
  EXPECT_NEAR(tr.capital_at(1), 0.5 / 1.0, 1e-15);
  EXPECT_EQ(tr.capital_at(2), kInfinity);
  EXPECT_EQ(tr.capital_at(3), kInfinity);
}

TEST(LrEprocess, RejectsBadData) {
  std::vector<double> x{0.5};
  EXPECT_THROW(lr_eprocess(bernoulli(0.5), bernoulli(0.7), x), DataError);
  std::vector<double> nan{std::nan("")};
  EXPECT_THROW(lr_eprocess(gaussian(0, 1), gaussian(1, 1), nan), DataError);
  EXPECT_THROW(lr_eprocess(bernoulli(0.5), gaussian(1, 1), std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(bernoulli(1.2), std::invalid_argument);
  EXPECT_THROW(gaussian(0, 0), std::invalid_argument);
}

TEST(LrEprocess, ExactValidityByEnumeration) {
  for (std::size_t T : {1u, 5u, 10u}) {
    const double mean = oracle::enumerate_binary(T, 0.3, [](std::span<const double> x) {
      return lr_eprocess(bernoulli(0.3), bernoulli(0.8), x).final_capital();
    });
    EXPECT_NEAR(mean, 1.0, 1e-12);
  }
}

TEST(GaussianEvar, MatchesLikelihoodRatioAndHasUnitMean) {
  const double lambda = 0.4, sigma = 1.5, x = 0.9;
  const double lr = std::exp(normal_logpdf(x, sigma * sigma * lambda, sigma) - normal_logpdf(x, 0.0, sigma));
  EXPECT_NEAR(gaussian_evar(lambda, sigma, x).value(), lr, 1e-13);
  const double mean = oracle::integrate(
      [&](double y) { return gaussian_evar(lambda, sigma, y).value() * std::exp(normal_logpdf(y, 0.0, sigma)); },
      -40.0, 40.0);
  EXPECT_NEAR(mean, 1.0, 1e-10);
}

TEST(GaussianMixture, EqualsWeightedSumOfComponents) {
  auto x = normals(40, 0.2, 1.0, 2);
  std::vector<double> lambdas{-0.5, 0.1, 0.8};
  std::vector<double> weights{0.2, 0.3, 0.5};
  auto mix = gaussian_mixture_eprocess(lambdas, weights, 1.0, x);
  for (std::size_t t = 1; t <= x.size(); t += 13) {
    double want = 0.0;
    for (std::size_t j = 0; j < 3; ++j) want += weights[j] * gaussian_eprocess(lambdas[j], 1.0, x).capital_at(t);
    EXPECT_NEAR(mix.capital_at(t) / want, 1.0, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Bounded mean

TEST(BoundedMean, FixedLambdaIsProductOfBets) {
  std::vector<double> x{0.2, 0.9, 0.5, 1.0, 0.0};
  BoundedMeanNull null(0.4);
  auto tr = bounded_mean_eprocess(null, LambdaStrategy::fixed(1.2), x);
  double k = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    k *= 1.0 + 1.2 * (x[i] - 0.4);
    EXPECT_NEAR(tr.capital_at(i + 1), k, 1e-13);
  }
}

TEST(BoundedMean, BetsArePredictable) {
  Rng rng(4);
  std::vector<double> x(60);
  for (double& v : x) v = rng.uniform();
  BoundedMeanNull null(0.5);
  const auto strategy = LambdaStrategy::agrapa();
  const auto full = bounded_mean_lambdas(null, strategy, x);
  for (std::size_t t = 1; t < x.size(); t += 7) {
    std::vector<double> prefix(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(t));
    const auto partial = bounded_mean_lambdas(null, strategy, prefix);
    for (std::size_t i = 0; i < t; ++i) EXPECT_EQ(partial[i], full[i]);
  }
  for (double l : full) {
    EXPECT_GE(l, null.lambda_min() / 2.0 - 1e-15);
    EXPECT_LE(l, null.lambda_max() / 2.0 + 1e-15);
  }
}

TEST(BoundedMean, GridMixtureEqualsMixtureOfFixedProcesses) {
  Rng rng(5);
  std::vector<double> x(80);
  for (double& v : x) v = rng.beta(2.0, 2.0);
  BoundedMeanNull null(0.45);
  std::vector<double> grid{-1.0, 0.5, 1.5};
  std::vector<double> w{0.25, 0.25, 0.5};
  auto mixed = bounded_mean_eprocess(null, LambdaStrategy::grid_mixture(grid, w), x);
  for (std::size_t t = 1; t <= x.size(); t += 11) {
    double want = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      want += w[j] * bounded_mean_eprocess(null, LambdaStrategy::fixed(grid[j]), x).capital_at(t);
    }
    EXPECT_NEAR(mixed.capital_at(t) / want, 1.0, 1e-11);
  }
}

TEST(BoundedMean, ExactValidityForFixedLambda) {
  BoundedMeanNull null(0.35);
  const double mean = oracle::enumerate_binary(10, 0.35, [&](std::span<const double> x) {
    return bounded_mean_eprocess(null, LambdaStrategy::fixed(-1.3), x).final_capital();
  });
  EXPECT_NEAR(mean, 1.0, 1e-12);
}

TEST(BoundedMean, ErrorsAndLimits) {
  EXPECT_THROW(BoundedMeanNull(0.0), std::invalid_argument);
  EXPECT_THROW(BoundedMeanNull(1.0), std::invalid_argument);
  BoundedMeanNull null(0.5);
  std::vector<double> outside{0.2, 1.5};
  EXPECT_THROW(bounded_mean_eprocess(null, LambdaStrategy::fixed(1.0), outside), DataError);
  std::vector<double> x{0.0};
  EXPECT_THROW(bounded_mean_eprocess(null, LambdaStrategy::fixed(2.5), x), std::logic_error);
  // lambda at the upper limit with x = 0 wipes the capital out.
  auto tr = bounded_mean_eprocess(null, LambdaStrategy::fixed(2.0), x);
  EXPECT_EQ(tr.final_capital(), 0.0);
}

// ---------------------------------------------------------------------------
// Universal inference and mixtures

TEST(Universal, MatchesHandComputation) {
  std::vector<double> x{1, 1, 0, 1};
  const NullFamily fam = BernoulliFamily{0.0, 0.5};
  auto res = universal_inference(fam, KtPlugin{}, x);
  // KT: 1/2 * 3/4 * 1/6 * 5/8; null MLE clipped to 0.5 over the whole sample.
  const double kt = 0.5 * 0.75 * (1.0 / 6.0) * (5.0 / 8.0);
  EXPECT_NEAR(res.value.value(), kt / std::pow(0.5, 4), 1e-13);
  EXPECT_NEAR(res.trace.capital_at(4), res.value.value(), 1e-13);
  // Prefix {1}: MLE 0.5, plug-in 1/2.
  EXPECT_NEAR(res.trace.capital_at(1), 1.0, 1e-13);
}

TEST(Universal, ExactValidityAtEveryNullPoint) {
  const NullFamily fam = BernoulliFamily{0.2, 0.6};
  for (double theta : {0.2, 0.4, 0.6}) {
    const double mean = oracle::enumerate_binary(10, theta, [&](std::span<const double> x) {
      return universal_inference(fam, KtPlugin{}, x).value.value();
    });
    EXPECT_LE(mean, 1.0 + 1e-9) << theta;
  }
}

TEST(Universal, GaussianRunningMean) {
  auto x = normals(30, 0.0, 1.0, 9);
  const NullFamily fam = GaussianMeanFamily{1.0, -0.1, 0.1};
  auto res = universal_inference(fam, GaussianRunningMeanPlugin{1.0, 0.0, 1.0}, x);
  double log_q = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = sum / (static_cast<double>(i) + 1.0);
    log_q += normal_logpdf(x[i], m, 1.0);
    sum += x[i];
  }
  const double mle = std::clamp(sum / 30.0, -0.1, 0.1);
  double log_p = 0.0;
  for (double v : x) log_p += normal_logpdf(v, mle, 1.0);
  EXPECT_NEAR(std::log(res.value.value()), log_q - log_p, 1e-10);
}

TEST(Universal, MixtureValidityAndTraceEnd) {
  const NullFamily fam = BernoulliFamily{0.0, 0.5};
  std::vector<PointModel> grid{bernoulli(0.6), bernoulli(0.8), bernoulli(0.95)};
  std::vector<double> w{0.5, 0.25, 0.25};
  const double mean = oracle::enumerate_binary(11, 0.5, [&](std::span<const double> x) {
    return mixture_universal(fam, grid, w, x).value();
  });
  EXPECT_LE(mean, 1.0 + 1e-9);
  std::vector<double> x{1, 1, 1, 0, 1, 1};
  auto tr = mixture_universal_trace(fam, grid, w, x);
  EXPECT_NEAR(tr.final_capital(), mixture_universal(fam, grid, w, x).value(), 1e-12);
}

TEST(Universal, Validation) {
  EXPECT_THROW(validate(NullFamily{BernoulliFamily{0.6, 0.4}}), std::invalid_argument);
  EXPECT_THROW(validate(NullFamily{GaussianMeanFamily{0.0, 0.0, 1.0}}), std::invalid_argument);
  std::vector<double> bad{2.0};
  EXPECT_THROW(universal_inference(BernoulliFamily{}, KtPlugin{}, bad), DataError);
}

// ---------------------------------------------------------------------------
// GLR

TEST(Glr, BernoulliClosedForm) {
  std::vector<double> x{1, 1, 1, 0, 1, 1, 0, 1};
  const double phat = 6.0 / 8.0;
  const double want = 6 * std::log(phat) + 2 * std::log(1 - phat) - 8 * std::log(0.5);
  const double got = log_glr(ParamSet::grid({0.5}), ParamSet::interval(0.0, 1.0), BernoulliParameter{}, x);
  EXPECT_NEAR(got, want, 1e-9);
  auto sup = sup_log_likelihood(ParamSet::interval(0.0, 1.0), BernoulliParameter{}, x);
  EXPECT_NEAR(sup.argmax, phat, 1e-7);
}

TEST(Glr, GaussianIntervalClipsTheMean) {
  auto x = normals(25, 3.0, 1.0, 3);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 25.0;
  auto sup = sup_log_likelihood(ParamSet::interval(-1.0, 1.0), GaussianMeanParameter{1.0}, x);
  EXPECT_NEAR(sup.argmax, 1.0, 1e-7);
  auto free = sup_log_likelihood(ParamSet::interval(-10.0, 10.0), GaussianMeanParameter{1.0}, x);
  EXPECT_NEAR(free.argmax, mean, 1e-7);
  const double lg = log_glr(ParamSet::grid({0.0}), ParamSet::interval(-10, 10), GaussianMeanParameter{1.0}, x);
  EXPECT_NEAR(lg, 25.0 * mean * mean / 2.0, 1e-8);
}

TEST(Glr, EdgeCases) {
  EXPECT_EQ(log_glr(ParamSet::grid({0.5}), ParamSet::interval(0, 1), BernoulliParameter{}, {}), 0.0);
  std::vector<double> ones{1, 1};
  EXPECT_EQ(log_glr(ParamSet::grid({0.0}), ParamSet::grid({0.5}), BernoulliParameter{}, ones), kInfinity);
  EXPECT_THROW(ParamSet::interval(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(ParamSet::grid({}), std::invalid_argument);
  std::vector<double> half{0.5};
  EXPECT_THROW(log_glr(ParamSet::grid({0.5}), ParamSet::grid({0.7}), BernoulliParameter{}, half), DataError);
}

TEST(Glr, GlrIsNotAnEValue) {
  // Under the null the GLR of a point null against the full interval has
  // expectation above one.
  const double mean = oracle::enumerate_binary(10, 0.5, [](std::span<const double> x) {
    return glr(ParamSet::grid({0.5}), ParamSet::interval(0.0, 1.0), BernoulliParameter{}, x);
  });
  EXPECT_GT(mean, 1.5);
}

// ---------------------------------------------------------------------------
// t-test Bayes factor

TEST(TTest, MatchesConfluentSeriesForPointPrior) {
  struct Case {
    double n, s1, s2, delta;
  };
  for (auto c : {Case{5, 1.3, 4.2, 1.0}, Case{20, -3.0, 25.0, 0.5}, Case{100, 30.0, 120.0, 0.3},
                 Case{12, 6.0, 10.0, -0.7}, Case{50, -2.0, 60.0, 2.0}}) {
    const double got = std::exp(ttest_log_bayes_factor(TTestPrior::point(c.delta), c.n, c.s1, c.s2));
    const double want = oracle::ttest_kummer(c.n, c.delta, c.s1, c.s2);
    EXPECT_NEAR(got / want, 1.0, 1e-9) << "n=" << c.n;
  }
}

TEST(TTest, MatchesRiemannOracleForDiscretePrior) {
  TTestPrior prior({-0.5, 0.5, 1.0}, {0.25, 0.25, 0.5});
  auto x = normals(15, 0.4, 2.0, 21);
  const auto tr = ttest_eprocess(prior, x);
  const double want = oracle::ttest_riemann(prior.support(), prior.weights(), x, 200000);
  EXPECT_NEAR(tr.final_capital() / want, 1.0, 1e-6);
}

TEST(TTest, ScaleInvariance) {
  auto x = normals(30, 0.3, 1.0, 22);
  TTestPrior prior({0.5, 1.0}, {0.5, 0.5});
  const auto base = ttest_eprocess(prior, x);
  for (double c : {0.1, 7.0}) {
    std::vector<double> y(x);
    for (double& v : y) v *= c;
    const auto scaled = ttest_eprocess(prior, y);
    for (std::size_t t = 1; t <= x.size(); ++t) {
      EXPECT_NEAR(scaled.capital_at(t) / base.capital_at(t), 1.0, 1e-6);
    }
  }
}

TEST(TTest, TraceMatchesPointwiseCalls) {
  auto x = normals(12, 0.0, 1.0, 23);
  TTestPrior prior = TTestPrior::point(0.8);
  const auto tr = ttest_eprocess(prior, x);
  double s1 = 0, s2 = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    s1 += x[t];
    s2 += x[t] * x[t];
    EXPECT_NEAR(tr.log_capital()[t], ttest_log_bayes_factor(prior, t + 1.0, s1, s2), 1e-12);
  }
}

TEST(TTest, ZeroDataGivesUnitFactorAndValidation) {
  EXPECT_EQ(ttest_log_bayes_factor(TTestPrior::point(1.0), 3.0, 0.0, 0.0), 0.0);
  EXPECT_THROW(TTestPrior({0.5}, {0.7}), std::invalid_argument);
  EXPECT_THROW(TTestPrior({}, {}), std::invalid_argument);
  std::vector<double> bad{1.0, std::nan("")};
  EXPECT_THROW(ttest_eprocess(TTestPrior::point(1.0), bad), DataError);
}

TEST(TTest, NonConvergenceIsANumericalError) {
  EXPECT_THROW(ttest_log_bayes_factor(TTestPrior::point(1.0), 10.0, 3.0, 20.0, {1e-15, 0.0, 4}), NumericalError);
}
