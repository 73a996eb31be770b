#pragma once
// Hypothesis models and the e-statistic constructors built on them.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evlab/evcore.hpp"
#include "evlab/numerics.hpp"

namespace evlab::families {

// ---------------------------------------------------------------------------
// Point models

struct BernoulliModel {
  double theta;
};

struct GaussianModel {
  double mean;
  double sd;
};

using PointModel = std::variant<BernoulliModel, GaussianModel>;

/// Validating factories (std::invalid_argument on out-of-range parameters).
BernoulliModel bernoulli(double theta);
GaussianModel gaussian(double mean, double sd);

/// Log density (mass for Bernoulli); -inf outside the support.
double log_density(const PointModel& model, double x);
std::string describe(const PointModel& model);

// ---------------------------------------------------------------------------
// Simple-vs-simple constructions

/// Running likelihood ratio prod q(x_i)/p(x_i). A point with p = 0 < q makes
/// the capital +infinity; a point outside both supports is a DataError.
EProcessTrace lr_eprocess(const PointModel& null, const PointModel& alt,
                          std::span<const double> data);

/// exp(lambda*x - lambda^2 sigma^2 / 2), the likelihood ratio of N(sigma^2 lambda, sigma^2)
/// against N(0, sigma^2).
EValueSample gaussian_evar(double lambda, double sigma, double x);

/// Running product of gaussian_evar over the data.
EProcessTrace gaussian_eprocess(double lambda, double sigma, std::span<const double> data);

/// Convex mixture over a lambda grid of gaussian_eprocess traces.
EProcessTrace gaussian_mixture_eprocess(std::span<const double> lambdas,
                                        std::span<const double> weights, double sigma,
                                        std::span<const double> data);

// ---------------------------------------------------------------------------
// Bounded-mean betting

/// All distributions on [0, 1] with mean mu, 0 < mu < 1.
class BoundedMeanNull {
 public:
  explicit BoundedMeanNull(double mu);
  double mu() const { return mu_; }
  double lambda_min() const { return -1.0 / (1.0 - mu_); }
  double lambda_max() const { return 1.0 / mu_; }

 private:
  double mu_;
};

/// Predictable betting fraction. A strategy is a value; every trace gets its
/// own private state.
class LambdaStrategy {
 public:
  enum class Kind { fixed, grid_mixture, agrapa };

  static LambdaStrategy fixed(double lambda);
  /// Wealth-weighted average over a grid: reproduces the capital of the
  /// weighted mixture of fixed-lambda processes exactly.
  static LambdaStrategy grid_mixture(std::vector<double> lambdas, std::vector<double> weights);
  /// lambda_t = (m - mu) / (v + (m - mu)^2) from the regularized running mean m
  /// and variance v, clipped to half the legal interval.
  static LambdaStrategy agrapa();

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }
  std::string describe() const;

 private:
  explicit LambdaStrategy(Kind kind) : kind_(kind) {}

  Kind kind_;
  double lambda_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> weights_;
};

/// The betting bets lambda_t chosen before x_t is revealed. Exposed for tests.
std::vector<double> bounded_mean_lambdas(const BoundedMeanNull& null, const LambdaStrategy& strategy,
                                         std::span<const double> data);

/// M_t = prod [1 + lambda_i (x_i - mu)]. Data outside [0, 1] is a DataError; a
/// strategy emitting lambda outside the legal interval is a std::logic_error.
EProcessTrace bounded_mean_eprocess(const BoundedMeanNull& null, const LambdaStrategy& strategy,
                                    std::span<const double> data);

// ---------------------------------------------------------------------------
// Universal inference and the method of mixtures

/// Bernoulli(theta), theta in [lo, hi].
struct BernoulliFamily {
  double lo = 0.0;
  double hi = 1.0;
};

/// N(mu, sigma^2) with known sigma, mu in [lo, hi].
struct GaussianMeanFamily {
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 0.0;
};

using NullFamily = std::variant<BernoulliFamily, GaussianMeanFamily>;

void validate(const NullFamily& family);
std::string describe(const NullFamily& family);

/// Maximum-likelihood member of the family for the sample (clipped to the
/// parameter interval; boundary values are legal).
PointModel null_mle(const NullFamily& family, std::span<const double> data);

/// sum_i log p_hat(x_i) for the MLE p_hat on this sample; 0 for an empty sample.
double max_log_likelihood(const NullFamily& family, std::span<const double> data);

/// Alternative density used regardless of the data.
struct FixedPlugin {
  PointModel model;
};

/// Krichevsky-Trofimov predictive: P(1 | prefix) = (ones + 1/2) / (n + 1).
struct KtPlugin {};

/// N(m, sigma^2) with m the running mean shrunk toward prior_mean with
/// prior_count pseudo-observations.
struct GaussianRunningMeanPlugin {
  double sigma = 1.0;
  double prior_mean = 0.0;
  double prior_count = 1.0;
};

using Plugin = std::variant<FixedPlugin, KtPlugin, GaussianRunningMeanPlugin>;

std::string describe(const Plugin& plugin);

/// log q_hat_i(x_i) for i = 1..n, each computed from x_1..x_{i-1} only.
std::vector<double> plugin_log_predictive(const Plugin& plugin, std::span<const double> data);

struct UniversalResult {
  EValueSample value;   // U_T, null MLE fitted on all T points
  EProcessTrace trace;  // U_1..U_T, null MLE refitted at every prefix
};

UniversalResult universal_inference(const NullFamily& family, const Plugin& plugin,
                                    std::span<const double> data);

/// V_T = sum_j w_j prod_i q_j(x_i) / p_hat_T(x_i).
EValueSample mixture_universal(const NullFamily& family, std::span<const PointModel> grid,
                               std::span<const double> weights, std::span<const double> data);

/// V_1..V_T with the null MLE refitted at every prefix.
EProcessTrace mixture_universal_trace(const NullFamily& family, std::span<const PointModel> grid,
                                      std::span<const double> weights,
                                      std::span<const double> data);

// ---------------------------------------------------------------------------
// Generalized likelihood ratio (baseline, not an e-statistic)

class ParamSet {
 public:
  static ParamSet interval(double lo, double hi);
  static ParamSet grid(std::vector<double> points);

  bool is_interval() const { return interval_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& points() const { return points_; }
  std::string describe() const;

 private:
  ParamSet() = default;

  bool interval_ = false;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> points_;
};

struct BernoulliParameter {};
struct GaussianMeanParameter {
  double sigma = 1.0;
};
using GlrFamily = std::variant<BernoulliParameter, GaussianMeanParameter>;

struct Supremum {
  double argmax;
  double log_likelihood;  // up to a family-specific constant shared by all parameters
};

/// Grid search (65 points for intervals) refined by golden section to 1e-8.
Supremum sup_log_likelihood(const ParamSet& set, const GlrFamily& family,
                            std::span<const double> data);

double log_glr(const ParamSet& null_set, const ParamSet& alt_set, const GlrFamily& family,
               std::span<const double> data);
double glr(const ParamSet& null_set, const ParamSet& alt_set, const GlrFamily& family,
           std::span<const double> data);

// ---------------------------------------------------------------------------
// Right-Haar t-test Bayes factor

/// Discrete prior on the standardized effect size delta = mu / sigma.
class TTestPrior {
 public:
  TTestPrior(std::vector<double> support, std::vector<double> weights);
  static TTestPrior point(double delta);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::string describe() const;

 private:
  std::vector<double> support_;
  std::vector<double> weights_;
};

/// Half-width, in log sigma, of the integration window around the sample RMS:
/// sigma ranges over [rms / 10^4, rms * 10^4].
inline constexpr double kScaleWindowLog = 9.210340371976184;  // ln(1e4)

inline numerics::QuadratureOptions ttest_default_quadrature() {
  return numerics::QuadratureOptions{1e-8, 0.0, 4000};
}

/// log B for the sufficient statistics of a sample: count n, sum, sum of
/// squares. Returns 0 when sum_sq == 0. Throws NumericalError if the scale
/// integrals miss the tolerance.
double ttest_log_bayes_factor(const TTestPrior& prior, double n, double sum, double sum_sq,
                              const numerics::QuadratureOptions& options = ttest_default_quadrature());

/// B_1..B_T.
EProcessTrace ttest_eprocess(const TTestPrior& prior, std::span<const double> data,
                             const numerics::QuadratureOptions& options = ttest_default_quadrature());

}  // namespace evlab::families
