#pragma once
// Monte Carlo laboratory: validity, coverage and growth estimates for any
// e-process constructor, and replays of the optional-continuation scenarios.
//
// Replication i draws from Rng::for_stream(seed, i) only, and per-replication
// outcomes are reduced in index order, so a report depends on the
// configuration and never on the thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evlab/calibrate.hpp"
#include "evlab/evcore.hpp"
#include "evlab/rng.hpp"

namespace evlab::simlab {

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t reps = 1000;
  std::size_t horizon = 100;
  double alpha = 0.05;
  std::size_t threads = 1;

  /// Throws ConfigError for reps == 0, horizon == 0, alpha outside (0, 1) or
  /// threads == 0.
  void validate() const;
};

struct SimReport {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> metadata;
  std::optional<double> ruin_frequency;

  /// estimate <= bound + k * std_error
  bool within(double bound, double k = 3.0) const { return estimate <= bound + k * std_error; }
  /// estimate > bound + k * std_error
  bool exceeds(double bound, double k) const { return estimate > bound + k * std_error; }
};

/// Fills a buffer with one replication's observations.
struct Sampler {
  std::string label;
  std::function<void(Rng&, std::span<double>)> fill;
};

Sampler bernoulli_sampler(double theta);
Sampler gaussian_sampler(double mean, double sd);
Sampler beta_sampler(double a, double b);

struct Constructor {
  std::string label;
  std::function<EProcessTrace(std::span<const double>)> build;
};

/// Capital identically 1.
Constructor constant_constructor();

/// Runs body(i, rng_i) for i in [0, reps) on up to `threads` workers and
/// returns the results in index order. If replications throw, the one with the
/// smallest index is rethrown with the same exception class and the index
/// prepended to the message.
template <typename T>
std::vector<T> run_replications(const SimConfig& cfg,
                                const std::function<T(std::size_t, Rng&)>& body);

/// Mean and standard error (sample sd / sqrt(n)) of values, summed in order.
SimReport summarize(std::string name, std::span<const double> values, const SimConfig& cfg);

/// E[K_tau] for the rule on traces of length rule.horizon_cap() (which must
/// not exceed cfg.horizon).
SimReport mc_stopped_mean(const Sampler& null, const Constructor& constructor,
                          const StoppingRule& rule, const SimConfig& cfg);

/// P(K_t >= 1/alpha for some t <= horizon).
SimReport ville_coverage(const Sampler& null, const Constructor& constructor,
                         const SimConfig& cfg);

/// E[log K_T] / T with T = cfg.horizon. Replications ending at capital 0 are
/// left out of the mean and reported as ruin_frequency.
SimReport growth_rate(const Sampler& alt, const Constructor& constructor, const SimConfig& cfg);

/// Default lambda grid for the Gaussian mixture e-process: 21 log-spaced
/// magnitudes in [0.01, 2], both signs, equal weights.
struct LambdaGrid {
  std::vector<double> lambdas;
  std::vector<double> weights;
};
LambdaGrid default_lambda_grid();

struct PHackingSpec {
  std::size_t max_n = 1000;
  double sigma = 1.0;
  LambdaGrid grid = default_lambda_grid();
};

struct PHackingResult {
  SimReport naive;     // two-sided z-test below alpha at some look n <= max_n
  SimReport eprocess;  // Gaussian-mixture capital reaches 1/alpha by max_n
};

/// Data N(0, sigma^2) under the null, a look after every observation.
PHackingResult p_hacking_replay(const PHackingSpec& spec, const SimConfig& cfg);

struct TwoBatchSpec {
  std::size_t n1 = 50;
  std::size_t n2 = 30;
  /// Continue when alpha < p1 <= promising_upper.
  double promising_upper = 0.1;
  bool never_continue = false;
  double sigma = 1.0;
  LambdaGrid grid = default_lambda_grid();
  /// Route (d) calibrates each batch p-value with this.
  calibrate::Calibrator calibrator = calibrate::Calibrator::mixture();
};

struct TwoBatchResult {
  SimReport fisher;      // (a) Fisher on (p1, p2) as if the design were fixed
  SimReport pooled;      // (b) one z-test on all n1 + n2 points
  SimReport product_e;   // (c) E1 * E2 >= 1/alpha
  SimReport calibrated;  // (d) 1 / (C(p1) C(p2)) <= alpha
  SimReport continued;   // fraction of replications that took the second batch
};

/// The continue-if-promising protocol under the Gaussian null. An experiment
/// stopped after batch 1 is judged on batch 1 alone by every route.
TwoBatchResult two_batch_replay(const TwoBatchSpec& spec, const SimConfig& cfg);

struct GlrInflationSpec {
  std::size_t max_n = 1000;
  double sigma = 1.0;
  double alt_lo = -10.0;
  double alt_hi = 10.0;
};

/// Frequency with which the GLR of {mu = 0} against mu in [alt_lo, alt_hi]
/// reaches 1/alpha at some n <= max_n under N(0, sigma^2). max_n = 0 gives 0.
SimReport glr_inflation(const GlrInflationSpec& spec, const SimConfig& cfg);

/// log GLR for the Gaussian mean with known sigma after n points summing to
/// `sum`: the supremum sits at the sample mean clipped to the interval.
double gaussian_log_glr(double n, double sum, double sigma, double lo, double hi);

struct TwoOnesSpec {
  std::size_t max_n = 1000;
  double alt_theta = 0.7;  // alternative of the likelihood-ratio e-process
  std::vector<double> observed{0.0, 1.0, 0.0, 1.0, 1.0};
};

struct TwoOnesResult {
  SimReport stopped_lr;    // E[K_tau] of the LR e-process, tau = two ones in a row
  SimReport lr_crossing;   // K_tau >= 1/alpha
  SimReport naive_binomial;  // fixed-n one-sided binomial p at tau below alpha
  // Analysis of `observed` under both sampling plans.
  double observed_lr = 0.0;
  double observed_p_fixed = 0.0;     // P(S_n >= s) for fixed n
  double observed_p_stopping = 0.0;  // P(tau <= n) under the two-ones plan
};

/// Fair-coin data, stop at the first two consecutive ones (or max_n). The
/// stop decision reads the data through a prefix-guarded view.
TwoOnesResult two_ones_replay(const TwoOnesSpec& spec, const SimConfig& cfg);

}  // namespace evlab::simlab

#include "evlab/simlab_impl.hpp"
