#include "evlab/simlab.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"

namespace evlab::simlab {
namespace {

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double two_sided_p(double sum, double n, double sigma) {
  const double z = sum / (sigma * std::sqrt(n));
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

// log sum_j w_j exp(lambda_j S - n lambda_j^2 sigma^2 / 2)
double log_mixture_evalue(const LambdaGrid& grid, double sum, double n, double sigma) {
  double shift = -kInfinity;
  std::vector<double> terms(grid.lambdas.size());
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const double l = grid.lambdas[j];
    terms[j] = std::log(grid.weights[j]) + l * sum - 0.5 * n * l * l * sigma * sigma;
    shift = std::max(shift, terms[j]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - shift);
  return shift + std::log(acc);
}

void check_grid(const LambdaGrid& grid) {
  if (grid.lambdas.empty() || grid.lambdas.size() != grid.weights.size()) {
    throw ConfigError("lambda grid and weights must match and be nonempty");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < grid.weights.size(); ++j) {
    if (!(grid.weights[j] > 0.0) || !std::isfinite(grid.lambdas[j])) {
      throw ConfigError("lambda grid needs finite lambdas and positive weights");
    }
    total += grid.weights[j];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("lambda grid weights must sum to 1");
}

SimReport flag_report(std::string name, const std::vector<double>& flags, const SimConfig& cfg) {
  return summarize(std::move(name), flags, cfg);
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t c) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][c];
  return out;
}

// P(Bin(n, 1/2) >= s)
double binomial_upper_tail(std::size_t n, std::size_t s) {
  if (s == 0) return 1.0;
  if (s > n) return 0.0;
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  double total = 0.0;
  for (std::size_t k = s; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    total += std::exp(log_choose + log_half_n);
  }
  return std::min(1.0, total);
}

// P(two consecutive ones occur within the first n fair-coin flips)
double two_ones_by(std::size_t n) {
  // Mass of paths still running, split by whether the last flip was a one.
  double last_zero = 1.0;
  double last_one = 0.0;
  double stopped = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double next_zero = 0.5 * (last_zero + last_one);
    const double next_one = 0.5 * last_zero;
    stopped += 0.5 * last_one;
    last_zero = next_zero;
    last_one = next_one;
  }
  return stopped;
}

}  // namespace

namespace detail {

[[noreturn]] void rethrow_indexed(std::exception_ptr error, std::size_t index) {
  const std::string prefix = "replication " + std::to_string(index) + ": ";
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const PrefixViolation& e) {
    throw PrefixViolation(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(prefix + e.what());
  } catch (const std::out_of_range& e) {
    throw std::out_of_range(prefix + e.what());
  } catch (const std::logic_error& e) {
    throw std::logic_error(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

}  // namespace detail

void SimConfig::validate() const {
  if (reps == 0) throw ConfigError("reps must be positive");
  if (horizon == 0) throw ConfigError("horizon must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (threads == 0) throw ConfigError("threads must be positive");
}

Sampler bernoulli_sampler(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("bernoulli sampler: theta outside [0, 1]");
  return Sampler{"bernoulli:" + num(theta), [theta](Rng& rng, std::span<double> out) {
                   for (double& x : out) x = rng.bernoulli(theta);
                 }};
}

Sampler gaussian_sampler(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd)) {
    throw ConfigError("gaussian sampler: need finite mean and positive sd");
  }
  return Sampler{"gaussian:" + num(mean) + "," + num(sd), [mean, sd](Rng& rng, std::span<double> out) {
                   for (double& x : out) x = mean + sd * rng.normal();
                 }};
}

Sampler beta_sampler(double a, double b) {
  if (!(a > 0.0 && b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ConfigError("beta sampler: shapes must be positive");
  }
  return Sampler{"beta:" + num(a) + "," + num(b), [a, b](Rng& rng, std::span<double> out) {
                   for (double& x : out) x = rng.beta(a, b);
                 }};
}

Constructor constant_constructor() {
  return Constructor{"constant", [](std::span<const double> data) {
                       return EProcessTrace::from_factors(std::vector<double>(data.size(), 1.0));
                     }};
}

SimReport summarize(std::string name, std::span<const double> values, const SimConfig& cfg) {
  SimReport report;
  report.name = std::move(name);
  report.reps = values.size();
  report.seed = cfg.seed;
  if (values.empty()) {
    report.estimate = std::numeric_limits<double>::quiet_NaN();
    report.std_error = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  report.estimate = mean;
  if (!std::isfinite(mean)) {
    report.std_error = kInfinity;
    return report;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double n = static_cast<double>(values.size());
  report.std_error = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  return report;
}

SimReport mc_stopped_mean(const Sampler& null, const Constructor& constructor,
                          const StoppingRule& rule, const SimConfig& cfg) {
  cfg.validate();
  const std::size_t length = rule.horizon_cap();
  if (length > cfg.horizon) {
    throw ConfigError("stopping rule cap " + std::to_string(length) + " exceeds horizon " +
                      std::to_string(cfg.horizon));
  }
  const std::function<double(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> data(length);
    null.fill(rng, data);
    const auto trace = constructor.build(data);
    return stopped_value(trace, rule, data).value();
  };
  const auto values = run_replications(cfg, body);
  SimReport report = summarize("stopped_mean", values, cfg);
  report.metadata = {{"model", null.label},
                     {"constructor", constructor.label},
                     {"rule", rule.describe()},
                     {"bound", "1"}};
  return report;
}

SimReport ville_coverage(const Sampler& null, const Constructor& constructor, const SimConfig& cfg) {
  cfg.validate();
  const std::function<double(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> data(cfg.horizon);
    null.fill(rng, data);
    const auto trace = constructor.build(data);
    return first_crossing(trace, cfg.alpha).has_value() ? 1.0 : 0.0;
  };
  const auto values = run_replications(cfg, body);
  SimReport report = summarize("ville_coverage", values, cfg);
  report.metadata = {{"model", null.label},
                     {"constructor", constructor.label},
                     {"horizon", std::to_string(cfg.horizon)},
                     {"alpha", num(cfg.alpha)},
                     {"bound", num(cfg.alpha)}};
  return report;
}

SimReport growth_rate(const Sampler& alt, const Constructor& constructor, const SimConfig& cfg) {
  cfg.validate();
  const double horizon = static_cast<double>(cfg.horizon);
  const std::function<double(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> data(cfg.horizon);
    alt.fill(rng, data);
    return constructor.build(data).final_log_capital() / horizon;
  };
  const auto values = run_replications(cfg, body);
  std::vector<double> alive;
  alive.reserve(values.size());
  for (double v : values) {
    if (v != -kInfinity) alive.push_back(v);
  }
  SimReport report = summarize("growth_rate", alive, cfg);
  if (alive.empty()) report.estimate = -kInfinity;
  report.reps = values.size();
  report.ruin_frequency = static_cast<double>(values.size() - alive.size()) /
                          static_cast<double>(values.size());
  report.metadata = {{"model", alt.label},
                     {"constructor", constructor.label},
                     {"horizon", std::to_string(cfg.horizon)},
                     {"units", "nats per observation"}};
  return report;
}

LambdaGrid default_lambda_grid() {
  constexpr int kMagnitudes = 21;
  LambdaGrid grid;
  for (int k = 0; k < kMagnitudes; ++k) {
    const double m = 0.01 * std::pow(200.0, static_cast<double>(k) / (kMagnitudes - 1));
    grid.lambdas.push_back(-m);
    grid.lambdas.push_back(m);
  }
  grid.weights.assign(grid.lambdas.size(), 1.0 / static_cast<double>(grid.lambdas.size()));
  return grid;
}

PHackingResult p_hacking_replay(const PHackingSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  check_grid(spec.grid);
  if (spec.max_n == 0) throw ConfigError("p-hacking: max_n must be positive");
  if (!(spec.sigma > 0.0)) throw ConfigError("p-hacking: sigma must be positive");
  const Sampler null = gaussian_sampler(0.0, spec.sigma);

  const std::function<std::vector<double>(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> data(spec.max_n);
    null.fill(rng, data);
    const auto trace =
        families::gaussian_mixture_eprocess(spec.grid.lambdas, spec.grid.weights, spec.sigma, data);
    // A look after every observation. The rule reads x_t through the guarded
    // view as it is revealed and keeps the running sum itself.
    double sum = 0.0;
    const auto significant = [&](const StopContext& ctx) {
      sum += ctx.x(ctx.time());
      return two_sided_p(sum, static_cast<double>(ctx.time()), spec.sigma) < cfg.alpha;
    };
    const StoppingRule rule = StoppingRule::predicate(significant, spec.max_n, "significant");
    const std::size_t tau = rule.stop_time(trace, data);
    if (tau == spec.max_n) sum += data[tau - 1];
    const double naive = two_sided_p(sum, static_cast<double>(tau), spec.sigma) < cfg.alpha ? 1.0 : 0.0;
    const double crossed = first_crossing(trace, cfg.alpha).has_value() ? 1.0 : 0.0;
    return std::vector<double>{naive, crossed};
  };
  const auto rows = run_replications(cfg, body);
  PHackingResult result{flag_report("p_hacking_naive", column(rows, 0), cfg),
                        flag_report("p_hacking_eprocess", column(rows, 1), cfg)};
  for (auto* r : {&result.naive, &result.eprocess}) {
    r->metadata = {{"max_n", std::to_string(spec.max_n)},
                   {"sigma", num(spec.sigma)},
                   {"alpha", num(cfg.alpha)},
                   {"bound", num(cfg.alpha)},
                   {"lambda_grid", std::to_string(spec.grid.lambdas.size())}};
  }
  return result;
}

TwoBatchResult two_batch_replay(const TwoBatchSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  check_grid(spec.grid);
  if (spec.n1 == 0 || spec.n2 == 0) throw ConfigError("two-batch: batch sizes must be positive");
  if (!(spec.promising_upper >= cfg.alpha && spec.promising_upper <= 1.0)) {
    throw ConfigError("two-batch: promising_upper must lie in [alpha, 1]");
  }
  if (!(spec.sigma > 0.0)) throw ConfigError("two-batch: sigma must be positive");
  const Sampler null = gaussian_sampler(0.0, spec.sigma);
  const double log_threshold = -std::log(cfg.alpha);
  constexpr double kSmallestP = std::numeric_limits<double>::min();

  const std::function<std::vector<double>(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> batch1(spec.n1);
    null.fill(rng, batch1);
    double s1 = 0.0;
    for (double x : batch1) s1 += x;
    const double n1 = static_cast<double>(spec.n1);
    const double p1 = std::max(two_sided_p(s1, n1, spec.sigma), kSmallestP);
    const double log_e1 = log_mixture_evalue(spec.grid, s1, n1, spec.sigma);
    const double log_c1 = std::log(spec.calibrator(p1).value());
    const bool go_on = !spec.never_continue && p1 > cfg.alpha && p1 <= spec.promising_upper;
    if (!go_on) {
      const double reject_p = p1 <= cfg.alpha ? 1.0 : 0.0;
      return std::vector<double>{reject_p, reject_p, log_e1 >= log_threshold ? 1.0 : 0.0,
                                 log_c1 >= log_threshold ? 1.0 : 0.0, 0.0};
    }
    std::vector<double> batch2(spec.n2);
    null.fill(rng, batch2);
    double s2 = 0.0;
    for (double x : batch2) s2 += x;
    const double n2 = static_cast<double>(spec.n2);
    const double p2 = std::max(two_sided_p(s2, n2, spec.sigma), kSmallestP);
    const std::vector<double> ps{p1, p2};
    const double fisher = calibrate::fisher_combine(ps);
    const double pooled = two_sided_p(s1 + s2, n1 + n2, spec.sigma);
    const double log_e = log_e1 + log_mixture_evalue(spec.grid, s2, n2, spec.sigma);
    const double log_c = log_c1 + std::log(spec.calibrator(p2).value());
    return std::vector<double>{fisher <= cfg.alpha ? 1.0 : 0.0, pooled <= cfg.alpha ? 1.0 : 0.0,
                               log_e >= log_threshold ? 1.0 : 0.0,
                               log_c >= log_threshold ? 1.0 : 0.0, 1.0};
  };
  const auto rows = run_replications(cfg, body);
  TwoBatchResult result{flag_report("two_batch_fisher", column(rows, 0), cfg),
                        flag_report("two_batch_pooled", column(rows, 1), cfg),
                        flag_report("two_batch_product_e", column(rows, 2), cfg),
                        flag_report("two_batch_calibrated", column(rows, 3), cfg),
                        flag_report("two_batch_continued", column(rows, 4), cfg)};
  for (auto* r : {&result.fisher, &result.pooled, &result.product_e, &result.calibrated,
                  &result.continued}) {
    r->metadata = {{"n1", std::to_string(spec.n1)},
                   {"n2", std::to_string(spec.n2)},
                   {"promising_upper", num(spec.promising_upper)},
                   {"never_continue", spec.never_continue ? "true" : "false"},
                   {"sigma", num(spec.sigma)},
                   {"alpha", num(cfg.alpha)},
                   {"calibrator", spec.calibrator.describe()}};
  }
  return result;
}

double gaussian_log_glr(double n, double sum, double sigma, double lo, double hi) {
  if (n <= 0.0) return 0.0;
  const double mu = std::clamp(sum / n, lo, hi);
  // log-likelihood at mu minus at 0: (2 mu S - n mu^2) / (2 sigma^2)
  return (2.0 * mu * sum - n * mu * mu) / (2.0 * sigma * sigma);
}

SimReport glr_inflation(const GlrInflationSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  if (!(spec.alt_lo <= spec.alt_hi)) throw ConfigError("glr: empty alternative interval");
  if (!(spec.sigma > 0.0)) throw ConfigError("glr: sigma must be positive");
  const Sampler null = gaussian_sampler(0.0, spec.sigma);
  const double log_threshold = -std::log(cfg.alpha);

  const std::function<double(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> data(spec.max_n);
    null.fill(rng, data);
    double sum = 0.0;
    for (std::size_t n = 1; n <= spec.max_n; ++n) {
      sum += data[n - 1];
      if (gaussian_log_glr(static_cast<double>(n), sum, spec.sigma, spec.alt_lo, spec.alt_hi) >=
          log_threshold) {
        return 1.0;
      }
    }
    return 0.0;
  };
  const auto values = run_replications(cfg, body);
  SimReport report = summarize("glr_crossing", values, cfg);
  report.metadata = {{"max_n", std::to_string(spec.max_n)},
                     {"sigma", num(spec.sigma)},
                     {"alternative", "[" + num(spec.alt_lo) + "," + num(spec.alt_hi) + "]"},
                     {"alpha", num(cfg.alpha)},
                     {"bound", num(cfg.alpha)}};
  return report;
}

TwoOnesResult two_ones_replay(const TwoOnesSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  if (spec.max_n < 2) throw ConfigError("two-ones: max_n must be at least 2");
  if (!(spec.alt_theta > 0.0 && spec.alt_theta < 1.0)) {
    throw ConfigError("two-ones: alternative theta must lie in (0, 1)");
  }
  const families::PointModel null_model = families::bernoulli(0.5);
  const families::PointModel alt_model = families::bernoulli(spec.alt_theta);
  const auto two_ones = [](const StopContext& ctx) {
    const std::size_t t = ctx.time();
    return t >= 2 && ctx.x(t) == 1.0 && ctx.x(t - 1) == 1.0;
  };
  const StoppingRule rule = StoppingRule::predicate(two_ones, spec.max_n, "two_ones");
  const Sampler coin = bernoulli_sampler(0.5);
  const double log_threshold = -std::log(cfg.alpha);

  const std::function<std::vector<double>(std::size_t, Rng&)> body = [&](std::size_t, Rng& rng) {
    std::vector<double> data(spec.max_n);
    coin.fill(rng, data);
    const auto trace = families::lr_eprocess(null_model, alt_model, data);
    const std::size_t tau = rule.stop_time(trace, data);
    const double k_tau = trace.capital_at(tau);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < tau; ++i) ones += data[i] == 1.0 ? 1 : 0;
    const double p_fixed = binomial_upper_tail(tau, ones);
    return std::vector<double>{k_tau, trace.log_capital()[tau - 1] >= log_threshold ? 1.0 : 0.0,
                               p_fixed <= cfg.alpha ? 1.0 : 0.0};
  };
  const auto rows = run_replications(cfg, body);
  TwoOnesResult result;
  result.stopped_lr = summarize("two_ones_stopped_lr", column(rows, 0), cfg);
  result.lr_crossing = flag_report("two_ones_lr_crossing", column(rows, 1), cfg);
  result.naive_binomial = flag_report("two_ones_naive_binomial", column(rows, 2), cfg);
  for (auto* r : {&result.stopped_lr, &result.lr_crossing, &result.naive_binomial}) {
    r->metadata = {{"max_n", std::to_string(spec.max_n)},
                   {"alt_theta", num(spec.alt_theta)},
                   {"alpha", num(cfg.alpha)},
                   {"rule", rule.describe()}};
  }

  std::size_t ones = 0;
  for (std::size_t i = 0; i < spec.observed.size(); ++i) {
    const double x = spec.observed[i];
    if (x != 0.0 && x != 1.0) {
      throw DataError("two-ones: observed value " + std::to_string(i + 1) + " is not a bit");
    }
    ones += x == 1.0 ? 1 : 0;
  }
  const auto observed_trace = families::lr_eprocess(null_model, alt_model, spec.observed);
  result.observed_lr = observed_trace.final_capital();
  result.observed_p_fixed = binomial_upper_tail(spec.observed.size(), ones);
  result.observed_p_stopping = two_ones_by(spec.observed.size());
  return result;
}

}  // namespace evlab::simlab
