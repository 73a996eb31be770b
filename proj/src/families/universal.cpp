#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab::families {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void require_binary(std::span<const double> data, const char* who) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] != 0.0 && data[i] != 1.0) {
      throw DataError(std::string(who) + ": observation " + std::to_string(i + 1) +
                      " is not binary");
    }
  }
}

void require_finite(std::span<const double> data, const char* who) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw DataError(std::string(who) + ": observation " + std::to_string(i + 1) +
                      " is not a finite number");
    }
  }
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

// Sufficient statistics of a growing sample plus the family's maximized
// log-likelihood at the current prefix.
class NullFit {
 public:
  explicit NullFit(const NullFamily& family) : family_(family) {}

  void add(double x) {
    ++n_;
    if (std::holds_alternative<BernoulliFamily>(family_)) {
      ones_ += x;
    } else {
      const double delta = x - mean_;
      mean_ += delta / static_cast<double>(n_);
      m2_ += delta * (x - mean_);
    }
  }

  PointModel mle() const {
    if (const auto* b = std::get_if<BernoulliFamily>(&family_)) {
      const double raw = n_ == 0 ? 0.5 : ones_ / static_cast<double>(n_);
      return BernoulliModel{std::clamp(raw, b->lo, b->hi)};
    }
    const auto& g = std::get<GaussianMeanFamily>(family_);
    const double raw = n_ == 0 ? 0.5 * (g.lo + g.hi) : mean_;
    return GaussianModel{std::clamp(raw, g.lo, g.hi), g.sigma};
  }

  double max_log_likelihood() const {
    if (n_ == 0) return 0.0;
    const double n = static_cast<double>(n_);
    const PointModel best = mle();
    if (const auto* b = std::get_if<BernoulliModel>(&best)) {
      return xlogy(ones_, b->theta) + xlogy(n - ones_, 1.0 - b->theta);
    }
    const auto& g = std::get<GaussianModel>(best);
    const double gap = mean_ - g.mean;
    return -n * (std::log(g.sd) + kHalfLog2Pi) - (m2_ + n * gap * gap) / (2.0 * g.sd * g.sd);
  }

 private:
  const NullFamily& family_;
  std::size_t n_ = 0;
  double ones_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

void check_data(const NullFamily& family, std::span<const double> data, const char* who) {
  validate(family);
  if (std::holds_alternative<BernoulliFamily>(family)) {
    require_binary(data, who);
  } else {
    require_finite(data, who);
  }
}

// log(numerator) - log(null maximum) with the absorbing conventions: a zero
// numerator wins over a zero denominator.
double log_ratio(double log_num, double log_den) {
  if (log_num == -kInfinity) return -kInfinity;
  if (log_den == -kInfinity) return kInfinity;
  return log_num - log_den;
}

// Keeps the first absorbing state reached.
double absorb(double previous, double current) {
  return std::isinf(previous) ? previous : current;
}

void check_grid(const NullFamily& family, std::span<const PointModel> grid,
                std::span<const double> weights) {
  if (grid.empty() || grid.size() != weights.size()) {
    throw std::invalid_argument("mixture_universal: grid and weights must match and be nonempty");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("mixture_universal: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture_universal: weights must sum to 1");
  }
  const bool binary = std::holds_alternative<BernoulliFamily>(family);
  for (const auto& model : grid) {
    if (std::holds_alternative<BernoulliModel>(model) != binary) {
      throw std::invalid_argument("mixture_universal: grid model family does not match the null");
    }
  }
}

}  // namespace

void validate(const NullFamily& family) {
  if (const auto* b = std::get_if<BernoulliFamily>(&family)) {
    if (!(b->lo >= 0.0 && b->hi <= 1.0 && b->lo <= b->hi)) {
      throw std::invalid_argument("BernoulliFamily: need 0 <= lo <= hi <= 1");
    }
    return;
  }
  const auto& g = std::get<GaussianMeanFamily>(family);
  if (!(g.sigma > 0.0) || !std::isfinite(g.sigma)) {
    throw std::invalid_argument("GaussianMeanFamily: sigma must be positive");
  }
  if (!(g.lo <= g.hi) || !std::isfinite(g.lo) || !std::isfinite(g.hi)) {
    throw std::invalid_argument("GaussianMeanFamily: need finite lo <= hi");
  }
}

std::string describe(const NullFamily& family) {
  std::ostringstream out;
  out.precision(17);
  if (const auto* b = std::get_if<BernoulliFamily>(&family)) {
    out << "bernoulli[" << b->lo << "," << b->hi << "]";
  } else {
    const auto& g = std::get<GaussianMeanFamily>(family);
    out << "gaussian[" << g.lo << "," << g.hi << "]sd=" << g.sigma;
  }
  return out.str();
}

std::string describe(const Plugin& plugin) {
  if (const auto* f = std::get_if<FixedPlugin>(&plugin)) return "fixed(" + describe(f->model) + ")";
  if (std::holds_alternative<KtPlugin>(plugin)) return "kt";
  const auto& g = std::get<GaussianRunningMeanPlugin>(plugin);
  std::ostringstream out;
  out.precision(17);
  out << "running_mean(sd=" << g.sigma << ",m0=" << g.prior_mean << ",n0=" << g.prior_count << ")";
  return out.str();
}

PointModel null_mle(const NullFamily& family, std::span<const double> data) {
  check_data(family, data, "null_mle");
  NullFit fit(family);
  for (double x : data) fit.add(x);
  return fit.mle();
}

double max_log_likelihood(const NullFamily& family, std::span<const double> data) {
  check_data(family, data, "max_log_likelihood");
  NullFit fit(family);
  for (double x : data) fit.add(x);
  return fit.max_log_likelihood();
}

std::vector<double> plugin_log_predictive(const Plugin& plugin, std::span<const double> data) {
  std::vector<double> out(data.size());
  if (const auto* f = std::get_if<FixedPlugin>(&plugin)) {
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = log_density(f->model, data[i]);
    return out;
  }
  if (std::holds_alternative<KtPlugin>(plugin)) {
    require_binary(data, "kt plugin");
    double ones = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double n = static_cast<double>(i);
      const double count = data[i] == 1.0 ? ones : n - ones;
      out[i] = std::log((count + 0.5) / (n + 1.0));
      ones += data[i];
    }
    return out;
  }
  const auto& g = std::get<GaussianRunningMeanPlugin>(plugin);
  if (!(g.sigma > 0.0) || !(g.prior_count > 0.0)) {
    throw std::invalid_argument("GaussianRunningMeanPlugin: sigma and prior_count must be positive");
  }
  require_finite(data, "running-mean plugin");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double center =
        (g.prior_mean * g.prior_count + sum) / (g.prior_count + static_cast<double>(i));
    out[i] = log_density(GaussianModel{center, g.sigma}, data[i]);
    sum += data[i];
  }
  return out;
}

UniversalResult universal_inference(const NullFamily& family, const Plugin& plugin,
                                    std::span<const double> data) {
  check_data(family, data, "universal_inference");
  const bool binary = std::holds_alternative<BernoulliFamily>(family);
  bool matches = false;
  if (const auto* f = std::get_if<FixedPlugin>(&plugin)) {
    matches = std::holds_alternative<BernoulliModel>(f->model) == binary;
  } else {
    matches = std::holds_alternative<KtPlugin>(plugin) == binary;
  }
  if (!matches) {
    throw std::invalid_argument("universal_inference: plugin " + describe(plugin) +
                                " does not match the null family " + describe(family));
  }
  const auto log_q = plugin_log_predictive(plugin, data);
  NullFit fit(family);
  std::vector<double> log_u(data.size());
  double log_num = 0.0;
  double previous = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    log_num += log_q[t];
    fit.add(data[t]);
    previous = absorb(previous, log_ratio(log_num, fit.max_log_likelihood()));
    log_u[t] = previous;
  }
  auto trace = EProcessTrace::from_log_capital(log_u);
  const double value = trace.final_capital();
  return UniversalResult{EValueSample(value, "universal_inference"), std::move(trace)};
}

EProcessTrace mixture_universal_trace(const NullFamily& family, std::span<const PointModel> grid,
                                      std::span<const double> weights,
                                      std::span<const double> data) {
  check_data(family, data, "mixture_universal");
  check_grid(family, grid, weights);
  const std::size_t k = grid.size();
  std::vector<double> log_lik(k);
  for (std::size_t j = 0; j < k; ++j) log_lik[j] = weights[j] > 0.0 ? std::log(weights[j]) : -kInfinity;
  std::vector<double> unit(k, 1.0);
  NullFit fit(family);
  std::vector<double> log_v(data.size());
  double previous = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    for (std::size_t j = 0; j < k; ++j) log_lik[j] += log_density(grid[j], data[t]);
    fit.add(data[t]);
    const double shift = simd::max_value(log_lik);
    const double log_num =
        shift == -kInfinity ? -kInfinity : shift + std::log(simd::sum_exp_shifted(log_lik, unit, shift));
    previous = absorb(previous, log_ratio(log_num, fit.max_log_likelihood()));
    log_v[t] = previous;
  }
  return EProcessTrace::from_log_capital(log_v);
}

EValueSample mixture_universal(const NullFamily& family, std::span<const PointModel> grid,
                               std::span<const double> weights, std::span<const double> data) {
  check_data(family, data, "mixture_universal");
  check_grid(family, grid, weights);
  // Null MLE fitted once on the whole sample.
  NullFit fit(family);
  for (double x : data) fit.add(x);
  const double log_den = fit.max_log_likelihood();
  std::vector<double> terms(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double log_lik = weights[j] > 0.0 ? std::log(weights[j]) : -kInfinity;
    for (double x : data) log_lik += log_density(grid[j], x);
    terms[j] = log_lik;
  }
  const double shift = simd::max_value(terms);
  std::vector<double> unit(grid.size(), 1.0);
  const double log_num =
      shift == -kInfinity ? -kInfinity : shift + std::log(simd::sum_exp_shifted(terms, unit, shift));
  return EValueSample(std::exp(log_ratio(log_num, log_den)), "mixture_universal");
}

}  // namespace evlab::families
