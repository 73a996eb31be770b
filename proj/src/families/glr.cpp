#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/numerics.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab::families {
namespace {

constexpr std::size_t kGridPoints = 65;
constexpr double kGoldenTol = 1e-8;

struct Stats {
  bool binary = false;
  double n = 0.0;
  double ones = 0.0;  // Bernoulli
  double mean = 0.0;  // Gaussian
  double sigma = 1.0;
};

Stats summarize(const GlrFamily& family, std::span<const double> data) {
  Stats s;
  s.n = static_cast<double>(data.size());
  if (std::holds_alternative<BernoulliParameter>(family)) {
    s.binary = true;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i] != 0.0 && data[i] != 1.0) {
        throw DataError("glr: observation " + std::to_string(i + 1) + " is not binary");
      }
      s.ones += data[i];
    }
    return s;
  }
  s.sigma = std::get<GaussianMeanParameter>(family).sigma;
  if (!(s.sigma > 0.0)) throw std::invalid_argument("glr: sigma must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw DataError("glr: observation " + std::to_string(i + 1) + " is not finite");
    }
    sum += data[i];
  }
  s.mean = data.empty() ? 0.0 : sum / s.n;
  return s;
}

// Log-likelihood up to a parameter-free constant. Gaussian: -n (xbar - mu)^2 / (2 sigma^2).
double log_lik(const Stats& s, double param) {
  if (s.binary) {
    const double zeros = s.n - s.ones;
    const double a = s.ones > 0.0 ? s.ones * std::log(param) : 0.0;
    const double b = zeros > 0.0 ? zeros * std::log1p(-param) : 0.0;
    return a + b;
  }
  const double gap = s.mean - param;
  return -s.n * gap * gap / (2.0 * s.sigma * s.sigma);
}

void log_lik_grid(const Stats& s, std::span<const double> params, std::span<double> out) {
  if (s.binary) {
    simd::bernoulli_loglik_grid(params, s.ones, s.n - s.ones, out);
  } else {
    simd::gaussian_loglik_grid(params, s.n, s.n * s.mean, s.n * s.mean * s.mean,
                               1.0 / (2.0 * s.sigma * s.sigma), out);
  }
}

void check_set(const ParamSet& set, const Stats& s) {
  const auto in_range = [&](double v) { return s.binary ? (v >= 0.0 && v <= 1.0) : std::isfinite(v); };
  if (set.is_interval()) {
    if (!in_range(set.lo()) || !in_range(set.hi())) {
      throw std::invalid_argument("glr: parameter interval outside the family's range");
    }
  } else {
    for (double p : set.points()) {
      if (!in_range(p)) throw std::invalid_argument("glr: grid point outside the family's range");
    }
  }
}

}  // namespace

ParamSet ParamSet::interval(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("ParamSet::interval: need lo <= hi");
  ParamSet set;
  set.interval_ = true;
  set.lo_ = lo;
  set.hi_ = hi;
  return set;
}

ParamSet ParamSet::grid(std::vector<double> points) {
  if (points.empty()) throw std::invalid_argument("ParamSet::grid: empty parameter set");
  ParamSet set;
  set.points_ = std::move(points);
  return set;
}

std::string ParamSet::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (interval_) {
    out << "[" << lo_ << "," << hi_ << "]";
  } else {
    out << "{";
    for (std::size_t i = 0; i < points_.size(); ++i) out << (i ? "," : "") << points_[i];
    out << "}";
  }
  return out.str();
}

Supremum sup_log_likelihood(const ParamSet& set, const GlrFamily& family,
                            std::span<const double> data) {
  const Stats s = summarize(family, data);
  check_set(set, s);

  std::vector<double> params;
  if (set.is_interval()) {
    if (set.lo() == set.hi()) return Supremum{set.lo(), log_lik(s, set.lo())};
    params.resize(kGridPoints);
    const double step = (set.hi() - set.lo()) / static_cast<double>(kGridPoints - 1);
    for (std::size_t j = 0; j < kGridPoints; ++j) params[j] = set.lo() + step * static_cast<double>(j);
    params.back() = set.hi();
  } else {
    params = set.points();
  }
  std::vector<double> values(params.size());
  log_lik_grid(s, params, values);
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  Supremum sup{params[best], values[best]};
  if (!set.is_interval()) return sup;

  const double lo = params[best == 0 ? 0 : best - 1];
  const double hi = params[std::min(best + 1, params.size() - 1)];
  const auto objective = [&](double p) { return log_lik(s, p); };
  const double refined = numerics::golden_section_maximize(objective, lo, hi, kGoldenTol);
  const double refined_value = log_lik(s, refined);
  if (refined_value > sup.log_likelihood) sup = Supremum{refined, refined_value};
  return sup;
}

double log_glr(const ParamSet& null_set, const ParamSet& alt_set, const GlrFamily& family,
               std::span<const double> data) {
  if (data.empty()) return 0.0;
  const double num = sup_log_likelihood(alt_set, family, data).log_likelihood;
  const double den = sup_log_likelihood(null_set, family, data).log_likelihood;
  if (den == -kInfinity) return num == -kInfinity ? 0.0 : kInfinity;
  return num - den;
}

double glr(const ParamSet& null_set, const ParamSet& alt_set, const GlrFamily& family,
           std::span<const double> data) {
  return std::exp(log_glr(null_set, alt_set, family, data));
}

}  // namespace evlab::families
