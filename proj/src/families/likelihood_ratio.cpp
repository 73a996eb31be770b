#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab::families {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void reject_nan(std::span<const double> data, const char* who) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::isnan(data[i])) {
      throw DataError(std::string(who) + ": NaN observation at index " + std::to_string(i + 1));
    }
  }
}

bool all_binary(std::span<const double> data) {
  for (double x : data) {
    if (x != 0.0 && x != 1.0) return false;
  }
  return true;
}

// log(q/p) for one observation with the support conventions of lr_eprocess.
double log_ratio(double log_q, double log_p, std::size_t index) {
  if (log_p == -kInfinity) {
    if (log_q == -kInfinity) {
      throw DataError("lr_eprocess: observation " + std::to_string(index) +
                      " lies outside the support of both models");
    }
    return kInfinity;
  }
  return log_q - log_p;
}

}  // namespace

BernoulliModel bernoulli(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("bernoulli: theta must lie in [0, 1]");
  }
  return BernoulliModel{theta};
}

GaussianModel gaussian(double mean, double sd) {
  if (!std::isfinite(mean)) throw std::invalid_argument("gaussian: mean must be finite");
  if (!(sd > 0.0) || !std::isfinite(sd)) throw std::invalid_argument("gaussian: sd must be positive");
  return GaussianModel{mean, sd};
}

double log_density(const PointModel& model, double x) {
  if (std::isnan(x)) throw DataError("log_density: NaN observation");
  if (const auto* b = std::get_if<BernoulliModel>(&model)) {
    if (x == 1.0) return std::log(b->theta);
    if (x == 0.0) return std::log1p(-b->theta);
    return -kInfinity;
  }
  const auto& g = std::get<GaussianModel>(model);
  const double z = (x - g.mean) / g.sd;
  return -0.5 * z * z - std::log(g.sd) - kHalfLog2Pi;
}

std::string describe(const PointModel& model) {
  std::ostringstream out;
  out.precision(17);
  if (const auto* b = std::get_if<BernoulliModel>(&model)) {
    out << "bernoulli:" << b->theta;
  } else {
    const auto& g = std::get<GaussianModel>(model);
    out << "gaussian:" << g.mean << "," << g.sd;
  }
  return out.str();
}

EProcessTrace lr_eprocess(const PointModel& null, const PointModel& alt,
                          std::span<const double> data) {
  reject_nan(data, "lr_eprocess");
  if (null.index() != alt.index()) {
    throw std::invalid_argument("lr_eprocess: null and alternative belong to different families");
  }
  std::vector<double> log_factors(data.size());

  if (const auto* p0 = std::get_if<BernoulliModel>(&null)) {
    const auto& q = std::get<BernoulliModel>(alt);
    if (all_binary(data) && p0->theta > 0.0 && p0->theta < 1.0) {
      simd::select_binary(data, std::log(q.theta / p0->theta),
                          std::log1p(-q.theta) - std::log1p(-p0->theta), log_factors);
      return EProcessTrace::from_log_factors(log_factors);
    }
  } else {
    const auto& p = std::get<GaussianModel>(null);
    const auto& q = std::get<GaussianModel>(alt);
    if (p.sd == q.sd) {
      // log q/p = (mu1 - mu0) x / s^2 - (mu1^2 - mu0^2) / (2 s^2)
      const double var = p.sd * p.sd;
      simd::affine(data, (q.mean - p.mean) / var, -(q.mean * q.mean - p.mean * p.mean) / (2.0 * var),
                   log_factors);
      return EProcessTrace::from_log_factors(log_factors);
    }
  }

  for (std::size_t i = 0; i < data.size(); ++i) {
    log_factors[i] = log_ratio(log_density(alt, data[i]), log_density(null, data[i]), i + 1);
  }
  return EProcessTrace::from_log_factors(log_factors);
}

EValueSample gaussian_evar(double lambda, double sigma, double x) {
  if (std::isnan(lambda) || std::isnan(x)) throw DataError("gaussian_evar: NaN input");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_evar: sigma must be positive");
  return EValueSample(std::exp(lambda * x - 0.5 * lambda * lambda * sigma * sigma), "gaussian_evar");
}

EProcessTrace gaussian_eprocess(double lambda, double sigma, std::span<const double> data) {
  reject_nan(data, "gaussian_eprocess");
  if (std::isnan(lambda)) throw std::invalid_argument("gaussian_eprocess: NaN lambda");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_eprocess: sigma must be positive");
  std::vector<double> log_factors(data.size());
  simd::affine(data, lambda, -0.5 * lambda * lambda * sigma * sigma, log_factors);
  return EProcessTrace::from_log_factors(log_factors);
}

EProcessTrace gaussian_mixture_eprocess(std::span<const double> lambdas,
                                        std::span<const double> weights, double sigma,
                                        std::span<const double> data) {
  reject_nan(data, "gaussian_mixture_eprocess");
  if (lambdas.empty() || lambdas.size() != weights.size()) {
    throw std::invalid_argument("gaussian_mixture_eprocess: grid and weights must match and be nonempty");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_mixture_eprocess: sigma must be positive");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("gaussian_mixture_eprocess: negative weight");
    total += w;
  }
  if (total > 1.0 + 1e-12) throw std::invalid_argument("gaussian_mixture_eprocess: weights exceed 1");

  // log E_j(t) = lambda_j S_t - t lambda_j^2 sigma^2 / 2, mixed in log space.
  const std::size_t grid = lambdas.size();
  std::vector<double> slope(lambdas.begin(), lambdas.end());
  std::vector<double> drift(grid);
  for (std::size_t j = 0; j < grid; ++j) drift[j] = -0.5 * lambdas[j] * lambdas[j] * sigma * sigma;
  std::vector<double> log_e(grid);
  std::vector<double> log_capital(data.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    sum += data[t];
    const double steps = static_cast<double>(t + 1);
    for (std::size_t j = 0; j < grid; ++j) log_e[j] = slope[j] * sum + drift[j] * steps;
    const double shift = simd::max_value(log_e);
    log_capital[t] = shift + std::log(simd::sum_exp_shifted(log_e, weights, shift));
  }
  return EProcessTrace::from_log_capital(log_capital);
}

}  // namespace evlab::families
