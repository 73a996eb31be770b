#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab::families {
namespace {

// Per-trace betting state. next() is called before observe(x_t), so the bet
// for round t can only see x_1..x_{t-1}.
class Bettor {
 public:
  Bettor(const BoundedMeanNull& null, const LambdaStrategy& strategy)
      : mu_(null.mu()), strategy_(strategy) {
    if (strategy.kind() == LambdaStrategy::Kind::grid_mixture) {
      log_wealth_.assign(strategy.grid().size(), 0.0);
      for (std::size_t j = 0; j < log_wealth_.size(); ++j) {
        log_wealth_[j] = std::log(strategy.weights()[j]);
      }
    }
  }

  double next() {
    switch (strategy_.kind()) {
      case LambdaStrategy::Kind::fixed: return strategy_.lambda();
      case LambdaStrategy::Kind::grid_mixture: {
        const double shift = simd::max_value(log_wealth_);
        if (shift == -kInfinity) return 0.0;
        double num = 0.0;
        double den = 0.0;
        const auto& grid = strategy_.grid();
        for (std::size_t j = 0; j < grid.size(); ++j) {
          const double w = std::exp(log_wealth_[j] - shift);
          num += w * grid[j];
          den += w;
        }
        return num / den;
      }
      case LambdaStrategy::Kind::agrapa: {
        // Regularized running estimates: one pseudo-observation at 1/2 for
        // the mean, variance 1/4 for the spread.
        const double count = static_cast<double>(seen_) + 1.0;
        const double mean = (0.5 + sum_) / count;
        const double var = (0.25 + sq_dev_) / count;
        const double gap = mean - mu_;
        const double raw = gap / (var + gap * gap);
        return std::clamp(raw, -0.5 / (1.0 - mu_), 0.5 / mu_);
      }
    }
    return 0.0;
  }

  void observe(double x) {
    switch (strategy_.kind()) {
      case LambdaStrategy::Kind::fixed: break;
      case LambdaStrategy::Kind::grid_mixture: {
        const auto& grid = strategy_.grid();
        for (std::size_t j = 0; j < grid.size(); ++j) {
          log_wealth_[j] += std::log(1.0 + grid[j] * (x - mu_));
        }
        break;
      }
      case LambdaStrategy::Kind::agrapa: {
        ++seen_;
        sum_ += x;
        const double mean = (0.5 + sum_) / (static_cast<double>(seen_) + 1.0);
        sq_dev_ += (x - mean) * (x - mean);
        break;
      }
    }
  }

 private:
  double mu_;
  const LambdaStrategy& strategy_;
  std::vector<double> log_wealth_;
  std::size_t seen_ = 0;
  double sum_ = 0.0;
  double sq_dev_ = 0.0;
};

}  // namespace

BoundedMeanNull::BoundedMeanNull(double mu) : mu_(mu) {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw std::invalid_argument("BoundedMeanNull: mu must lie strictly inside (0, 1)");
  }
}

LambdaStrategy LambdaStrategy::fixed(double lambda) {
  if (!std::isfinite(lambda)) throw std::invalid_argument("LambdaStrategy::fixed: lambda must be finite");
  LambdaStrategy s(Kind::fixed);
  s.lambda_ = lambda;
  return s;
}

LambdaStrategy LambdaStrategy::grid_mixture(std::vector<double> lambdas, std::vector<double> weights) {
  if (lambdas.empty() || lambdas.size() != weights.size()) {
    throw std::invalid_argument("LambdaStrategy::grid_mixture: grid and weights must match and be nonempty");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("LambdaStrategy::grid_mixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("LambdaStrategy::grid_mixture: weights must sum to 1");
  }
  LambdaStrategy s(Kind::grid_mixture);
  s.grid_ = std::move(lambdas);
  s.weights_ = std::move(weights);
  return s;
}

LambdaStrategy LambdaStrategy::agrapa() { return LambdaStrategy(Kind::agrapa); }

std::string LambdaStrategy::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case Kind::fixed: out << "fixed:" << lambda_; break;
    case Kind::grid_mixture: out << "grid:" << grid_.size(); break;
    case Kind::agrapa: out << "agrapa"; break;
  }
  return out.str();
}

std::vector<double> bounded_mean_lambdas(const BoundedMeanNull& null, const LambdaStrategy& strategy,
                                         std::span<const double> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(data[i] >= 0.0 && data[i] <= 1.0)) {
      throw DataError("bounded_mean_eprocess: observation " + std::to_string(i + 1) +
                      " is outside [0, 1]");
    }
  }
  if (strategy.kind() == LambdaStrategy::Kind::grid_mixture) {
    for (double l : strategy.grid()) {
      if (l < null.lambda_min() || l > null.lambda_max()) {
        throw std::logic_error("bounded_mean_eprocess: grid lambda outside the legal interval");
      }
    }
  }
  Bettor bettor(null, strategy);
  std::vector<double> lambdas(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double l = bettor.next();
    if (!(l >= null.lambda_min() && l <= null.lambda_max())) {
      throw std::logic_error("bounded_mean_eprocess: strategy " + strategy.describe() +
                             " emitted lambda " + std::to_string(l) + " outside [" +
                             std::to_string(null.lambda_min()) + ", " +
                             std::to_string(null.lambda_max()) + "]");
    }
    lambdas[t] = l;
    bettor.observe(data[t]);
  }
  return lambdas;
}

EProcessTrace bounded_mean_eprocess(const BoundedMeanNull& null, const LambdaStrategy& strategy,
                                    std::span<const double> data) {
  const auto lambdas = bounded_mean_lambdas(null, strategy, data);
  std::vector<double> factors(data.size());
  simd::bet_factors(data, lambdas, null.mu(), factors);
  // At the interval ends the factor is exactly zero in real arithmetic; FMA
  // rounding can leave a -1e-17 residue.
  for (double& f : factors) f = std::max(f, 0.0);
  return EProcessTrace::from_factors(factors);
}

}  // namespace evlab::families
