// Right-Haar t-test Bayes factor.
//
// With sufficient statistics (n, S1, S2), s = sqrt(S2 / n) and the change of
// variables sigma = s * exp(u), both scale integrals become integrals over u of
//
//   exp(-n u - (n/2) v^2 + b v - c),   v = exp(-u),
//
// with b = delta * S1 / s and c = n delta^2 / 2 for the alternative component
// at delta, and b = c = 0 for the null. The common factor s^-n (2 pi)^-n/2
// cancels in the ratio. u ranges over [-ln 1e4, ln 1e4].

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab::families {
namespace {

struct Component {
  double b;
  double c;
  double peak_u;
  double peak_log;  // maximum of the log integrand over v > 0, used as shift
};

Component make_component(double n, double b, double c) {
  const double v = (b + std::sqrt(b * b + 4.0 * n * n)) / (2.0 * n);
  const double peak_log = n * std::log(v) - 0.5 * n * v * v + b * v - c;
  return Component{b, c, -std::log(v), peak_log};
}

}  // namespace

TTestPrior::TTestPrior(std::vector<double> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty() || support_.size() != weights_.size()) {
    throw std::invalid_argument("TTestPrior: support and weights must match and be nonempty");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < support_.size(); ++j) {
    if (!std::isfinite(support_[j])) throw std::invalid_argument("TTestPrior: non-finite effect size");
    if (!(weights_[j] >= 0.0)) throw std::invalid_argument("TTestPrior: negative weight");
    total += weights_[j];
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("TTestPrior: weights must sum to 1");
}

TTestPrior TTestPrior::point(double delta) { return TTestPrior({delta}, {1.0}); }

std::string TTestPrior::describe() const {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t j = 0; j < support_.size(); ++j) {
    out << (j ? "," : "") << support_[j] << "@" << weights_[j];
  }
  return out.str();
}

namespace {

// Evaluates log B for successive sufficient statistics, reusing its scratch
// buffers between calls.
class BayesFactor {
 public:
  BayesFactor(const TTestPrior& prior, const numerics::QuadratureOptions& options)
      : prior_(prior), options_(options) {
    terms_.resize(prior.support().size());
    unit_.assign(prior.support().size(), 1.0);
    integrand_ = [this](std::span<const double> u, std::span<double> values) {
      const std::size_t m = u.size();
      neg_u_.resize(m);
      v_.resize(m);
      for (std::size_t k = 0; k < m; ++k) neg_u_[k] = -u[k];
      simd::vexp(neg_u_, v_);
      for (std::size_t c = 0; c < comps_.size(); ++c) {
        const std::span<double> out = values.subspan(c * m, m);
        simd::scale_log_integrand(u, v_, n_, n_, comps_[c].b, comps_[c].c + comps_[c].peak_log, out);
        simd::vexp(out, out);
      }
    };
  }

  double operator()(double n, double sum, double sum_sq) {
    if (!(n >= 1.0)) throw std::invalid_argument("ttest_log_bayes_factor: need at least one observation");
    if (!std::isfinite(sum) || !std::isfinite(sum_sq) || sum_sq < 0.0) {
      throw DataError("ttest_log_bayes_factor: non-finite sufficient statistics");
    }
    if (sum_sq == 0.0) return 0.0;

    n_ = n;
    const double rms = std::sqrt(sum_sq / n);
    const double r = sum / rms;  // in [-n, n]
    const auto& deltas = prior_.support();
    const std::size_t atoms = deltas.size();

    comps_.clear();
    comps_.push_back(make_component(n, 0.0, 0.0));
    for (double delta : deltas) comps_.push_back(make_component(n, delta * r, 0.5 * n * delta * delta));

    // The integrand is near-Gaussian in u around each peak with standard
    // deviation about h; panels of width 2h there resolve it in one pass.
    const double h = 1.0 / std::sqrt(2.0 * n);
    double lo_peak = comps_[0].peak_u;
    double hi_peak = comps_[0].peak_u;
    for (const auto& c : comps_) {
      lo_peak = std::min(lo_peak, c.peak_u);
      hi_peak = std::max(hi_peak, c.peak_u);
    }
    breaks_.assign(1, -kScaleWindowLog);
    const auto add_break = [&](double p) {
      if (p > breaks_.back() + 1e-9 && p < kScaleWindowLog - 1e-9) breaks_.push_back(p);
    };
    const double start = lo_peak - 8.0 * h;
    const double span = hi_peak - lo_peak + 16.0 * h;
    const int inner = static_cast<int>(std::clamp(std::ceil(span / (2.0 * h)), 1.0, 64.0));
    add_break(start);
    for (int k = 1; k <= inner; ++k) add_break(start + span * k / inner);
    breaks_.push_back(kScaleWindowLog);

    const auto result = numerics::integrate_batched(integrand_, comps_.size(), breaks_, options_, &workspace_);
    if (!result.converged) {
      std::ostringstream msg;
      msg << "ttest: scale integrals did not converge (n=" << n << ", r=" << r
          << ", panels=" << result.panels << ")";
      throw NumericalError(msg.str());
    }

    const double log_den = std::log(result.values[0]) + comps_[0].peak_log;
    const auto& weights = prior_.weights();
    for (std::size_t j = 0; j < atoms; ++j) {
      terms_[j] = weights[j] > 0.0
                      ? std::log(weights[j]) + std::log(result.values[j + 1]) + comps_[j + 1].peak_log
                      : -kInfinity;
    }
    const double shift = simd::max_value(terms_);
    if (shift == -kInfinity) return -kInfinity;
    return shift + std::log(simd::sum_exp_shifted(terms_, unit_, shift)) - log_den;
  }

 private:
  const TTestPrior& prior_;
  numerics::QuadratureOptions options_;
  numerics::BatchIntegrand integrand_;
  numerics::QuadratureWorkspace workspace_;
  double n_ = 1.0;
  std::vector<Component> comps_;
  std::vector<double> breaks_;
  std::vector<double> neg_u_;
  std::vector<double> v_;
  std::vector<double> terms_;
  std::vector<double> unit_;
};

}  // namespace

double ttest_log_bayes_factor(const TTestPrior& prior, double n, double sum, double sum_sq,
                              const numerics::QuadratureOptions& options) {
  return BayesFactor(prior, options)(n, sum, sum_sq);
}

EProcessTrace ttest_eprocess(const TTestPrior& prior, std::span<const double> data,
                             const numerics::QuadratureOptions& options) {
  BayesFactor bayes_factor(prior, options);
  std::vector<double> log_b(data.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!std::isfinite(data[t])) {
      throw DataError("ttest_eprocess: observation " + std::to_string(t + 1) + " is not finite");
    }
    sum += data[t];
    sum_sq += data[t] * data[t];
    log_b[t] = bayes_factor(static_cast<double>(t + 1), sum, sum_sq);
  }
  return EProcessTrace::from_log_capital(log_b);
}

}  // namespace evlab::families
