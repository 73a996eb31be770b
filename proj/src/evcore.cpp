#include "evlab/evcore.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab {
namespace {

enum class Absorb { none, zero, infinite };

// Running sum of log factors with zero/infinity absorption. Writes the log
// capital in place of the log factors.
void accumulate_in_place(std::span<double> logs) {
  Absorb state = Absorb::none;
  double sum = 0.0;
  for (double& v : logs) {
    if (state == Absorb::none) {
      if (v == -kInfinity) {
        state = Absorb::zero;
      } else if (v == kInfinity) {
        state = Absorb::infinite;
      } else {
        sum += v;
      }
    }
    switch (state) {
      case Absorb::none: v = sum; break;
      case Absorb::zero: v = -kInfinity; break;
      case Absorb::infinite: v = kInfinity; break;
    }
  }
}

void check_index(std::size_t t, std::size_t size, const char* what) {
  if (t == 0 || t > size) {
    throw std::out_of_range(std::string(what) + ": time index out of range");
  }
}

}  // namespace

EValueSample::EValueSample(double value, std::string label)
    : value_(value), label_(std::move(label)) {
  if (std::isnan(value) || value < 0.0) {
    throw std::invalid_argument("EValueSample: value must be nonnegative, got " +
                                std::to_string(value));
  }
}

EProcessTrace EProcessTrace::from_factors(std::span<const double> factors) {
  for (double f : factors) {
    if (std::isnan(f) || f < 0.0) {
      throw std::invalid_argument("EProcessTrace: factors must be nonnegative and not NaN");
    }
  }
  EProcessTrace trace;
  trace.factors_.assign(factors.begin(), factors.end());
  trace.log_capital_.resize(factors.size());
  simd::vlog(factors, trace.log_capital_);
  accumulate_in_place(trace.log_capital_);
  trace.capital_.resize(factors.size());
  simd::vexp(trace.log_capital_, trace.capital_);
  return trace;
}

EProcessTrace EProcessTrace::from_log_factors(std::span<const double> log_factors) {
  for (double lf : log_factors) {
    if (std::isnan(lf)) throw std::invalid_argument("EProcessTrace: NaN log factor");
  }
  EProcessTrace trace;
  trace.factors_.resize(log_factors.size());
  simd::vexp(log_factors, trace.factors_);
  trace.log_capital_.assign(log_factors.begin(), log_factors.end());
  accumulate_in_place(trace.log_capital_);
  trace.capital_.resize(log_factors.size());
  simd::vexp(trace.log_capital_, trace.capital_);
  return trace;
}

EProcessTrace EProcessTrace::from_log_capital(std::span<const double> log_capital) {
  EProcessTrace trace;
  const std::size_t n = log_capital.size();
  trace.log_capital_.assign(log_capital.begin(), log_capital.end());
  trace.factors_.resize(n);
  double prev = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double cur = log_capital[t];
    if (std::isnan(cur)) throw std::invalid_argument("EProcessTrace: NaN log capital");
    if (std::isinf(prev) && cur != prev) {
      throw std::invalid_argument("EProcessTrace: log capital left an absorbing state at t=" +
                                  std::to_string(t + 1));
    }
    if (std::isinf(prev)) {
      trace.factors_[t] = prev > 0 ? kInfinity : 0.0;
    } else {
      trace.factors_[t] = std::isinf(cur) ? (cur > 0 ? kInfinity : 0.0) : std::exp(cur - prev);
    }
    prev = cur;
  }
  trace.capital_.resize(n);
  simd::vexp(trace.log_capital_, trace.capital_);
  return trace;
}

double EProcessTrace::capital_at(std::size_t t) const {
  check_index(t, size(), "capital_at");
  return capital_[t - 1];
}

double EProcessTrace::factor_at(std::size_t t) const {
  check_index(t, size(), "factor_at");
  return factors_[t - 1];
}

void StopContext::check(std::size_t i, const char* what) const {
  if (i == 0) throw std::out_of_range(std::string(what) + ": indices are 1-based");
  if (i > t_) {
    throw PrefixViolation(std::string(what) + "(" + std::to_string(i) +
                          ") read beyond the revealed prefix of length " + std::to_string(t_));
  }
}

double StopContext::x(std::size_t i) const {
  check(i, "x");
  if (i > data_.size()) throw std::out_of_range("x: no data supplied for this index");
  return data_[i - 1];
}

double StopContext::factor(std::size_t i) const {
  check(i, "factor");
  return trace_.factor_at(i);
}

double StopContext::capital(std::size_t i) const {
  check(i, "capital");
  return trace_.capital_at(i);
}

StoppingRule StoppingRule::fixed_horizon(std::size_t n) {
  if (n == 0) throw std::invalid_argument("fixed_horizon: n must be positive");
  return StoppingRule(Kind::fixed_horizon, n);
}

StoppingRule StoppingRule::first_crossing(double threshold, std::size_t horizon_cap) {
  if (horizon_cap == 0) throw std::invalid_argument("first_crossing: horizon_cap must be positive");
  if (!(threshold > 0.0)) throw std::invalid_argument("first_crossing: threshold must be positive");
  StoppingRule rule(Kind::first_crossing, horizon_cap);
  rule.threshold_ = threshold;
  return rule;
}

StoppingRule StoppingRule::predicate(Predicate stop, std::size_t horizon_cap, std::string label) {
  if (horizon_cap == 0) throw std::invalid_argument("predicate: horizon_cap must be positive");
  if (!stop) throw std::invalid_argument("predicate: empty predicate");
  StoppingRule rule(Kind::predicate, horizon_cap);
  rule.stop_ = std::move(stop);
  rule.label_ = std::move(label);
  return rule;
}

std::string StoppingRule::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::fixed_horizon: out << "fixed:" << horizon_cap_; break;
    case Kind::first_crossing:
      out.precision(17);
      out << "crossing:" << threshold_ << "@" << horizon_cap_;
      break;
    case Kind::predicate: out << label_ << "@" << horizon_cap_; break;
  }
  return out.str();
}

std::size_t StoppingRule::stop_time(const EProcessTrace& trace,
                                    std::span<const double> data) const {
  if (horizon_cap_ > trace.size()) {
    throw std::invalid_argument("stop_time: horizon_cap " + std::to_string(horizon_cap_) +
                                " exceeds trace length " + std::to_string(trace.size()));
  }
  switch (kind_) {
    case Kind::fixed_horizon: return horizon_cap_;
    case Kind::first_crossing: {
      const auto log_capital = trace.log_capital();
      const double log_threshold = std::log(threshold_);
      for (std::size_t t = 0; t < horizon_cap_; ++t) {
        if (log_capital[t] >= log_threshold) return t + 1;
      }
      return horizon_cap_;
    }
    case Kind::predicate:
      for (std::size_t t = 1; t < horizon_cap_; ++t) {
        if (stop_(StopContext(t, trace, data))) return t;
      }
      return horizon_cap_;
  }
  return horizon_cap_;
}

FiniteSpace::FiniteSpace(std::vector<double> mass, std::vector<std::string> atoms)
    : mass_(std::move(mass)), atoms_(std::move(atoms)) {
  if (mass_.empty()) throw std::invalid_argument("FiniteSpace: no atoms");
  if (!atoms_.empty() && atoms_.size() != mass_.size()) {
    throw std::invalid_argument("FiniteSpace: atom labels and masses differ in length");
  }
  double total = 0.0;
  for (double m : mass_) {
    if (!(m >= 0.0) || std::isinf(m)) throw std::invalid_argument("FiniteSpace: bad mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("FiniteSpace: masses sum to " + std::to_string(total));
  }
}

FiniteSpace FiniteSpace::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("FiniteSpace::uniform: n must be positive");
  return FiniteSpace(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double FiniteSpace::expectation(std::span<const double> values) const {
  if (values.size() != mass_.size()) {
    throw std::invalid_argument("FiniteSpace::expectation: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    if (mass_[i] > 0.0) total += mass_[i] * values[i];
  }
  return total;
}

EValueSample ev_product(std::span<const EValueSample> values) {
  double log_sum = 0.0;
  for (const auto& e : values) {
    // First absorbing value wins, matching EProcessTrace.
    if (e.value() == 0.0) return EValueSample(0.0, "product");
    if (e.is_infinite()) return EValueSample(kInfinity, "product");
    log_sum += std::log(e.value());
  }
  return EValueSample(std::exp(log_sum), "product");
}

EValueSample ev_convex_mix(std::span<const EValueSample> values, std::span<const double> weights) {
  if (values.size() != weights.size()) {
    throw std::invalid_argument("ev_convex_mix: values and weights differ in length");
  }
  double total_weight = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || std::isinf(w)) {
      throw std::invalid_argument("ev_convex_mix: weights must be finite and nonnegative");
    }
    total_weight += w;
  }
  if (total_weight > 1.0 + 1e-12) {
    throw std::invalid_argument("ev_convex_mix: weights sum to " + std::to_string(total_weight) +
                                " > 1");
  }
  double mix = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (weights[k] > 0.0) mix += weights[k] * values[k].value();
  }
  return EValueSample(mix, "convex_mix");
}

double e_to_p(const EValueSample& e) {
  if (e.value() <= 1.0) return 1.0;
  if (e.is_infinite()) return 0.0;
  return 1.0 / e.value();
}

std::optional<std::size_t> first_crossing(const EProcessTrace& trace, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("first_crossing: alpha must lie in (0, 1)");
  }
  if (trace.empty()) throw std::invalid_argument("first_crossing: empty trace");
  const double log_threshold = -std::log(alpha);
  const auto log_capital = trace.log_capital();
  for (std::size_t t = 0; t < log_capital.size(); ++t) {
    if (log_capital[t] >= log_threshold) return t + 1;
  }
  return std::nullopt;
}

EValueSample stopped_value(const EProcessTrace& trace, const StoppingRule& rule,
                           std::span<const double> data) {
  const std::size_t tau = rule.stop_time(trace, data);
  return EValueSample(trace.capital_at(tau), "stopped@" + std::to_string(tau));
}

FiniteSpace dominating_lr(const FiniteSpace& space, std::span<const double> e) {
  if (e.size() != space.size()) {
    throw std::invalid_argument("dominating_lr: e-table and space differ in size");
  }
  for (double v : e) {
    if (!(v >= 0.0) || std::isinf(v)) {
      throw std::invalid_argument("dominating_lr: e-table entries must be finite and nonnegative");
    }
  }
  const double mean = space.expectation(e);
  if (mean > 1.0 + 1e-9) {
    throw std::invalid_argument("dominating_lr: E_p[e] = " + std::to_string(mean) +
                                " exceeds 1; not an e-variable for p");
  }
  if (mean == 0.0) return space;
  const auto p = space.mass();
  std::vector<double> q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[i] > 0.0 ? p[i] * e[i] / mean : 0.0;
  return FiniteSpace(std::move(q), space.atoms());
}

}  // namespace evlab
