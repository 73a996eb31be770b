#pragma once
// Core algebra of e-values and e-processes.
//
// An e-value is a nonnegative statistic whose expectation under the null is at
// most one. An e-process is a sequence of them that stays valid at stopping
// times; the canonical construction is the running product of conditionally
// valid factors, K_t = B_1 * ... * B_t.
//
// Time indices in this API are 1-based: capital_at(1) is the capital after the
// first observation, and stop/crossing times are reported the same way.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A realized e-value. +infinity is a legal value (a likelihood ratio whose
/// null density vanishes at the observed point).
class EValueSample {
 public:
  /// Throws std::invalid_argument for negative or NaN values.
  explicit EValueSample(double value, std::string label = {});

  double value() const { return value_; }
  const std::string& label() const { return label_; }
  bool is_infinite() const { return value_ == kInfinity; }

  friend bool operator==(const EValueSample&, const EValueSample&) = default;

 private:
  double value_;
  std::string label_;
};

/// Capital process K_1..K_T with its per-step factors B_1..B_T.
///
/// Accumulation happens in natural-log space. Zero and +infinity are absorbing:
/// whichever of the two occurs first fixes the capital from then on.
class EProcessTrace {
 public:
  EProcessTrace() = default;

  static EProcessTrace from_factors(std::span<const double> factors);
  static EProcessTrace from_log_factors(std::span<const double> log_factors);
  /// For e-processes that are not running products of fixed factors (the
  /// universal-inference and compression processes). Factors are recovered as
  /// K_t / K_{t-1}. Throws std::invalid_argument if an absorbed state is left.
  static EProcessTrace from_log_capital(std::span<const double> log_capital);

  std::size_t size() const { return capital_.size(); }
  bool empty() const { return capital_.empty(); }

  std::span<const double> factors() const { return factors_; }
  std::span<const double> capital() const { return capital_; }
  std::span<const double> log_capital() const { return log_capital_; }

  double capital_at(std::size_t t) const;
  double factor_at(std::size_t t) const;
  /// K_T, or 1 for the empty trace (the empty product).
  double final_capital() const { return capital_.empty() ? 1.0 : capital_.back(); }
  double final_log_capital() const { return log_capital_.empty() ? 0.0 : log_capital_.back(); }

 private:
  std::vector<double> factors_;
  std::vector<double> capital_;
  std::vector<double> log_capital_;
};

/// Read-only view handed to predicate stopping rules at time t. Every accessor
/// refuses indices beyond t with PrefixViolation.
class StopContext {
 public:
  StopContext(std::size_t t, const EProcessTrace& trace, std::span<const double> data)
      : t_(t), trace_(trace), data_(data) {}

  std::size_t time() const { return t_; }
  double x(std::size_t i) const;
  double factor(std::size_t i) const;
  double capital(std::size_t i) const;

 private:
  void check(std::size_t i, const char* what) const;

  std::size_t t_;
  const EProcessTrace& trace_;
  std::span<const double> data_;
};

class StoppingRule {
 public:
  enum class Kind { fixed_horizon, first_crossing, predicate };
  using Predicate = std::function<bool(const StopContext&)>;

  static StoppingRule fixed_horizon(std::size_t n);
  /// Stops at the first t with log capital >= log threshold, else at horizon_cap.
  static StoppingRule first_crossing(double threshold, std::size_t horizon_cap);
  static StoppingRule predicate(Predicate stop, std::size_t horizon_cap,
                                std::string label = "predicate");

  Kind kind() const { return kind_; }
  std::size_t horizon_cap() const { return horizon_cap_; }
  double threshold() const { return threshold_; }
  std::string describe() const;

  /// Stop time in [1, horizon_cap]. Requires horizon_cap <= trace.size().
  std::size_t stop_time(const EProcessTrace& trace, std::span<const double> data = {}) const;

 private:
  StoppingRule(Kind kind, std::size_t cap) : kind_(kind), horizon_cap_(cap) {}

  Kind kind_;
  std::size_t horizon_cap_;
  double threshold_ = 0.0;
  Predicate stop_;
  std::string label_;
};

/// Probability mass function on a finite set of atoms.
class FiniteSpace {
 public:
  /// Masses must be nonnegative and sum to 1 within 1e-12.
  explicit FiniteSpace(std::vector<double> mass, std::vector<std::string> atoms = {});

  static FiniteSpace uniform(std::size_t n);

  std::size_t size() const { return mass_.size(); }
  std::span<const double> mass() const { return mass_; }
  const std::vector<std::string>& atoms() const { return atoms_; }

  /// sum_x p(x) * values(x)
  double expectation(std::span<const double> values) const;

 private:
  std::vector<double> mass_;
  std::vector<std::string> atoms_;
};

EValueSample ev_product(std::span<const EValueSample> values);

/// Convex combination; valid under arbitrary dependence between the inputs.
EValueSample ev_convex_mix(std::span<const EValueSample> values, std::span<const double> weights);

/// Markov conversion min(1, 1/e).
double e_to_p(const EValueSample& e);

/// Smallest t with log capital >= -log alpha.
std::optional<std::size_t> first_crossing(const EProcessTrace& trace, double alpha);

/// K_tau for the rule's stop time on this trace and data.
EValueSample stopped_value(const EProcessTrace& trace, const StoppingRule& rule,
                           std::span<const double> data = {});

/// The distribution q = p * e / E_p[e] whose likelihood ratio q/p dominates e.
/// Returns p itself when E_p[e] = 0.
FiniteSpace dominating_lr(const FiniteSpace& space, std::span<const double> e);

}  // namespace evlab
