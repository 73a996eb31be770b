#pragma once
// p-to-e calibrators and Fisher's combination of p-values.

#include <functional>
#include <span>
#include <string>

#include "evlab/evcore.hpp"

namespace evlab::calibrate {

/// A nonincreasing map f from p in (0, 1] to [0, inf) with integral at most 1.
class Calibrator {
 public:
  enum class Kind { power, mixture, custom };
  using Function = std::function<double(double)>;

  /// kappa * p^(kappa - 1), 0 < kappa < 1.
  static Calibrator power(double kappa);
  /// Integral over kappa in (0, 1) of the power family.
  static Calibrator mixture();
  /// Arbitrary evaluator, e.g. for checking candidate calibrators. Not validated.
  static Calibrator custom(std::string name, Function f);

  Kind kind() const { return kind_; }
  double kappa() const { return kappa_; }
  std::string describe() const;

  /// Throws std::invalid_argument unless 0 < p <= 1.
  EValueSample operator()(double p) const;

 private:
  Calibrator(Kind kind, double kappa, std::string name, Function f);

  Kind kind_;
  double kappa_;
  std::string name_;
  Function f_;
};

EValueSample power_calibrator(double kappa, double p);
EValueSample mixture_calibrator(double p);

struct CalibratorReport {
  bool monotone;
  double integral;
  bool valid;  // monotone and integral <= 1 + 1e-9
};

/// Monotonicity on a 10^4-point grid of (0, 1] plus the integral over (0, 1]
/// by adaptive quadrature after the substitution p = exp(-s). Failures are
/// reported, never thrown.
CalibratorReport verify_calibrator(const Calibrator& c);

/// Chi-square(2k) survival function at -2 sum log p_i. Inputs are assumed
/// independent; that is the caller's responsibility.
double fisher_combine(std::span<const double> pvals);

}  // namespace evlab::calibrate
