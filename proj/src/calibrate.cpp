#include "evlab/calibrate.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/numerics.hpp"

namespace evlab::calibrate {
namespace {

void check_p(double p, const char* what) {
  if (!(p > 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": p must lie in (0, 1], got " << p;
    throw std::invalid_argument(msg.str());
  }
}

void check_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw std::invalid_argument("power calibrator: kappa must lie in (0, 1)");
  }
}

double power_value(double kappa, double p) { return kappa * std::pow(p, kappa - 1.0); }

// (1 - p + p ln p) / (p (ln p)^2). With s = -ln p this is
// (e^s - 1 - s) / s^2 = sum_m s^m / (m+2)!, used for small s where the closed
// form cancels.
double mixture_series(double s) {
  double term = 0.5;  // s^0 / 2!
  double sum = term;
  for (int m = 1; m < 40; ++m) {
    term *= s / (m + 2);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

double mixture_value(double p) {
  const double s = -std::log(p);
  if (s < 1.0) return mixture_series(s);
  if (s > 700.0) return std::exp(s - 2.0 * std::log(s)) - 1.0 / s;
  return std::expm1(s) / (s * s) - 1.0 / s;
}

// C(e^-s) e^-s, the integrand after p = e^-s, without forming p for the
// built-in calibrators so that it stays accurate where e^-s underflows.
double weighted_value(const Calibrator& c, double s) {
  switch (c.kind()) {
    case Calibrator::Kind::power: return c.kappa() * std::exp(-c.kappa() * s);
    case Calibrator::Kind::mixture:
      if (s < 1.0) return mixture_series(s) * std::exp(-s);
      return (-std::expm1(-s) - s * std::exp(-s)) / (s * s);
    case Calibrator::Kind::custom: break;
  }
  const double p = std::exp(-s);
  return p > 0.0 ? c(p).value() * p : 0.0;
}

}  // namespace

Calibrator::Calibrator(Kind kind, double kappa, std::string name, Function f)
    : kind_(kind), kappa_(kappa), name_(std::move(name)), f_(std::move(f)) {}

Calibrator Calibrator::power(double kappa) {
  check_kappa(kappa);
  return Calibrator(Kind::power, kappa, {}, [kappa](double p) { return power_value(kappa, p); });
}

Calibrator Calibrator::mixture() { return Calibrator(Kind::mixture, 0.0, {}, mixture_value); }

Calibrator Calibrator::custom(std::string name, Function f) {
  if (!f) throw std::invalid_argument("Calibrator::custom: empty function");
  return Calibrator(Kind::custom, 0.0, std::move(name), std::move(f));
}

std::string Calibrator::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case Kind::power: out << "power:" << kappa_; break;
    case Kind::mixture: out << "mixture"; break;
    case Kind::custom: out << "custom:" << name_; break;
  }
  return out.str();
}

EValueSample Calibrator::operator()(double p) const {
  check_p(p, "calibrator");
  return EValueSample(f_(p), describe());
}

EValueSample power_calibrator(double kappa, double p) {
  check_kappa(kappa);
  check_p(p, "power_calibrator");
  return EValueSample(power_value(kappa, p), "power");
}

EValueSample mixture_calibrator(double p) {
  check_p(p, "mixture_calibrator");
  return EValueSample(mixture_value(p), "mixture");
}

CalibratorReport verify_calibrator(const Calibrator& c) {
  CalibratorReport report{true, 0.0, false};

  constexpr int kGrid = 10000;
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= kGrid; ++i) {
    const double p = static_cast<double>(i) / kGrid;
    double value = 0.0;
    try {
      value = c(p).value();
    } catch (const std::exception&) {
      report.monotone = false;
      return report;
    }
    if (value > previous) report.monotone = false;
    previous = value;
  }

  // p = exp(-s), s = v / (1 - v): dp = p ds, ds = dv / (1 - v)^2, v in (0, 1).
  // The GK nodes never touch the endpoints.
  const auto integrand = [&c](double v) {
    const double s = v / (1.0 - v);
    return weighted_value(c, s) / ((1.0 - v) * (1.0 - v));
  };
  try {
    report.integral = numerics::integrate(integrand, 0.0, 1.0, {1e-11, 1e-13, 20000});
  } catch (const std::exception&) {
    report.integral = std::numeric_limits<double>::infinity();
  }
  report.valid = report.monotone && report.integral <= 1.0 + 1e-9;
  return report;
}

double fisher_combine(std::span<const double> pvals) {
  if (pvals.empty()) throw std::invalid_argument("fisher_combine: no p-values");
  double statistic = 0.0;
  for (double p : pvals) {
    check_p(p, "fisher_combine");
    statistic -= std::log(p);
  }
  // chi2_{2k} survival at 2x equals Q(k, x).
  return numerics::regularized_gamma_q(static_cast<double>(pvals.size()), statistic);
}

}  // namespace evlab::calibrate
