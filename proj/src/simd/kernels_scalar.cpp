// Reference implementations. These define the semantics the vector paths are
// tested against; keep them plain.

#include <cmath>
#include <limits>

#include "kernel_table.hpp"

namespace evlab::simd::detail {
namespace {

void exp_ref(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
}

void log_ref(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(in[i]);
}

void affine_ref(const double* x, double a, double b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b;
}

void select_binary_ref(const double* x, double if_one, double if_zero, double* out,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] != 0.0 ? if_one : if_zero;
}

void bet_factors_ref(const double* x, const double* lambda, double mu, double* out,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 + lambda[i] * (x[i] - mu);
}

void scale_log_integrand_ref(const double* u, const double* v, double n, double a, double b,
                             double c, double* out, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    out[i] = -n * u[i] - 0.5 * a * v[i] * v[i] + b * v[i] - c;
  }
}

void gaussian_loglik_grid_ref(const double* mu, double n, double s1, double s2,
                              double inv_two_var, double* out, std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) {
    out[j] = -(s2 - 2.0 * mu[j] * s1 + n * mu[j] * mu[j]) * inv_two_var;
  }
}

void bernoulli_loglik_grid_ref(const double* theta, double ones, double zeros, double* out,
                               std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) {
    const double a = ones > 0.0 ? ones * std::log(theta[j]) : 0.0;
    const double b = zeros > 0.0 ? zeros * std::log1p(-theta[j]) : 0.0;
    out[j] = a + b;
  }
}

double max_value_ref(const double* in, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (in[i] > m) m = in[i];
  }
  return m;
}

double sum_exp_shifted_ref(const double* v, const double* w, double shift, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * std::exp(v[i] - shift);
  return s;
}

void panel_sums_ref(const double* samples, std::size_t rows, std::size_t count, const double* w1,
                    const double* w2, double* s1, double* s2, double* s1_abs, double* s1_dev) {
  for (std::size_t p = 0; p < count; ++p) {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      const double f = samples[k * count + p];
      a += w1[k] * f;
      b += w2[k] * f;
      c += w1[k] * std::abs(f);
    }
    const double mean = 0.5 * a;
    double d = 0.0;
    for (std::size_t k = 0; k < rows; ++k) d += w1[k] * std::abs(samples[k * count + p] - mean);
    s1[p] = a;
    s2[p] = b;
    s1_abs[p] = c;
    s1_dev[p] = d;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      exp_ref,          log_ref,
      affine_ref,       select_binary_ref,
      bet_factors_ref,  scale_log_integrand_ref,
      gaussian_loglik_grid_ref, bernoulli_loglik_grid_ref,
      max_value_ref,    sum_exp_shifted_ref,
      panel_sums_ref,
  };
  return table;
}

}  // namespace evlab::simd::detail
