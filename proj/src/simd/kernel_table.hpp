#pragma once

#include <cstddef>

namespace evlab::simd::detail {

// Raw-pointer signatures keep the per-ISA translation units free of <span>
// plumbing; the public wrappers in dispatch.cpp check lengths.
struct KernelTable {
  void (*vexp)(const double* in, double* out, std::size_t n);
  void (*vlog)(const double* in, double* out, std::size_t n);
  void (*affine)(const double* x, double a, double b, double* out, std::size_t n);
  void (*select_binary)(const double* x, double if_one, double if_zero, double* out,
                        std::size_t n);
  void (*bet_factors)(const double* x, const double* lambda, double mu, double* out,
                      std::size_t n);
  void (*scale_log_integrand)(const double* u, const double* v, double n, double a, double b,
                              double c, double* out, std::size_t len);
  void (*gaussian_loglik_grid)(const double* mu, double n, double s1, double s2,
                               double inv_two_var, double* out, std::size_t len);
  void (*bernoulli_loglik_grid)(const double* theta, double ones, double zeros, double* out,
                                std::size_t len);
  double (*max_value)(const double* in, std::size_t n);
  double (*sum_exp_shifted)(const double* v, const double* w, double shift, std::size_t n);
  void (*panel_sums)(const double* samples, std::size_t rows, std::size_t count,
                     const double* w1, const double* w2, double* s1, double* s2, double* s1_abs,
                     double* s1_dev);
};

const KernelTable& scalar_table();

// nullptr when the build has no AVX2 translation unit.
const KernelTable* avx2_table();

bool cpu_has_avx2_fma();

}  // namespace evlab::simd::detail
