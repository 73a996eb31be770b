#pragma once
// Data-parallel inner loops shared by the e-statistic constructors.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once at startup from CPUID; the
// environment variable EVLAB_ISA=scalar forces the reference path. The two
// paths agree to a few ulp (see tests/unit/test_kernels.cpp), not bit for bit:
// the vector exp/log use polynomial approximations and FMA contraction.
//
// All spans passed as `out` must have the same length as the inputs. Aliasing
// `out` with an input is allowed.

#include <cstddef>
#include <span>
#include <string_view>

namespace evlab::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best instruction set supported by this CPU and this build.
Isa detected_isa();

/// Instruction set the dispatch table currently points at.
Isa active_isa();

/// Repoint the dispatch table. Requesting an ISA the CPU lacks falls back to
/// scalar. Not thread-safe: call before spawning workers.
void force_isa(Isa isa);

/// RAII guard for tests that need a specific path.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { force_isa(isa); }
  ~ScopedIsa() { force_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

// out[i] = exp(in[i]); exp(-inf) = 0, exp(+inf) = +inf, NaN propagates.
void vexp(std::span<const double> in, std::span<double> out);

// out[i] = log(in[i]); log(0) = -inf, log(x<0) = NaN, log(+inf) = +inf.
void vlog(std::span<const double> in, std::span<double> out);

// out[i] = a * x[i] + b
void affine(std::span<const double> x, double a, double b, std::span<double> out);

// out[i] = x[i] != 0 ? if_one : if_zero   (binary data stored as 0.0/1.0)
void select_binary(std::span<const double> x, double if_one, double if_zero,
                   std::span<double> out);

// out[i] = 1 + lambda[i] * (x[i] - mu)
void bet_factors(std::span<const double> x, std::span<const double> lambda, double mu,
                 std::span<double> out);

// out[i] = -n*u[i] - a*v[i]^2/2 + b*v[i] - c, with v[i] = exp(-u[i]) supplied by
// the caller. This is the log of the scale-mixture integrand on a log-scale grid.
void scale_log_integrand(std::span<const double> u, std::span<const double> v, double n,
                         double a, double b, double c, std::span<double> out);

// out[j] = -(s2 - 2*mu[j]*s1 + n*mu[j]^2) * inv_two_var   (Gaussian log-lik, up to a constant)
void gaussian_loglik_grid(std::span<const double> mu, double n, double s1, double s2,
                          double inv_two_var, std::span<double> out);

// out[j] = ones*log(theta[j]) + zeros*log(1-theta[j]), with 0*log(0) = 0.
void bernoulli_loglik_grid(std::span<const double> theta, double ones, double zeros,
                           std::span<double> out);

// max over in; -inf for an empty span. NaN entries are ignored.
double max_value(std::span<const double> in);

// sum_i w[i] * exp(v[i] - shift). Summation order differs between paths.
double sum_exp_shifted(std::span<const double> v, std::span<const double> w, double shift);

// Weighted column sums of a rows x count matrix stored row-major, for
// quadrature panels (one column per panel):
//   s1[p] = sum_k w1[k] f[k][p]        s2[p] = sum_k w2[k] f[k][p]
//   s1_abs[p] = sum_k w1[k] |f[k][p]|  s1_dev[p] = sum_k w1[k] |f[k][p] - s1[p]/2|
// Sums run in k order on every path, so results are identical across ISAs.
void panel_sums(std::span<const double> samples, std::span<const double> w1,
                std::span<const double> w2, std::span<double> s1, std::span<double> s2,
                std::span<double> s1_abs, std::span<double> s1_dev);

}  // namespace evlab::simd
