#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

#include "evlab/simd/kernels.hpp"
#include "kernel_table.hpp"

namespace evlab::simd {
namespace detail {

#if defined(EVLAB_HAVE_AVX2)
bool cpu_has_avx2_fma() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#else
const KernelTable* avx2_table() { return nullptr; }
bool cpu_has_avx2_fma() { return false; }
#endif

}  // namespace detail

namespace {

struct Dispatch {
  const detail::KernelTable* table;
  Isa isa;
};

Dispatch initial_dispatch() {
  const char* env = std::getenv("EVLAB_ISA");
  if (env != nullptr && std::string_view(env) == "scalar") {
    return {&detail::scalar_table(), Isa::scalar};
  }
  if (detail::cpu_has_avx2_fma() && detail::avx2_table() != nullptr) {
    return {detail::avx2_table(), Isa::avx2};
  }
  return {&detail::scalar_table(), Isa::scalar};
}

Dispatch& current() {
  static Dispatch d = initial_dispatch();
  return d;
}

inline const detail::KernelTable& table() { return *current().table; }

void require_same(std::size_t a, std::size_t b, const char* kernel) {
  if (a != b) {
    throw std::invalid_argument(std::string("simd::") + kernel + ": span length mismatch");
  }
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  return detail::cpu_has_avx2_fma() && detail::avx2_table() != nullptr ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() { return current().isa; }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() == Isa::avx2) {
    current() = {detail::avx2_table(), Isa::avx2};
  } else {
    current() = {&detail::scalar_table(), Isa::scalar};
  }
}

void vexp(std::span<const double> in, std::span<double> out) {
  require_same(in.size(), out.size(), "vexp");
  table().vexp(in.data(), out.data(), in.size());
}

void vlog(std::span<const double> in, std::span<double> out) {
  require_same(in.size(), out.size(), "vlog");
  table().vlog(in.data(), out.data(), in.size());
}

void affine(std::span<const double> x, double a, double b, std::span<double> out) {
  require_same(x.size(), out.size(), "affine");
  table().affine(x.data(), a, b, out.data(), x.size());
}

void select_binary(std::span<const double> x, double if_one, double if_zero,
                   std::span<double> out) {
  require_same(x.size(), out.size(), "select_binary");
  table().select_binary(x.data(), if_one, if_zero, out.data(), x.size());
}

void bet_factors(std::span<const double> x, std::span<const double> lambda, double mu,
                 std::span<double> out) {
  require_same(x.size(), lambda.size(), "bet_factors");
  require_same(x.size(), out.size(), "bet_factors");
  table().bet_factors(x.data(), lambda.data(), mu, out.data(), x.size());
}

void scale_log_integrand(std::span<const double> u, std::span<const double> v, double n,
                         double a, double b, double c, std::span<double> out) {
  require_same(u.size(), v.size(), "scale_log_integrand");
  require_same(u.size(), out.size(), "scale_log_integrand");
  table().scale_log_integrand(u.data(), v.data(), n, a, b, c, out.data(), u.size());
}

void gaussian_loglik_grid(std::span<const double> mu, double n, double s1, double s2,
                          double inv_two_var, std::span<double> out) {
  require_same(mu.size(), out.size(), "gaussian_loglik_grid");
  table().gaussian_loglik_grid(mu.data(), n, s1, s2, inv_two_var, out.data(), mu.size());
}

void bernoulli_loglik_grid(std::span<const double> theta, double ones, double zeros,
                           std::span<double> out) {
  require_same(theta.size(), out.size(), "bernoulli_loglik_grid");
  table().bernoulli_loglik_grid(theta.data(), ones, zeros, out.data(), theta.size());
}

double max_value(std::span<const double> in) { return table().max_value(in.data(), in.size()); }

double sum_exp_shifted(std::span<const double> v, std::span<const double> w, double shift) {
  require_same(v.size(), w.size(), "sum_exp_shifted");
  return table().sum_exp_shifted(v.data(), w.data(), shift, v.size());
}

void panel_sums(std::span<const double> samples, std::span<const double> w1,
                std::span<const double> w2, std::span<double> s1, std::span<double> s2,
                std::span<double> s1_abs, std::span<double> s1_dev) {
  const std::size_t rows = w1.size();
  const std::size_t count = s1.size();
  require_same(w2.size(), rows, "panel_sums");
  require_same(samples.size(), rows * count, "panel_sums");
  require_same(s2.size(), count, "panel_sums");
  require_same(s1_abs.size(), count, "panel_sums");
  require_same(s1_dev.size(), count, "panel_sums");
  table().panel_sums(samples.data(), rows, count, w1.data(), w2.data(), s1.data(), s2.data(),
                     s1_abs.data(), s1_dev.data());
}

}  // namespace evlab::simd
