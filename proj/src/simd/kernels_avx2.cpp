// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPUID check.
//
// exp follows the Cephes rational approximation (range reduction by ln 2,
// then a [2/3] Pade form); log sums the atanh series after reducing the
// mantissa to [sqrt(1/2), sqrt(2)).
// Both stay within ~2 ulp of libm on normal inputs.

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "kernel_table.hpp"

namespace evlab::simd::detail {
namespace {

constexpr std::size_t kLanes = 4;

// 2^52 + 2^51: adding it to a double in (-2^51, 2^51) leaves the rounded
// integer in the low mantissa bits.
constexpr double kRoundMagic = 6755399441055744.0;

inline __m256i to_int64_small(__m256d integral) {
  const __m256d magic = _mm256_set1_pd(kRoundMagic);
  return _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(integral, magic)),
                          _mm256_castpd_si256(magic));
}

inline __m256d from_int64_small(__m256i v) {
  const __m256d magic = _mm256_set1_pd(kRoundMagic);
  return _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_add_epi64(v, _mm256_castpd_si256(magic))), magic);
}

// 2^k for integral k in [-1022, 1023]
inline __m256d pow2_int(__m256d k) {
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(to_int64_small(k), _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d exp_pd(__m256d x) {
  const __m256d hi_limit = _mm256_set1_pd(709.782712893384);
  const __m256d lo_limit = _mm256_set1_pd(-745.1332191019412);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, xc);
  r = _mm256_fnmadd_pd(n, c2, r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));
  const __m256d frac = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  const __m256d e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), frac, _mm256_set1_pd(1.0));

  // Split the exponent so both halves stay in the normal range; the second
  // multiply performs the single rounding into subnormals when needed.
  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  __m256d result = _mm256_mul_pd(_mm256_mul_pd(e, pow2_int(n1)), pow2_int(n2));

  result = _mm256_blendv_pd(result, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                            _mm256_cmp_pd(x, hi_limit, _CMP_GT_OQ));
  result = _mm256_blendv_pd(result, _mm256_setzero_pd(), _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ));
  return _mm256_blendv_pd(result, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
}

inline __m256d log_pd(__m256d x) {
  const __m256d min_normal = _mm256_set1_pd(std::numeric_limits<double>::min());
  const __m256d tiny = _mm256_cmp_pd(x, min_normal, _CMP_LT_OQ);
  // Lift subnormals into the normal range and remember the 52 extra binades.
  const __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(4503599627370496.0)),
                                      tiny);
  const __m256d adjust = _mm256_and_pd(tiny, _mm256_set1_pd(-52.0));

  const __m256i bits = _mm256_castpd_si256(xs);
  const __m256i biased = _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7ff));
  __m256d e = _mm256_add_pd(from_int64_small(_mm256_sub_epi64(biased, _mm256_set1_epi64x(1022))),
                            adjust);
  const __m256i mant_bits =
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FE0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);  // [0.5, 1)

  const __m256d below = _mm256_cmp_pd(m, _mm256_set1_pd(0.70710678118654752440), _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(below, _mm256_set1_pd(1.0)));
  const __m256d one = _mm256_set1_pd(1.0);
  m = _mm256_add_pd(m, _mm256_and_pd(below, m));  // [sqrt(1/2), sqrt(2))

  // log m = 2 atanh(s) = 2s (1 + w/3 + w^2/5 + ...), s = (m - 1)/(m + 1), w = s^2 <= 0.0295
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d w = _mm256_mul_pd(s, s);
  __m256d r = _mm256_set1_pd(1.0 / 25.0);
  for (int k = 11; k >= 1; --k) r = _mm256_fmadd_pd(r, w, _mm256_set1_pd(1.0 / (2 * k + 1)));
  const __m256d two_s = _mm256_add_pd(s, s);
  // ln 2 split so that e * ln2_hi is exact.
  const __m256d tail = _mm256_fmadd_pd(_mm256_mul_pd(two_s, w), r,
                                       _mm256_mul_pd(e, _mm256_set1_pd(1.90821492927058770002e-10)));
  __m256d result = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693147180369123816490), _mm256_add_pd(two_s, tail));

  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  result = _mm256_blendv_pd(result, _mm256_set1_pd(-std::numeric_limits<double>::infinity()),
                            _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_EQ_OQ));
  result = _mm256_blendv_pd(result, inf, _mm256_cmp_pd(x, inf, _CMP_EQ_OQ));
  // negative or NaN input
  return _mm256_blendv_pd(result, _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN()),
                          _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_NGE_UQ));
}

// Runs `op` over full lanes, then once more over a padded copy of the tail so
// every element goes through the same approximation.
template <typename Op>
inline void unary_map(const double* in, double* out, std::size_t n, double pad, Op op) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, op(_mm256_loadu_pd(in + i)));
  }
  if (i < n) {
    alignas(32) double buf[kLanes] = {pad, pad, pad, pad};
    for (std::size_t k = 0; i + k < n; ++k) buf[k] = in[i + k];
    _mm256_store_pd(buf, op(_mm256_load_pd(buf)));
    for (std::size_t k = 0; i + k < n; ++k) out[i + k] = buf[k];
  }
}

void exp_avx2(const double* in, double* out, std::size_t n) {
  unary_map(in, out, n, 0.0, exp_pd);
}

void log_avx2(const double* in, double* out, std::size_t n) {
  unary_map(in, out, n, 1.0, log_pd);
}

void affine_avx2(const double* x, double a, double b, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vb));
  }
  for (; i < n; ++i) out[i] = std::fma(a, x[i], b);
}

void select_binary_avx2(const double* x, double if_one, double if_zero, double* out,
                        std::size_t n) {
  const __m256d one = _mm256_set1_pd(if_one);
  const __m256d zero = _mm256_set1_pd(if_zero);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d is_zero = _mm256_cmp_pd(_mm256_loadu_pd(x + i), _mm256_setzero_pd(), _CMP_EQ_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(one, zero, is_zero));
  }
  for (; i < n; ++i) out[i] = x[i] != 0.0 ? if_one : if_zero;
}

void bet_factors_avx2(const double* x, const double* lambda, double mu, double* out,
                      std::size_t n) {
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d centered = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmu);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(lambda + i), centered, one));
  }
  for (; i < n; ++i) out[i] = std::fma(lambda[i], x[i] - mu, 1.0);
}

void scale_log_integrand_avx2(const double* u, const double* v, double n, double a, double b,
                              double c, double* out, std::size_t len) {
  const __m256d vn = _mm256_set1_pd(-n);
  const __m256d half_a = _mm256_set1_pd(-0.5 * a);
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vc = _mm256_set1_pd(-c);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d vv = _mm256_loadu_pd(v + i);
    // ((-a/2) v + b) v - n u - c
    __m256d acc = _mm256_fmadd_pd(half_a, vv, vb);
    acc = _mm256_fmadd_pd(acc, vv, vc);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vn, _mm256_loadu_pd(u + i), acc));
  }
  for (; i < len; ++i) {
    out[i] = std::fma(-n, u[i], std::fma(std::fma(-0.5 * a, v[i], b), v[i], -c));
  }
}

void gaussian_loglik_grid_avx2(const double* mu, double n, double s1, double s2,
                               double inv_two_var, double* out, std::size_t len) {
  const __m256d vn = _mm256_set1_pd(n);
  const __m256d two_s1 = _mm256_set1_pd(-2.0 * s1);
  const __m256d vs2 = _mm256_set1_pd(s2);
  const __m256d scale = _mm256_set1_pd(-inv_two_var);
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    const __m256d m = _mm256_loadu_pd(mu + j);
    // (n m - 2 s1) m + s2
    const __m256d quad = _mm256_fmadd_pd(_mm256_fmadd_pd(vn, m, two_s1), m, vs2);
    _mm256_storeu_pd(out + j, _mm256_mul_pd(quad, scale));
  }
  for (; j < len; ++j) {
    out[j] = -std::fma(std::fma(n, mu[j], -2.0 * s1), mu[j], s2) * inv_two_var;
  }
}

void bernoulli_loglik_grid_avx2(const double* theta, double ones, double zeros, double* out,
                                std::size_t len) {
  const __m256d vones = _mm256_set1_pd(ones);
  const __m256d vzeros = _mm256_set1_pd(zeros);
  const __m256d one = _mm256_set1_pd(1.0);
  const bool use_ones = ones > 0.0;
  const bool use_zeros = zeros > 0.0;
  auto op = [&](__m256d t) {
    __m256d acc = _mm256_setzero_pd();
    if (use_ones) acc = _mm256_mul_pd(vones, log_pd(t));
    if (use_zeros) acc = _mm256_fmadd_pd(vzeros, log_pd(_mm256_sub_pd(one, t)), acc);
    return acc;
  };
  unary_map(theta, out, len, 0.5, op);
}

double max_value_avx2(const double* in, std::size_t n) {
  const __m256d neg_inf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d acc = neg_inf;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(in + i);
    const __m256d clean = _mm256_blendv_pd(v, neg_inf, _mm256_cmp_pd(v, v, _CMP_UNORD_Q));
    acc = _mm256_max_pd(acc, clean);
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double m = lanes[0];
  for (std::size_t k = 1; k < kLanes; ++k) m = lanes[k] > m ? lanes[k] : m;
  for (; i < n; ++i) m = in[i] > m ? in[i] : m;
  return m;
}

double sum_exp_shifted_avx2(const double* v, const double* w, double shift, std::size_t n) {
  const __m256d vshift = _mm256_set1_pd(shift);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    const __m256d e0 = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i), vshift));
    const __m256d e1 = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i + kLanes), vshift));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), e0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i + kLanes), e1, acc1);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  if (i < n) {
    alignas(32) double vb[2 * kLanes];
    alignas(32) double wb[2 * kLanes];
    const std::size_t rest = n - i;
    for (std::size_t k = 0; k < 2 * kLanes; ++k) {
      vb[k] = k < rest ? v[i + k] : shift;
      wb[k] = k < rest ? w[i + k] : 0.0;
    }
    for (std::size_t k = 0; k < 2 * kLanes; k += kLanes) {
      const __m256d e = exp_pd(_mm256_sub_pd(_mm256_load_pd(vb + k), vshift));
      acc0 = _mm256_fmadd_pd(_mm256_load_pd(wb + k), e, acc0);
    }
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc0);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

// One panel per lane. Products and sums stay separate (no FMA) and run in row
// order, so each lane reproduces the scalar reference exactly.
void panel_sums_avx2(const double* samples, std::size_t rows, std::size_t count, const double* w1,
                     const double* w2, double* s1, double* s2, double* s1_abs, double* s1_dev) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t p = 0;
  for (; p + kLanes <= count; p += kLanes) {
    __m256d a = _mm256_setzero_pd();
    __m256d b = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    for (std::size_t k = 0; k < rows; ++k) {
      const __m256d f = _mm256_loadu_pd(samples + k * count + p);
      const __m256d wk1 = _mm256_set1_pd(w1[k]);
      a = _mm256_add_pd(a, _mm256_mul_pd(wk1, f));
      b = _mm256_add_pd(b, _mm256_mul_pd(_mm256_set1_pd(w2[k]), f));
      c = _mm256_add_pd(c, _mm256_mul_pd(wk1, _mm256_andnot_pd(sign, f)));
    }
    const __m256d mean = _mm256_mul_pd(half, a);
    __m256d d = _mm256_setzero_pd();
    for (std::size_t k = 0; k < rows; ++k) {
      const __m256d dev = _mm256_sub_pd(_mm256_loadu_pd(samples + k * count + p), mean);
      d = _mm256_add_pd(d, _mm256_mul_pd(_mm256_set1_pd(w1[k]), _mm256_andnot_pd(sign, dev)));
    }
    _mm256_storeu_pd(s1 + p, a);
    _mm256_storeu_pd(s2 + p, b);
    _mm256_storeu_pd(s1_abs + p, c);
    _mm256_storeu_pd(s1_dev + p, d);
  }
  for (; p < count; ++p) {
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

const KernelTable* avx2_table() {
  static const KernelTable table{
      exp_avx2,          log_avx2,
      affine_avx2,       select_binary_avx2,
      bet_factors_avx2,  scale_log_integrand_avx2,
      gaussian_loglik_grid_avx2, bernoulli_loglik_grid_avx2,
      max_value_avx2,    sum_exp_shifted_avx2,
      panel_sums_avx2,
  };
  return &table;
}

}  // namespace evlab::simd::detail
