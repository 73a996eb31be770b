#include "evlab/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "evlab/errors.hpp"
#include "evlab/simd/kernels.hpp"

namespace evlab::numerics {
namespace {

// QUADPACK qk15 abscissae (descending, last is the center) and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for xgk[1], xgk[3], xgk[5], xgk[7].
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr std::size_t kNodes = 15;

// Node k of panel p goes to out[k * count + p] (node-major), so the rule
// below works on contiguous runs of panels.
void panel_nodes(std::span<const double> a, std::span<const double> b, double* out) {
  const std::size_t count = a.size();
  for (std::size_t p = 0; p < count; ++p) {
    const double center = 0.5 * (a[p] + b[p]);
    const double half = 0.5 * (b[p] - a[p]);
    for (std::size_t k = 0; k < 7; ++k) {
      out[(2 * k) * count + p] = center - half * kXgk[k];
      out[(2 * k + 1) * count + p] = center + half * kXgk[k];
    }
    out[14 * count + p] = center;
  }
}

// kXgk/kWgk/kWg expanded into panel_nodes() order.
struct NodeWeights {
  std::array<double, kNodes> kronrod{};
  std::array<double, kNodes> gauss{};
};

constexpr NodeWeights make_node_weights() {
  NodeWeights w;
  for (std::size_t k = 0; k < 7; ++k) {
    w.kronrod[2 * k] = w.kronrod[2 * k + 1] = kWgk[k];
    if (k % 2 == 1) w.gauss[2 * k] = w.gauss[2 * k + 1] = kWg[k / 2];
  }
  w.kronrod[14] = kWgk[7];
  w.gauss[14] = kWg[3];
  return w;
}

constexpr NodeWeights kWeights = make_node_weights();

// Kronrod estimates and QUADPACK-style errors for `count` panels of one
// component; `f` holds their samples node-major. Each panel's sums run in
// node order, whatever the vector width.
void panel_rules(const double* f, std::span<const double> a, std::span<const double> b,
                 QuadratureWorkspace& scratch, double* value, double* error) {
  const std::size_t count = a.size();
  auto& kron = scratch.kron;
  auto& gauss = scratch.gauss;
  auto& abs_sum = scratch.abs_sum;
  auto& asc = scratch.asc;
  kron.resize(count);
  gauss.resize(count);
  abs_sum.resize(count);
  asc.resize(count);
  simd::panel_sums(std::span<const double>(f, kNodes * count), kWeights.kronrod, kWeights.gauss,
                   kron, gauss, abs_sum, asc);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  for (std::size_t p = 0; p < count; ++p) {
    const double half = 0.5 * (b[p] - a[p]);
    value[p] = kron[p] * half;
    const double res_abs = abs_sum[p] * std::abs(half);
    const double res_asc = asc[p] * std::abs(half);
    double err = std::abs((kron[p] - gauss[p]) * half);
    if (res_asc != 0.0 && err != 0.0) {
      const double ratio = 200.0 * err / res_asc;
      err = res_asc * std::min(1.0, ratio * std::sqrt(ratio));
    }
    if (res_abs > uflow / (50.0 * eps)) err = std::max(50.0 * eps * res_abs, err);
    error[p] = err;
  }
}

}  // namespace

QuadratureResult integrate_batched(const BatchIntegrand& f, std::size_t components,
                                   std::span<const double> breakpoints,
                                   const QuadratureOptions& options,
                                   QuadratureWorkspace* workspace) {
  if (components == 0) throw std::invalid_argument("integrate_batched: no components");
  if (breakpoints.size() < 2) throw std::invalid_argument("integrate_batched: need two breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw std::invalid_argument("integrate_batched: breakpoints must be strictly increasing");
    }
  }

  QuadratureWorkspace local;
  QuadratureWorkspace& ws = workspace ? *workspace : local;
  QuadratureResult result;
  result.values.assign(components, 0.0);
  result.errors.assign(components, 0.0);

  // Live panels; value/error are stored flat, panel-major.
  auto& lo = ws.lo;
  auto& hi = ws.hi;
  auto& value = ws.value;
  auto& error = ws.error;
  auto& nodes = ws.nodes;
  auto& samples = ws.samples;
  lo.clear();
  hi.clear();
  value.clear();
  error.clear();

  auto evaluate = [&](std::span<const double> a, std::span<const double> b) {
    const std::size_t count = a.size();
    const std::size_t width = count * kNodes;
    nodes.resize(width);
    panel_nodes(a, b, nodes.data());
    samples.assign(components * width, 0.0);
    f(nodes, samples);
    result.evaluations += width;
    const std::size_t first = lo.size();
    lo.insert(lo.end(), a.begin(), a.end());
    hi.insert(hi.end(), b.begin(), b.end());
    value.resize(lo.size() * components);
    error.resize(lo.size() * components);
    ws.rule_value.resize(count);
    ws.rule_error.resize(count);
    for (std::size_t c = 0; c < components; ++c) {
      panel_rules(samples.data() + c * width, a, b, ws, ws.rule_value.data(), ws.rule_error.data());
      for (std::size_t p = 0; p < count; ++p) {
        if (!std::isfinite(ws.rule_value[p])) {
          throw NumericalError("integrate_batched: non-finite integrand value on [" +
                               std::to_string(a[p]) + ", " + std::to_string(b[p]) + "]");
        }
        value[(first + p) * components + c] = ws.rule_value[p];
        error[(first + p) * components + c] = ws.rule_error[p];
      }
    }
  };

  auto totals = [&] {
    std::fill(result.values.begin(), result.values.end(), 0.0);
    std::fill(result.errors.begin(), result.errors.end(), 0.0);
    for (std::size_t p = 0; p < lo.size(); ++p) {
      for (std::size_t c = 0; c < components; ++c) {
        result.values[c] += value[p * components + c];
        result.errors[c] += error[p * components + c];
      }
    }
  };

  evaluate(breakpoints.first(breakpoints.size() - 1), breakpoints.subspan(1));
  totals();

  auto& tol = ws.tol;
  auto& order = ws.order;
  auto& score = ws.score;
  auto& split_lo = ws.split_lo;
  auto& split_hi = ws.split_hi;
  auto& split = ws.split;
  tol.resize(components);
  for (;;) {
    bool done = true;
    for (std::size_t c = 0; c < components; ++c) {
      tol[c] = std::max(options.abs_tol, options.rel_tol * std::abs(result.values[c]));
      if (result.errors[c] > tol[c]) done = false;
    }
    result.panels = lo.size();
    if (done) {
      result.converged = true;
      break;
    }
    if (lo.size() >= options.max_panels) break;

    // A panel's score is its worst error in units of the component tolerance.
    // Split the highest-scoring panels until what is left over accounts for
    // at most half of the budget.
    const std::size_t live = lo.size();
    score.assign(live, 0.0);
    double total_score = 0.0;
    for (std::size_t p = 0; p < live; ++p) {
      for (std::size_t c = 0; c < components; ++c) {
        const double t = tol[c] > 0.0 ? tol[c] : std::numeric_limits<double>::min();
        score[p] = std::max(score[p], error[p * components + c] / t);
      }
      total_score += score[p];
    }
    order.resize(live);
    for (std::size_t p = 0; p < live; ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
    split.assign(live, 0);
    split_lo.clear();
    split_hi.clear();
    double remaining = total_score;
    for (std::size_t k = 0; k < live && remaining > 0.5; ++k) {
      if (live + split_lo.size() / 2 >= options.max_panels && !split_lo.empty()) break;
      const std::size_t p = order[k];
      const double mid = 0.5 * (lo[p] + hi[p]);
      if (!(mid > lo[p] && mid < hi[p])) continue;  // interval exhausted
      split[p] = 1;
      split_lo.push_back(lo[p]);
      split_hi.push_back(mid);
      split_lo.push_back(mid);
      split_hi.push_back(hi[p]);
      remaining -= score[p];
    }
    if (split_lo.empty()) break;

    std::size_t kept = 0;
    for (std::size_t p = 0; p < live; ++p) {
      if (split[p]) continue;
      lo[kept] = lo[p];
      hi[kept] = hi[p];
      for (std::size_t c = 0; c < components; ++c) {
        value[kept * components + c] = value[p * components + c];
        error[kept * components + c] = error[p * components + c];
      }
      ++kept;
    }
    lo.resize(kept);
    hi.resize(kept);
    value.resize(kept * components);
    error.resize(kept * components);
    evaluate(split_lo, split_hi);
    totals();
  }
  return result;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options) {
  const std::array<double, 2> bounds = {a, b};
  auto batch = [&](std::span<const double> nodes, std::span<double> out) {
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = f(nodes[k]);
  };
  const auto result = integrate_batched(batch, 1, bounds, options);
  if (!result.converged) {
    throw NumericalError("integrate: no convergence on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "] after " + std::to_string(result.panels) +
                         " panels (error estimate " + std::to_string(result.errors[0]) + ")");
  }
  return result.values[0];
}

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tol) {
  if (!(lo <= hi)) throw std::invalid_argument("golden_section_maximize: lo > hi");
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // Endpoints can be the maximizer (boundary MLEs); the interior probes never
  // reach them exactly.
  double best = 0.5 * (a + b);
  double best_value = f(best);
  for (double edge : {lo, hi}) {
    if (std::abs(edge - best) <= 2.0 * tol) {
      const double value = f(edge);
      if (value > best_value) {
        best = edge;
        best_value = value;
      }
    }
  }
  return best;
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_q: a must be positive");
  if (!(x >= 0.0)) throw std::invalid_argument("regularized_gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  constexpr double tol = 1e-12;
  constexpr int max_iter = 100000;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);

  if (x < a + 1.0) {
    // P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < max_iter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * tol * 1e-3) {
        return 1.0 - std::exp(log_prefactor) * sum;
      }
    }
    throw NumericalError("regularized_gamma_q: series did not converge");
  }

  // Modified Lentz for the continued fraction of Gamma(a, x).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < tol * 1e-3) return std::exp(log_prefactor) * h;
  }
  throw NumericalError("regularized_gamma_q: continued fraction did not converge");
}

}  // namespace evlab::numerics
