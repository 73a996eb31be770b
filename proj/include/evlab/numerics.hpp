#pragma once
// Numerical building blocks: batched adaptive quadrature, golden-section
// search, and the regularized incomplete gamma function.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace evlab::numerics {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  std::size_t max_panels = 4000;
};

struct QuadratureResult {
  std::vector<double> values;
  std::vector<double> errors;
  std::size_t panels = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Scratch storage for integrate_batched, reusable across calls to avoid
/// reallocating on every integral. Not shareable between threads.
struct QuadratureWorkspace {
  std::vector<double> lo, hi, value, error, nodes, samples, tol, score, split_lo, split_hi;
  std::vector<double> rule_value, rule_error, kron, gauss, abs_sum, asc;
  std::vector<std::size_t> order;
  std::vector<char> split;
};

/// Fills values[c * nodes.size() + k] with component c of the integrand at
/// nodes[k]. Node order is unspecified. Called with many nodes at once so the
/// integrand can vectorize.
using BatchIntegrand =
    std::function<void(std::span<const double> nodes, std::span<double> values)>;

/// Adaptive 15-point Gauss-Kronrod over the partition given by `breakpoints`
/// (sorted, at least two). All components share one mesh. Each round bisects,
/// in one integrand call, the panels carrying the largest error relative to
/// the per-component target max(abs_tol, rel_tol * |I_c|).
/// Does not throw on non-convergence; check `converged`.
QuadratureResult integrate_batched(const BatchIntegrand& f, std::size_t components,
                                   std::span<const double> breakpoints,
                                   const QuadratureOptions& options = {},
                                   QuadratureWorkspace* workspace = nullptr);

/// Scalar convenience wrapper over [a, b]. Throws NumericalError when the
/// tolerance is not met within options.max_panels.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options = {});

/// Maximizer of a unimodal f on [lo, hi] to within `tol` in the argument.
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tol = 1e-8);

/// Q(a, x) = Gamma(a, x) / Gamma(a): series below x = a + 1, Lentz continued
/// fraction above, each to 1e-12 relative. Throws NumericalError if either
/// expansion fails to converge.
double regularized_gamma_q(double a, double x);

}  // namespace evlab::numerics
