#pragma once

// Gauss-Legendre quadrature with cached node tables, plus a panel-doubling
// adaptive integrator for oracle-grade integrals (noise tails, normalizing
// constants). Node tables are computed once per order by Newton iteration on
// the Legendre recurrence and are accurate to machine precision.

#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace gsanova::quad {

struct Rule {
  std::vector<double> nodes;    // on (-1, 1), ascending
  std::vector<double> weights;  // sum to 2
};

// Shared per-order table; thread safe, built on first use.
[[nodiscard]] const Rule& gauss_legendre(int order);

// Single-panel integral of f over [a, b].
template <typename F>
[[nodiscard]] double panel(F&& f, double a, double b, const Rule& rule) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * acc;
}

// Composite rule over m equal panels.
template <typename F>
[[nodiscard]] double composite(F&& f, double a, double b, const Rule& rule,
                               int panels) {
  double acc = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    acc += panel(f, a + p * h, a + (p + 1) * h, rule);
  }
  return acc;
}

// Panel-doubling adaptive integral: doubles the panel count of a composite
// 16-point rule until two successive refinements agree to rel_tol (or
// abs_tol for integrals near zero). Throws on non-convergence.
[[nodiscard]] double adaptive(const std::function<double(double)>& f, double a,
                              double b, double rel_tol = 1e-12,
                              double abs_tol = 1e-300);

}  // namespace gsanova::quad
