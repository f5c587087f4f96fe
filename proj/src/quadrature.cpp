#include "gsanova/quadrature.hpp"

namespace gsanova::quad {

namespace {

Rule build_rule(int order) {
  // Newton iteration on P_n with the Chebyshev initial guess. Nodes come out
  // pairwise symmetric; we fill both halves from one sweep.
  Rule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Legendre recurrence for P_n(x) and P_{n-1}(x).
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const Rule& gauss_legendre(int order) {
  if (order < 1 || order > 512) {
    throw std::invalid_argument("gauss_legendre: order out of range [1,512]");
  }
  static std::mutex mutex;
  static std::unordered_map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

double adaptive(const std::function<double(double)>& f, double a, double b,
                double rel_tol, double abs_tol) {
  const Rule& rule = gauss_legendre(16);
  double prev = composite(f, a, b, rule, 1);
  for (int panels = 2; panels <= (1 << 16); panels *= 2) {
    const double cur = composite(f, a, b, rule, panels);
    const double err = std::fabs(cur - prev);
    if (err <= rel_tol * std::fabs(cur) + abs_tol) return cur;
    prev = cur;
  }
  throw std::runtime_error("quad::adaptive: no convergence");
}

}  // namespace gsanova::quad
