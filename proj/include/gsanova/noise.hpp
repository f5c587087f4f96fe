#pragma once

// Generalized Gaussian noise family with density
//
//   pi_alpha(x) = a_alpha * exp(-|x|^alpha),  a_alpha = alpha / (2 Gamma(1/alpha)),
//
// for tail exponent alpha > 2 (alpha = 2 is allowed only in probe mode, where
// the family degenerates to a centered Gaussian baseline). Errors fed to the
// estimator are standardized: eps = Z / sigma_alpha has unit variance.
//
// Sampling goes through the exact gamma representation |Z|^alpha ~
// Gamma(1/alpha): draw G' ~ Gamma(1 + 1/alpha) and U uniform, then
// |Z| = G'^(1/alpha) * U, which avoids the U^alpha underflow of the naive
// boost and stays exact for large alpha.

#include <cstdint>
#include <vector>

#include "gsanova/rng.hpp"

namespace gsanova::noise {

struct NoiseSpec {
  double alpha = 3.0;        // tail exponent
  double sigma = 1.0;        // noise scale multiplying the unit-variance eps
  bool probe_mode = false;   // permits alpha == 2 for probe baselines

  // Validates ranges (alpha > 2, or >= 2 in probe mode; sigma > 0, finite)
  // and returns the spec. Throws std::invalid_argument otherwise.
  static NoiseSpec make(double alpha, double sigma = 1.0,
                        bool probe_mode = false);
};

// a_alpha, the density normalizing constant.
[[nodiscard]] double normalizing_constant(double alpha);

// Var(Z) = Gamma(3/alpha) / Gamma(1/alpha) for Z ~ pi_alpha.
[[nodiscard]] double variance(double alpha);

// E|Z| = Gamma(2/alpha) / Gamma(1/alpha).
[[nodiscard]] double abs_first_moment(double alpha);

// E Z^4 = Gamma(5/alpha) / Gamma(1/alpha).
[[nodiscard]] double fourth_moment(double alpha);

// Var(eps^2) for the standardized eps = Z / sigma_alpha; used by the
// verification harness to size Monte-Carlo tolerances.
[[nodiscard]] double eps_square_variance(double alpha);

// Density pi_alpha(x); symmetric in x by construction (|x| in the code path).
[[nodiscard]] double density(double alpha, double x);

// P(Z <= x) via the regularized incomplete gamma function.
[[nodiscard]] double cdf(double alpha, double x);

// P(eps <= x) for the standardized eps.
[[nodiscard]] double cdf_standardized(double alpha, double x);

// n i.i.d. draws of sigma * Z / sigma_alpha (variance sigma^2). Deterministic
// in (spec, seed) and platform independent; see rng::algorithm_id.
[[nodiscard]] std::vector<double> sample_errors(const NoiseSpec& spec,
                                                std::size_t n,
                                                std::uint64_t seed);

struct TailLogDerivative {
  double exact;     // -pi_alpha(t) / Pi_alpha([t, infinity)), tail by quadrature
  double analytic;  // -alpha * t^(alpha-1), the asymptotic hazard
};

// Log-derivative of the upper tail at t >= 0. The exact value integrates the
// tail numerically rather than reusing cdf(), so the two can cross-check.
[[nodiscard]] TailLogDerivative tail_log_derivative(double alpha, double t);

// Threshold m(alpha, rho) = (1 / (alpha rho^2))^(1/(alpha-2)) beyond which
// the analytic hazard satisfies -alpha t^(alpha-1) <= -t / rho^2. Requires
// alpha > 2 (the exponent degenerates at alpha = 2).
[[nodiscard]] double hazard_threshold(double alpha, double rho = 1.0);

}  // namespace gsanova::noise
