#pragma once

// Critical radii and rate-driven tuning. For a group with Gram spectrum
// omega (eigenvalues of K_v / n) the empirical critical radius nu is the
// smallest t with
//
//   Q_{n,v}(t) = sqrt( (5/n) sum_l min(t^2, omega_l) ) <= Delta t^2,
//
// found by bisection on the non-increasing ratio Q(t)/t^2. Penalties follow
// lambda = max(nu, floor), mu = c1 lambda^2, gamma = c1 lambda, with the
// dimension floor sqrt(d/n) or the interaction-limited sqrt(2 log(d)/n).
// The theory wants c1 > 10 + 4 Delta; smaller values are legal here for
// desk-scale calibration but are flagged in every output that carries them.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gsanova/kernels.hpp"

namespace gsanova::rates {

struct RateParams {
  double delta = 1.0;
  double c1 = 15.0;  // default 10 + 4*delta + 1, minimal theorem margin
  double c2 = 1.0;   // diagnostic-only constants for the assumption report
  double c3 = 1.0;
  std::optional<double> beta;  // sparsity exponent in (0, 1/2), report-only
  enum class Floor { dims, log_dims } floor = Floor::dims;

  void validate() const;  // throws std::invalid_argument on bad ranges
  [[nodiscard]] bool c1_in_theorem_range() const { return c1 > 10.0 + 4.0 * delta; }
};

// Q_{n,v}(t) for a clipped descending spectrum.
[[nodiscard]] double q_function(const Eigen::VectorXd& omega, std::size_t n,
                                double t);

// Smallest t with Q(t) <= delta t^2, absolute tolerance tol. Returns 0 when
// the spectrum is empty or all zero.
[[nodiscard]] double critical_radius(const Eigen::VectorXd& omega, std::size_t n,
                                     double delta, double tol = 1e-9);

struct GroupTuning {
  kernels::GroupIndex group;
  double nu_empirical = 0.0;  // critical radius from the empirical spectrum
  double lambda = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
};

struct TuningTable {
  std::vector<GroupTuning> rows;
  RateParams params;
  std::size_t n = 0;
  int d = 0;
  double sigma = 1.0;                 // noise scale the penalties assume
  std::vector<double> radius;         // F-ball radii r_v the penalties assume

  [[nodiscard]] std::vector<double> mu() const;
  [[nodiscard]] std::vector<double> gamma() const;
};

// Tuning for the unit problem (sigma = 1, r_v = 1).
[[nodiscard]] TuningTable make_tuning_table(const kernels::GramSet& grams,
                                            const RateParams& params);

// General (sigma, r_v) tuning: nu is computed from the u-scaled spectrum
// with u = r_v^2 / sigma^2, and penalties are mu_v = c1 lambda^2 sigma^2 / r_v,
// gamma_v = c1 lambda sigma, matching the rescaled estimation problem that
// rescale_fit solves. With sigma = 1 and r_v = 1 this reduces exactly to
// make_tuning_table.
[[nodiscard]] TuningTable make_tuning_table_scaled(const kernels::GramSet& grams,
                                                   const RateParams& params,
                                                   const std::vector<double>& radius,
                                                   double sigma);

struct GroupAssumptionRow {
  kernels::GroupIndex group;
  double lambda = 0.0;
  double nlog_margin = 0.0;  // n lambda^2 + c2 log(lambda), >= 0 when ok
  bool nlog_ok = false;
};

struct AssumptionReport {
  std::vector<GroupAssumptionRow> rows;
  bool nlog_ok = false;            // (a) holds for every group
  bool sparsity_ok = false;        // (b) sum_{v in S} lambda^2 <= c3 n^(2 beta - 1)
  bool sparsity_evaluated = false; // false when beta or support is absent
  double sparsity_margin = 0.0;
  bool regularity_ok = false;      // (c) alpha' > (alpha - 2) / 4
  double regularity_margin = 0.0;
  bool c1_in_theorem_range = false;
};

// Diagnostic-only report; nothing here feeds back into estimation.
[[nodiscard]] AssumptionReport assumption_report(
    const TuningTable& table,
    const std::optional<std::vector<kernels::GroupIndex>>& support,
    double alpha, double alpha_prime);

}  // namespace gsanova::rates
