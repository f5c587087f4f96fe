#pragma once

// RKHS ridge group sparse estimator. The criterion over f = f0 + sum_v f_v,
// f_v in the span of the group kernel at the design points, is
//
//   (1/n) ||Y - f0 - sum_v K_v theta_v||^2
//     + sum_v gamma_v ||f_v||_n + sum_v mu_v ||f_v||_{H_v},
//
// subject to ||f_v||_{H_v} <= r_v, with ||f_v||_n = ||K_v theta_v|| / sqrt(n)
// and ||f_v||_{H_v} = sqrt(theta_v' K_v theta_v).
//
// The solver is block coordinate descent in the eigenbasis of each Gram:
// with K_v = U L U' and beta = L^(1/2) U' theta, the block objective becomes
//
//   (1/n) ||c - S beta||^2 + (gamma_v/sqrt(n)) ||S beta|| + mu_v ||beta||,
//   ||beta|| <= r_v,   c = U' (block residual),  S = L^(1/2),
//
// restricted to eigendirections with positive eigenvalues (null directions
// carry H-norm but no data fit, so the optimum never uses them). Each block
// first runs an exact group-zero optimality test (0 is optimal iff the
// least-squares pull at 0 is within the combined subdifferentials of the two
// norm penalties, a one-parameter weighted projection problem), then a
// projected gradient descent with Armijo backtracking on the ball.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gsanova/kernels.hpp"
#include "gsanova/rates.hpp"

namespace gsanova::estimator {

struct FitConfig {
  double tol_rel_objective = 1e-9;  // sweep-to-sweep relative decrease
  int max_sweeps = 500;
  int max_inner_iterations = 500;   // projected gradient steps per block
  double inner_tol = 1e-8;          // projected-gradient residual target
  double zero_threshold = 1e-10;    // ||f_v||_n below this counts as zero
  double rank_tol = 1e-12;          // relative eigenvalue cutoff per block
  std::vector<double> radius;       // r_v, broadcast to 1.0 when empty
  std::uint64_t restart_seed = 0;   // seeds the stalled-block restarts
  int max_restarts = 10;
};

struct MetaModel {
  double intercept = 0.0;
  std::vector<kernels::GroupIndex> groups;
  std::vector<Eigen::VectorXd> theta;  // length-n coefficient vector per group
  std::vector<double> norm_n;          // ||f_v||_n
  std::vector<double> norm_h;          // ||f_v||_{H_v}
  std::vector<double> radius;          // r_v the fit enforced
};

struct FitResult {
  MetaModel model;
  std::vector<double> objective_trace;  // objective after each sweep
  bool converged = false;
  int sweeps = 0;
  int binding_count = 0;                // groups with ||f_v||_H within 1e-9 of r_v
  // Final-state diagnostics, one entry per group: active groups report the
  // projected-gradient residual (zero-test margin is NaN), inactive groups
  // report the zero-test margin mu_v - dist (residual is NaN).
  std::vector<double> pg_residual;
  std::vector<double> zero_margin;
};

// Criterion value for an arbitrary model against the same Gram set; used by
// tests and oracles, so it computes norms from theta and K_v directly.
[[nodiscard]] double objective(const Eigen::VectorXd& y, const MetaModel& model,
                               const kernels::GramSet& grams,
                               const std::vector<double>& mu,
                               const std::vector<double>& gamma);

[[nodiscard]] FitResult fit(const Eigen::VectorXd& y,
                            const kernels::GramSet& grams,
                            const rates::TuningTable& tuning,
                            const FitConfig& config = {});

// Remark-style rescaling for noise level sigma: fits Y/sigma with penalties
// mu_v/sigma, gamma_v/sigma and radii r_v/sigma, then returns sigma * g.
// With sigma = 1 this is bit-identical to fit().
[[nodiscard]] FitResult rescale_fit(const Eigen::VectorXd& y, double sigma,
                                    const kernels::GramSet& grams,
                                    const rates::TuningTable& tuning,
                                    const FitConfig& config = {});

// Per-group predicted contributions at new points (columns follow
// model.groups); x_train must be the design the model was fitted on.
[[nodiscard]] Eigen::MatrixXd predict_components(const MetaModel& model,
                                                 const kernels::KernelSpec& spec,
                                                 const Eigen::MatrixXd& x_train,
                                                 const Eigen::MatrixXd& x_new);

[[nodiscard]] Eigen::VectorXd predict(const MetaModel& model,
                                      const kernels::KernelSpec& spec,
                                      const Eigen::MatrixXd& x_train,
                                      const Eigen::MatrixXd& x_new);

// Groups with ||f_v||_n above the threshold.
[[nodiscard]] std::vector<kernels::GroupIndex> support(const MetaModel& model,
                                                       double threshold = 1e-10);

// Empirical-norm shares ||f_v||_n^2 / sum_w ||f_w||_n^2. Throws
// std::invalid_argument when every group is zero.
[[nodiscard]] std::vector<double> decompose(const MetaModel& model);

}  // namespace gsanova::estimator
