#pragma once

// Metric-entropy and concentration probes. These are verification tools, not
// estimators: they certify covering-number sandwiches on finite point sets,
// check the Sudakov-type entropy bound in both regimes, and measure empirical
// tail slopes of smooth statistics under the generalized Gaussian law.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsanova::probes {

// Greedy farthest-point permutation of the rows of a point set. order[0] is
// row 0; order[k] is the point farthest from the first k centers and radii[k]
// is that distance (radii[0] is +infinity, the sequence is non-increasing).
struct GreedyCover {
  std::vector<std::size_t> order;
  std::vector<double> radii;
};

[[nodiscard]] GreedyCover greedy_permutation(const Eigen::MatrixXd& points);

// Number of greedy centers with insertion radius > delta. Those centers are
// pairwise more than delta apart and cover every point within delta, so the
// count is simultaneously a valid cover size and a packing size at scale
// delta.
[[nodiscard]] std::size_t greedy_size(const GreedyCover& cover, double delta);

// Exhaustive internal covering number by set-cover DP over ball bitmasks.
// Only for small sets; throws std::invalid_argument when rows > 20.
[[nodiscard]] std::size_t exact_covering_number(const Eigen::MatrixXd& points,
                                                double delta);

struct CoverResult {
  double delta = 0.0;
  std::size_t upper = 0;          // greedy proper cover size, N_pr(delta) <= upper
  std::size_t packing_lower = 0;  // greedy size at 2 delta, N(delta) >= this
  std::size_t upper_half = 0;     // greedy size at delta/2, N_pr(delta) <= this too
  std::optional<std::size_t> exact;  // exhaustive proper count, |T| <= 20 only
};

// Certified sandwich packing_lower <= N(delta) <= N_pr(delta) <= upper
// (and N_pr(delta) <= N(delta/2) <= upper_half). With proper set, small sets
// additionally get the exhaustive proper covering number.
[[nodiscard]] CoverResult covering_number(const Eigen::MatrixXd& points,
                                          double delta, bool proper = false);

struct SudakovRow {
  double delta = 0.0;
  std::size_t cover = 0;         // greedy upper bound for N(delta)
  double log_cover = 0.0;
  double bound_quadratic = 0.0;  // (2M/delta)^2
  double bound_alpha = 0.0;      // (2M/delta)^alpha
  std::string regime;            // "alpha" when delta <= 2M, else "quadratic"
  double ratio = 0.0;            // log_cover / active bound, report only
};

struct SudakovReport {
  double m_hat = 0.0;      // Monte-Carlo estimate of E sup_t <t, Z>
  double m_std_error = 0.0;
  std::size_t n_mc = 0;
  std::vector<SudakovRow> rows;
};

// Z has i.i.d. raw generalized Gaussian coordinates with exponent alpha
// (alpha = 2 allowed here as the Gaussian baseline).
[[nodiscard]] SudakovReport sudakov_probe(const Eigen::MatrixXd& points,
                                          double alpha,
                                          const std::vector<double>& deltas,
                                          std::size_t n_mc, std::uint64_t seed);

enum class Statistic { max, euclidean_norm, softmax_free, constant };

[[nodiscard]] Statistic statistic_from_string(const std::string& name);
[[nodiscard]] std::string to_string(Statistic statistic);

struct ConcentrationRow {
  double u = 0.0;           // deviation level (quantile of |phi - mean|)
  double tail = 0.0;        // empirical P(|phi(Z) - mean| >= u)
  std::size_t exceedances = 0;
};

struct ConcentrationReport {
  Statistic statistic = Statistic::max;
  double alpha = 0.0;
  std::size_t dim = 0;
  std::size_t n_mc = 0;
  std::vector<ConcentrationRow> rows;  // quantile grid, >= 30 exceedances each
  double slope = 0.0;       // LS fit of log tail against u^2
  double intercept = 0.0;
  double r2 = 0.0;
  bool degenerate = false;  // too few usable rows (constant statistic)
  bool gaussian_baseline_ok = false;  // slope <= -0.4, vacuously false when degenerate
};

// Tail of phi(Z) - E phi(Z) for Z with i.i.d. raw coordinates from the
// exponent-alpha law. A sub-Gaussian statistic shows log-tail decay at least
// quadratic in u, so the fitted slope against u^2 sits below zero; the
// baseline check uses the conservative cutoff -0.4.
[[nodiscard]] ConcentrationReport concentration_probe(double alpha,
                                                      std::size_t dim,
                                                      Statistic statistic,
                                                      std::size_t n_mc,
                                                      std::uint64_t seed);

}  // namespace gsanova::probes
