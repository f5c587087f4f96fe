#include "gsanova/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gsanova/noise.hpp"
#include "gsanova/stats.hpp"

namespace gsanova::probes {

namespace {

// Raw draws Z ~ pi_alpha (not standardized): scale the unit-variance errors
// back up by sigma_alpha.
Eigen::MatrixXd sample_raw(double alpha, std::size_t rows, std::size_t cols,
                           std::uint64_t seed) {
  const auto spec = noise::NoiseSpec::make(alpha, 1.0, /*probe_mode=*/true);
  const double sigma_alpha = std::sqrt(noise::variance(alpha));
  const auto eps = noise::sample_errors(spec, rows * cols, seed);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      z(i, j) = sigma_alpha * eps[k++];
    }
  }
  return z;
}

}  // namespace

GreedyCover greedy_permutation(const Eigen::MatrixXd& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) throw std::invalid_argument("greedy_permutation: empty point set");
  GreedyCover cover;
  cover.order.reserve(n);
  cover.radii.reserve(n);

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> used(n, false);
  std::size_t current = 0;
  cover.order.push_back(0);
  cover.radii.push_back(std::numeric_limits<double>::infinity());
  used[0] = true;

  for (std::size_t step = 1; step < n; ++step) {
    // Relax distances against the center added last, then pick the farthest
    // remaining point (lowest index on ties, for determinism).
    double best = -1.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double d = (points.row(i) - points.row(static_cast<Eigen::Index>(
                                            current)))
                           .norm();
      dist[i] = std::min(dist[i], d);
      if (dist[i] > best) {
        best = dist[i];
        pick = i;
      }
    }
    cover.order.push_back(pick);
    cover.radii.push_back(best);
    used[pick] = true;
    current = pick;
  }
  return cover;
}

std::size_t greedy_size(const GreedyCover& cover, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("greedy_size: delta >= 0");
  std::size_t count = 0;
  for (double r : cover.radii) {
    if (r > delta) ++count;
  }
  return std::max<std::size_t>(count, 1);  // radii[0] is infinite anyway
}

std::size_t exact_covering_number(const Eigen::MatrixXd& points, double delta) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) throw std::invalid_argument("exact_covering_number: empty set");
  if (n > 20) {
    throw std::invalid_argument(
        "exact_covering_number: exhaustive search limited to 20 points");
  }
  // ball[i] = bitmask of points within delta of point i; a small absolute
  // slack absorbs roundoff in the pairwise distances.
  const double slack = delta + 1e-12;
  std::vector<std::uint32_t> ball(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (points.row(static_cast<Eigen::Index>(i)) -
                        points.row(static_cast<Eigen::Index>(j)))
                           .norm();
      if (d <= slack) ball[i] |= (1u << j);
    }
  }
  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  std::vector<int> dp(static_cast<std::size_t>(full) + 1, -1);
  dp[0] = 0;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    if (dp[mask] < 0) continue;
    if (mask == full) break;
    // Cover the lowest uncovered point with every candidate ball.
    std::uint32_t missing = 0;
    while (mask & (1u << missing)) ++missing;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(ball[i] & (1u << missing))) continue;
      const std::uint32_t next = mask | ball[i];
      if (dp[next] < 0 || dp[next] > dp[mask] + 1) dp[next] = dp[mask] + 1;
    }
  }
  return static_cast<std::size_t>(dp[full]);
}

CoverResult covering_number(const Eigen::MatrixXd& points, double delta,
                            bool proper) {
  if (!(delta > 0.0)) throw std::invalid_argument("covering_number: delta > 0");
  const GreedyCover cover = greedy_permutation(points);
  CoverResult result;
  result.delta = delta;
  result.upper = greedy_size(cover, delta);
  result.packing_lower = greedy_size(cover, 2.0 * delta);
  result.upper_half = greedy_size(cover, 0.5 * delta);
  if (proper && points.rows() <= 20) {
    result.exact = exact_covering_number(points, delta);
  }
  return result;
}

SudakovReport sudakov_probe(const Eigen::MatrixXd& points, double alpha,
                            const std::vector<double>& deltas, std::size_t n_mc,
                            std::uint64_t seed) {
  if (points.rows() == 0) {
    throw std::invalid_argument("sudakov_probe: empty point set");
  }
  if (n_mc < 1000) throw std::invalid_argument("sudakov_probe: n_mc >= 1000");

  const auto dim = static_cast<std::size_t>(points.cols());
  const Eigen::MatrixXd z = sample_raw(alpha, n_mc, dim, seed);
  double mean = 0.0, second = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double sup = (points * z.row(i).transpose()).maxCoeff();
    mean += sup;
    second += sup * sup;
  }
  const double m = static_cast<double>(n_mc);
  mean /= m;
  const double var = std::max(0.0, second / m - mean * mean);

  SudakovReport report;
  report.m_hat = mean;
  report.m_std_error = std::sqrt(var / m);
  report.n_mc = n_mc;

  const GreedyCover cover = greedy_permutation(points);
  for (double delta : deltas) {
    if (!(delta > 0.0)) {
      throw std::invalid_argument("sudakov_probe: deltas must be positive");
    }
    SudakovRow row;
    row.delta = delta;
    row.cover = greedy_size(cover, delta);
    row.log_cover = std::log(static_cast<double>(row.cover));
    const double base = 2.0 * report.m_hat / delta;
    row.bound_quadratic = base * base;
    row.bound_alpha = std::pow(base, alpha);
    row.regime = delta <= 2.0 * report.m_hat ? "alpha" : "quadratic";
    const double active =
        row.regime == "alpha" ? row.bound_alpha : row.bound_quadratic;
    row.ratio = active > 0.0 ? row.log_cover / active
                             : std::numeric_limits<double>::quiet_NaN();
    report.rows.push_back(std::move(row));
  }
  return report;
}

Statistic statistic_from_string(const std::string& name) {
  if (name == "max") return Statistic::max;
  if (name == "euclidean_norm") return Statistic::euclidean_norm;
  if (name == "softmax_free") return Statistic::softmax_free;
  if (name == "constant") return Statistic::constant;
  throw std::invalid_argument("unknown probe statistic: " + name);
}

std::string to_string(Statistic statistic) {
  switch (statistic) {
    case Statistic::max: return "max";
    case Statistic::euclidean_norm: return "euclidean_norm";
    case Statistic::softmax_free: return "softmax_free";
    case Statistic::constant: return "constant";
  }
  throw std::logic_error("to_string(Statistic): bad enum value");
}

namespace {

double evaluate_statistic(Statistic statistic, const Eigen::VectorXd& z) {
  switch (statistic) {
    case Statistic::max:
      return z.maxCoeff();
    case Statistic::euclidean_norm:
      return z.norm();
    case Statistic::softmax_free: {
      // logsumexp - log(dim), stabilized by the max.
      const double hi = z.maxCoeff();
      double acc = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) acc += std::exp(z[i] - hi);
      return hi + std::log(acc) - std::log(static_cast<double>(z.size()));
    }
    case Statistic::constant:
      return 1.0;
  }
  throw std::logic_error("evaluate_statistic: bad enum value");
}

}  // namespace

ConcentrationReport concentration_probe(double alpha, std::size_t dim,
                                        Statistic statistic, std::size_t n_mc,
                                        std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("concentration_probe: dim >= 1");
  if (n_mc < 1000) {
    throw std::invalid_argument(
        "concentration_probe: insufficient data, n_mc >= 1000 for the grid");
  }
  const Eigen::MatrixXd z = sample_raw(alpha, n_mc, dim, seed);
  std::vector<double> values(n_mc);
  double mean = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    values[i] =
        evaluate_statistic(statistic, z.row(static_cast<Eigen::Index>(i)));
    mean += values[i];
  }
  mean /= static_cast<double>(n_mc);

  std::vector<double> deviations(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    deviations[i] = std::abs(values[i] - mean);
  }
  std::vector<double> sorted = deviations;
  std::sort(sorted.begin(), sorted.end());

  ConcentrationReport report;
  report.statistic = statistic;
  report.alpha = alpha;
  report.dim = dim;
  report.n_mc = n_mc;

  const double quantiles[] = {0.50, 0.60, 0.70,  0.80,  0.90,
                              0.95, 0.975, 0.99, 0.995, 0.999};
  std::vector<double> xs, ys;
  for (double q : quantiles) {
    const auto idx = std::min<std::size_t>(
        n_mc - 1, static_cast<std::size_t>(q * static_cast<double>(n_mc)));
    const double u = sorted[idx];
    if (!(u > 0.0)) continue;  // degenerate statistic, no tail signal
    std::size_t exceed = 0;
    for (double d : deviations) {
      if (d >= u) ++exceed;
    }
    if (exceed < 30) continue;
    if (!report.rows.empty() && report.rows.back().u == u) continue;
    ConcentrationRow row;
    row.u = u;
    row.exceedances = exceed;
    row.tail = static_cast<double>(exceed) / static_cast<double>(n_mc);
    xs.push_back(u * u);
    ys.push_back(std::log(row.tail));
    report.rows.push_back(row);
  }

  if (report.rows.size() < 2) {
    report.degenerate = true;
    report.slope = std::numeric_limits<double>::quiet_NaN();
    report.intercept = std::numeric_limits<double>::quiet_NaN();
    report.r2 = 0.0;
    report.gaussian_baseline_ok = false;
    return report;
  }
  const stats::LineFit fit = stats::linear_fit(xs, ys);
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  report.r2 = fit.r2;
  report.gaussian_baseline_ok = fit.slope <= -0.4;
  return report;
}

}  // namespace gsanova::probes
