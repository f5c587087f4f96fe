#include "gsanova/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsanova::rates {

void RateParams::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("RateParams: delta must be > 0");
  if (!(c1 > 0.0)) throw std::invalid_argument("RateParams: c1 must be > 0");
  if (!(c2 >= 0.0) || !(c3 >= 0.0)) {
    throw std::invalid_argument("RateParams: c2, c3 must be >= 0");
  }
  if (beta && !(*beta > 0.0 && *beta < 0.5)) {
    throw std::invalid_argument("RateParams: beta must lie in (0, 1/2)");
  }
}

double q_function(const Eigen::VectorXd& omega, std::size_t n, double t) {
  if (n == 0) throw std::invalid_argument("q_function: n must be positive");
  if (t < 0.0) throw std::invalid_argument("q_function: t must be >= 0");
  const double t2 = t * t;
  double acc = 0.0;
  for (Eigen::Index l = 0; l < omega.size(); ++l) {
    acc += std::min(t2, std::max(omega(l), 0.0));
  }
  return std::sqrt(5.0 * acc / static_cast<double>(n));
}

double critical_radius(const Eigen::VectorXd& omega, std::size_t n, double delta,
                       double tol) {
  if (!(delta > 0.0)) throw std::invalid_argument("critical_radius: delta > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("critical_radius: tol > 0");
  const double omega_max = omega.size() ? omega.maxCoeff() : 0.0;
  if (omega_max <= 0.0) return 0.0;

  // ratio(t) = Q(t)/t^2 is non-increasing: bisect the crossing of delta.
  const auto ratio = [&](double t) { return q_function(omega, n, t) / (t * t); };
  double lo = 1e-12;
  double hi = 10.0 * std::sqrt(omega_max);  // Q saturates beyond sqrt(omega_max)
  if (ratio(lo) <= delta) return lo;
  while (ratio(hi) > delta) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("critical_radius: no crossing found");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) <= delta ? hi : lo) = mid;
  }
  return hi;
}

std::vector<double> TuningTable::mu() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.mu);
  return out;
}

std::vector<double> TuningTable::gamma() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.gamma);
  return out;
}

TuningTable make_tuning_table(const kernels::GramSet& grams,
                              const RateParams& params) {
  return make_tuning_table_scaled(
      grams, params, std::vector<double>(grams.groups.size(), 1.0), 1.0);
}

TuningTable make_tuning_table_scaled(const kernels::GramSet& grams,
                                     const RateParams& params,
                                     const std::vector<double>& radius,
                                     double sigma) {
  params.validate();
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("make_tuning_table_scaled: sigma must be > 0");
  }
  if (radius.size() != grams.groups.size()) {
    throw std::invalid_argument("make_tuning_table_scaled: radius size mismatch");
  }
  const auto n = static_cast<std::size_t>(grams.n());
  const int d = grams.spec.dimension();
  const double floor_value =
      params.floor == RateParams::Floor::dims
          ? std::sqrt(static_cast<double>(d) / static_cast<double>(n))
          : std::sqrt(2.0 * std::log(static_cast<double>(d)) /
                      static_cast<double>(n));

  TuningTable table;
  table.params = params;
  table.n = n;
  table.d = d;
  table.sigma = sigma;
  table.radius = radius;
  table.rows.reserve(grams.groups.size());
  for (std::size_t g = 0; g < grams.groups.size(); ++g) {
    const auto& gg = grams.groups[g];
    if (gg.spectrum.size() == 0) {
      throw std::invalid_argument("make_tuning_table_scaled: missing spectrum");
    }
    const double r = radius[g];
    if (!(r > 0.0)) {
      throw std::invalid_argument("make_tuning_table_scaled: radius must be > 0");
    }
    const double u = (r / sigma) * (r / sigma);
    GroupTuning row;
    row.group = gg.group;
    row.nu_empirical = critical_radius(gg.spectrum * u, n, params.delta);
    row.lambda = std::max(row.nu_empirical, floor_value);
    row.mu = params.c1 * row.lambda * row.lambda * sigma * sigma / r;
    row.gamma = params.c1 * row.lambda * sigma;
    table.rows.push_back(row);
  }
  return table;
}

AssumptionReport assumption_report(
    const TuningTable& table,
    const std::optional<std::vector<kernels::GroupIndex>>& support, double alpha,
    double alpha_prime) {
  if (!(alpha > 2.0)) {
    throw std::invalid_argument("assumption_report: alpha must be > 2");
  }
  if (!(alpha_prime > 0.0)) {
    throw std::invalid_argument("assumption_report: alpha_prime must be > 0");
  }
  AssumptionReport report;
  report.c1_in_theorem_range = table.params.c1_in_theorem_range();

  const auto n = static_cast<double>(table.n);
  report.nlog_ok = true;
  for (const auto& row : table.rows) {
    GroupAssumptionRow a;
    a.group = row.group;
    a.lambda = row.lambda;
    // (a) n lambda^2 >= -c2 log(lambda); trivially true for lambda >= 1.
    a.nlog_margin = n * row.lambda * row.lambda +
                    table.params.c2 * std::log(row.lambda);
    a.nlog_ok = a.nlog_margin >= 0.0;
    report.nlog_ok = report.nlog_ok && a.nlog_ok;
    report.rows.push_back(a);
  }

  if (support && table.params.beta) {
    const double beta = *table.params.beta;
    double sum = 0.0;
    for (const auto& v : *support) {
      for (const auto& row : table.rows) {
        if (row.group == v) {
          sum += row.lambda * row.lambda;
          break;
        }
      }
    }
    const double bound = table.params.c3 * std::pow(n, 2.0 * beta - 1.0);
    report.sparsity_margin = bound - sum;
    report.sparsity_ok = report.sparsity_margin >= 0.0;
    report.sparsity_evaluated = true;
  }

  report.regularity_margin = alpha_prime - (alpha - 2.0) / 4.0;
  report.regularity_ok = report.regularity_margin > 0.0;
  return report;
}

}  // namespace gsanova::rates
