#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gsanova/rates.hpp"
#include "gsanova/stats.hpp"

using namespace gsanova;

namespace {

// Population-style Brownian spectrum omega_l ~ (pi (l - 1/2))^(-2), the
// alpha' = 1 eigendecay used for the scaling-law check.
Eigen::VectorXd brownian_spectrum(int count) {
  Eigen::VectorXd omega(count);
  for (int l = 0; l < count; ++l) {
    const double freq = M_PI * (l + 0.5);
    omega[l] = 1.0 / (freq * freq);
  }
  return omega;
}

}  // namespace

TEST_SUITE("rates") {

TEST_CASE("q_function hand cases") {
  Eigen::VectorXd omega(2);
  omega << 1.0, 0.25;
  CHECK(rates::q_function(omega, 5, 0.0) == doctest::Approx(0.0));
  CHECK(rates::q_function(omega, 5, 0.5) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  // Saturation at and beyond sqrt(max omega).
  const double saturated = std::sqrt(5.0 * omega.sum() / 5.0);
  CHECK(rates::q_function(omega, 5, 1.0) ==
        doctest::Approx(saturated).epsilon(1e-12));
  CHECK(rates::q_function(omega, 5, 50.0) ==
        doctest::Approx(saturated).epsilon(1e-12));
  CHECK_THROWS_AS((void)rates::q_function(omega, 5, -0.1),
                  std::invalid_argument);

  // Nondecreasing in t.
  double previous = 0.0;
  for (double t = 0.0; t <= 2.0; t += 0.05) {
    const double q = rates::q_function(omega, 7, t);
    CHECK(q >= previous - 1e-15);
    previous = q;
  }
}

TEST_CASE("critical radius matches the single-eigenvalue analytic solution") {
  Eigen::VectorXd one(1);
  one << 1.0;
  // Q(t) = sqrt(5/n) t for t <= 1, so the fixed point is sqrt(5/n).
  for (std::size_t n : {5, 50, 500}) {
    CAPTURE(n);
    CHECK(std::abs(rates::critical_radius(one, n, 1.0) -
                   std::sqrt(5.0 / static_cast<double>(n))) < 1e-8);
  }
  CHECK(rates::critical_radius(Eigen::VectorXd::Zero(4), 10, 1.0) == 0.0);
  CHECK_THROWS_AS((void)rates::critical_radius(one, 5, 0.0),
                  std::invalid_argument);
}

TEST_CASE("critical radius monotonicity") {
  auto omega = brownian_spectrum(64);
  const double base = rates::critical_radius(omega, 100, 1.0);
  CHECK(rates::critical_radius(0.5 * omega, 100, 1.0) <= base + 1e-12);
  CHECK(rates::critical_radius(omega, 400, 1.0) <= base + 1e-12);
}

TEST_CASE("scaling law for the brownian eigendecay") {
  std::vector<double> log_n, log_nu;
  for (int p = 6; p <= 12; ++p) {
    const std::size_t n = 1ull << p;
    auto omega = brownian_spectrum(static_cast<int>(n));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_nu.push_back(std::log(rates::critical_radius(omega, n, 1.0)));
  }
  const auto fit = stats::linear_fit(log_n, log_nu);
  CHECK(fit.slope > -0.43);
  CHECK(fit.slope < -0.23);
}

TEST_CASE("tuning hand cases and the mu/gamma identity") {
  rates::RateParams params;
  params.c1 = 15.0;

  // Singleton group gram with spectrum {1} at n=100, d=4: nu = sqrt(5/100)
  // ~ 0.2236 but the dims floor sqrt(4/100) = 0.2 loses; lambda = nu here.
  // To pin the floor case exactly, use a zero spectrum so nu = 0.
  kernels::GramSet grams;
  grams.design = Eigen::MatrixXd::Zero(100, 4);
  grams.spec = kernels::KernelSpec::homogeneous(4, kernels::Family::brownian);
  kernels::GroupGram gram;
  gram.group = kernels::GroupIndex{{0}};
  gram.K = Eigen::MatrixXd::Zero(100, 100);
  gram.eigvals = Eigen::VectorXd::Zero(100);
  gram.eigvecs = Eigen::MatrixXd::Identity(100, 100);
  gram.spectrum = Eigen::VectorXd::Zero(100);
  grams.groups.push_back(gram);

  auto table = rates::make_tuning_table(grams, params);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].nu_empirical == 0.0);
  CHECK(table.rows[0].lambda == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(table.rows[0].mu == doctest::Approx(15.0 * 0.04).epsilon(1e-12));
  CHECK(table.rows[0].gamma == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(table.rows[0].mu / table.rows[0].gamma ==
        doctest::Approx(table.rows[0].lambda).epsilon(1e-12));

  // Interaction-limited floor sqrt(2 log d / n).
  params.floor = rates::RateParams::Floor::log_dims;
  grams.design = Eigen::MatrixXd::Zero(10000, 100);
  grams.spec = kernels::KernelSpec::homogeneous(100, kernels::Family::brownian);
  grams.groups[0].K = Eigen::MatrixXd::Zero(4, 4);
  grams.groups[0].eigvals = Eigen::VectorXd::Zero(4);
  grams.groups[0].eigvecs = Eigen::MatrixXd::Identity(4, 4);
  grams.groups[0].spectrum = Eigen::VectorXd::Zero(4);
  auto limited = rates::make_tuning_table(grams, params);
  CHECK(limited.rows[0].lambda ==
        doctest::Approx(std::sqrt(2.0 * std::log(100.0) / 10000.0))
            .epsilon(1e-10));
}

TEST_CASE("scaled tuning reduces to the unit problem at sigma 1 radius 1") {
  Eigen::MatrixXd design(8, 1);
  design << 0.05, 0.15, 0.3, 0.45, 0.55, 0.7, 0.85, 0.95;
  auto spec = kernels::KernelSpec::homogeneous(1, kernels::Family::brownian);
  auto grams = kernels::anova_gram(spec, design, kernels::enumerate_groups(1, 1));
  rates::RateParams params;

  auto unit = rates::make_tuning_table(grams, params);
  auto scaled = rates::make_tuning_table_scaled(grams, params, {1.0}, 1.0);
  REQUIRE(unit.rows.size() == scaled.rows.size());
  for (std::size_t g = 0; g < unit.rows.size(); ++g) {
    CHECK(unit.rows[g].nu_empirical == scaled.rows[g].nu_empirical);
    CHECK(unit.rows[g].mu == scaled.rows[g].mu);
    CHECK(unit.rows[g].gamma == scaled.rows[g].gamma);
  }

  // Remark-style scaling: nu from the u-scaled spectrum, penalties from
  // mu = c1 lambda^2 sigma^2 / r and gamma = c1 lambda sigma.
  const double sigma = 0.25, r = 4.0;
  auto general = rates::make_tuning_table_scaled(grams, params, {r}, sigma);
  const double u = r * r / (sigma * sigma);
  Eigen::VectorXd scaled_omega = u * grams.at(0).spectrum;
  const double nu_u = rates::critical_radius(scaled_omega, 8, params.delta);
  const double lambda_u = std::max(nu_u, std::sqrt(1.0 / 8.0));
  CHECK(general.rows[0].nu_empirical == doctest::Approx(nu_u).epsilon(1e-12));
  CHECK(general.rows[0].mu ==
        doctest::Approx(params.c1 * lambda_u * lambda_u * sigma * sigma / r)
            .epsilon(1e-12));
  CHECK(general.rows[0].gamma ==
        doctest::Approx(params.c1 * lambda_u * sigma).epsilon(1e-12));
}

TEST_CASE("rate params validation and theorem range") {
  rates::RateParams params;
  CHECK(params.c1_in_theorem_range());  // default 15 > 10 + 4
  params.c1 = 2.0;
  CHECK_FALSE(params.c1_in_theorem_range());
  CHECK_NOTHROW(params.validate());  // desk-scale c1 is legal, only flagged

  params.delta = 0.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.delta = 1.0;
  params.beta = 0.7;  // outside (0, 1/2)
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("assumption report diagnostics") {
  kernels::GramSet grams;
  grams.design = Eigen::MatrixXd::Zero(100, 2);
  grams.spec = kernels::KernelSpec::homogeneous(2, kernels::Family::brownian);
  for (int g = 0; g < 2; ++g) {
    kernels::GroupGram gram;
    gram.group = kernels::GroupIndex{{g}};
    gram.K = Eigen::MatrixXd::Zero(4, 4);
    gram.eigvals = Eigen::VectorXd::Zero(4);
    gram.eigvecs = Eigen::MatrixXd::Identity(4, 4);
    gram.spectrum = Eigen::VectorXd::Zero(4);
    grams.groups.push_back(gram);
  }
  rates::RateParams params;
  params.beta = 0.25;
  auto table = rates::make_tuning_table(grams, params);

  // lambda = sqrt(2/100) ~= 0.141: n lambda^2 = 2 >= -log(lambda) ~ 1.96.
  auto report = rates::assumption_report(
      table, std::optional<std::vector<kernels::GroupIndex>>{{grams.groups[0].group}},
      3.0, 1.0);
  CHECK(report.nlog_ok);
  CHECK(report.sparsity_evaluated);
  CHECK(report.regularity_ok);  // alpha' = 1 > (3 - 2) / 4
  CHECK(report.c1_in_theorem_range);

  auto heavy = rates::assumption_report(table, std::nullopt, 8.0, 1.0);
  CHECK_FALSE(heavy.regularity_ok);  // 1 < (8 - 2) / 4
  CHECK_FALSE(heavy.sparsity_evaluated);
}

}  // TEST_SUITE
