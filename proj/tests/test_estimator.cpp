#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "gsanova/bench.hpp"
#include "gsanova/estimator.hpp"
#include "gsanova/kernels.hpp"
#include "gsanova/rates.hpp"
#include "oracles.hpp"

using namespace gsanova;
namespace oracle = gsanova::test_oracles;

namespace {

// Identity-gram set for hand-checkable objective values.
kernels::GramSet identity_grams(int n) {
  kernels::GramSet grams;
  grams.design = Eigen::MatrixXd::Zero(n, 1);
  grams.spec = kernels::KernelSpec::homogeneous(1, kernels::Family::brownian);
  kernels::GroupGram gram;
  gram.group = kernels::GroupIndex{{0}};
  gram.K = Eigen::MatrixXd::Identity(n, n);
  gram.eigvals = Eigen::VectorXd::Ones(n);
  gram.eigvecs = Eigen::MatrixXd::Identity(n, n);
  gram.spectrum = Eigen::VectorXd::Ones(n) / double(n);
  grams.groups.push_back(gram);
  return grams;
}

kernels::GramSet brownian_grams(const Eigen::MatrixXd& design, int max_order) {
  auto spec = kernels::KernelSpec::homogeneous(
      static_cast<int>(design.cols()), kernels::Family::brownian);
  return kernels::anova_gram(
      spec, design,
      kernels::enumerate_groups(static_cast<int>(design.cols()), max_order));
}

rates::TuningTable manual_tuning(const kernels::GramSet& grams, double mu,
                                 double gamma) {
  rates::TuningTable table;
  table.n = static_cast<std::size_t>(grams.n());
  table.d = grams.spec.dimension();
  for (const auto& gram : grams.groups) {
    rates::GroupTuning row;
    row.group = gram.group;
    row.mu = mu;
    row.gamma = gamma;
    row.lambda = gamma;
    table.rows.push_back(row);
    table.radius.push_back(1.0);
  }
  return table;
}

Eigen::MatrixXd fixed_design(std::mt19937_64& rng, int n, int d) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd design(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) design(i, j) = unif(rng);
  return design;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("objective hand cases") {
  auto grams = identity_grams(2);
  Eigen::VectorXd y(2);
  y << 1.0, 1.0;

  estimator::MetaModel model;
  model.intercept = 0.0;
  model.groups = {grams.groups[0].group};
  model.theta = {Eigen::VectorXd::Zero(2)};
  CHECK(estimator::objective(y, model, grams, {1.0}, {1.0}) ==
        doctest::Approx(y.squaredNorm() / 2.0).epsilon(1e-12));

  model.theta[0] << 1.0, 0.0;
  CHECK(estimator::objective(y, model, grams, {1.0}, {1.0}) ==
        doctest::Approx(0.5 + 1.0 / std::sqrt(2.0) + 1.0).epsilon(1e-12));
  CHECK(estimator::objective(y, model, grams, {0.0}, {0.0}) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero response gives the zero model") {
  std::mt19937_64 rng(1);
  auto grams = brownian_grams(fixed_design(rng, 10, 2), 1);
  auto tuning = rates::make_tuning_table(grams, rates::RateParams{});
  auto result = estimator::fit(Eigen::VectorXd::Zero(10), grams, tuning);
  CHECK(result.model.intercept == 0.0);
  CHECK(estimator::support(result.model).empty());
  CHECK(result.objective_trace.back() == doctest::Approx(0.0));
}

TEST_CASE("huge penalties empty the active set exactly") {
  std::mt19937_64 rng(2);
  auto grams = brownian_grams(fixed_design(rng, 12, 2), 2);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y[i] = std::sin(2.5 * i) + 0.5;

  auto tuning = manual_tuning(grams, 1e6, 1e6);
  auto result = estimator::fit(y, grams, tuning);
  CHECK(estimator::support(result.model).empty());
  CHECK(result.model.intercept == y.mean());
  const double variance = (y.array() - y.mean()).square().sum() / 12.0;
  CHECK(result.objective_trace.back() ==
        doctest::Approx(variance).epsilon(1e-12));
}

TEST_CASE("objective matches the projected subgradient oracle on tiny instances") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int instance = 0; instance < 5; ++instance) {
    CAPTURE(instance);
    auto grams = brownian_grams(fixed_design(rng, 6, 2), 1);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y[i] = 2.0 * unif(rng) - 1.0;
    const double mu = 0.02 + 0.2 * unif(rng);
    const double gamma = 0.02 + 0.2 * unif(rng);

    auto tuning = manual_tuning(grams, mu, gamma);
    auto result = estimator::fit(y, grams, tuning);
    REQUIRE(result.converged);
    const double fitted = estimator::objective(
        y, result.model, grams, {mu, mu}, {gamma, gamma});
    const double best = oracle::subgradient_best_objective(
        y, grams, {mu, mu}, {gamma, gamma}, {1.0, 1.0}, 20, 100000,
        900 + instance);
    CHECK(std::abs(fitted - best) <= 1e-3 * std::max(1e-3, std::abs(best)));
  }
}

TEST_CASE("descent, feasibility, and stationarity diagnostics") {
  std::mt19937_64 rng(4);
  auto design = fixed_design(rng, 48, 3);
  auto grams = brownian_grams(design, 2);
  Eigen::VectorXd y(48);
  for (int i = 0; i < 48; ++i)
    y[i] = std::sin(2.0 * M_PI * design(i, 0)) + 0.3 * design(i, 1) +
           0.05 * std::sin(20.0 * i);

  auto tuning = manual_tuning(grams, 0.02, 0.05);
  auto result = estimator::fit(y, grams, tuning);
  REQUIRE(result.converged);
  for (std::size_t s = 1; s < result.objective_trace.size(); ++s)
    CHECK(result.objective_trace[s] <= result.objective_trace[s - 1] + 1e-12);
  for (std::size_t g = 0; g < result.model.groups.size(); ++g) {
    CHECK(result.model.norm_h[g] <= result.model.radius[g] + 1e-8);
    if (result.model.norm_n[g] > 1e-10) {
      CHECK(result.pg_residual[g] < 1e-5);
    } else {
      CHECK(result.zero_margin[g] >= 0.0);
    }
  }
}

TEST_CASE("joint permutation leaves objective and predictions unchanged") {
  std::mt19937_64 rng(5);
  auto design = fixed_design(rng, 20, 2);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y[i] = std::cos(3.0 * i) * (1.0 + 0.1 * i);

  std::vector<int> perm(20);
  for (int i = 0; i < 20; ++i) perm[i] = (7 * i + 3) % 20;
  Eigen::MatrixXd p_design(20, 2);
  Eigen::VectorXd p_y(20);
  for (int i = 0; i < 20; ++i) {
    p_design.row(i) = design.row(perm[i]);
    p_y[i] = y[perm[i]];
  }

  auto grams = brownian_grams(design, 1);
  auto p_grams = brownian_grams(p_design, 1);
  auto tuning = manual_tuning(grams, 0.05, 0.05);
  auto base = estimator::fit(y, grams, tuning);
  auto moved = estimator::fit(p_y, p_grams, tuning);
  CHECK(base.objective_trace.back() ==
        doctest::Approx(moved.objective_trace.back()).epsilon(1e-10));

  auto queries = fixed_design(rng, 5, 2);
  auto from_base =
      estimator::predict(base.model, grams.spec, design, queries);
  auto from_moved =
      estimator::predict(moved.model, p_grams.spec, p_design, queries);
  for (int i = 0; i < 5; ++i)
    CHECK(from_base[i] == doctest::Approx(from_moved[i]).epsilon(1e-10));
}

TEST_CASE("predict reproduces training contributions and kernel sections") {
  std::mt19937_64 rng(6);
  auto design = fixed_design(rng, 14, 2);
  auto grams = brownian_grams(design, 2);
  Eigen::VectorXd y(14);
  for (int i = 0; i < 14; ++i) y[i] = std::sin(1.7 * i);
  auto tuning = manual_tuning(grams, 0.01, 0.02);
  auto result = estimator::fit(y, grams, tuning);

  auto contributions = estimator::predict_components(
      result.model, grams.spec, design, design);
  for (std::size_t g = 0; g < grams.groups.size(); ++g) {
    Eigen::VectorXd want = grams.at(g).K * result.model.theta[g];
    for (int i = 0; i < 14; ++i)
      CHECK(contributions(i, g) == doctest::Approx(want[i]).epsilon(1e-10));
  }

  // One-hot theta evaluates the kernel section itself.
  estimator::MetaModel one_hot;
  one_hot.intercept = 0.25;
  one_hot.groups = {grams.groups[0].group};
  one_hot.theta = {Eigen::VectorXd::Zero(14)};
  one_hot.theta[0][3] = 1.0;
  auto centered = kernels::center_kernel(grams.spec, 0);
  Eigen::MatrixXd query(1, 2);
  query << 0.42, 0.9;
  auto value = estimator::predict(one_hot, grams.spec, design, query);
  CHECK(value[0] ==
        doctest::Approx(0.25 + centered(0.42, design(3, 0))).epsilon(1e-10));

  estimator::MetaModel constant;
  constant.intercept = -1.5;
  auto flat = estimator::predict(constant, grams.spec, design, query);
  CHECK(flat[0] == doctest::Approx(-1.5));
}

TEST_CASE("support thresholding and decompose shares") {
  estimator::MetaModel model;
  model.groups = {kernels::GroupIndex{{0}}, kernels::GroupIndex{{1}},
                  kernels::GroupIndex{{0, 1}}};
  model.theta = {Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2),
                 Eigen::VectorXd::Ones(2)};
  model.norm_n = {0.5, 0.02, 0.0};
  model.norm_h = {1.0, 0.5, 0.0};

  CHECK(estimator::support(model).size() == 2);
  CHECK(estimator::support(model, 0.1).size() == 1);
  CHECK(estimator::support(model, 0.01).size() == 2);

  auto shares = estimator::decompose(model);
  REQUIRE(shares.size() == 3);
  CHECK(shares[0] + shares[1] + shares[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(shares[0] == doctest::Approx(0.25 / (0.25 + 0.0004)).epsilon(1e-12));

  model.norm_n = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS((void)estimator::decompose(model), std::invalid_argument);
}

TEST_CASE("decompose shares track the component sizes of an additive truth") {
  // sin(2 pi x1) + 0.5 sin(2 pi x2) has L2 component ratio exactly 4; with a
  // light penalty (c1 = 0.5) the fitted empirical shares stay in [3, 5].
  bench::Scenario scenario;
  scenario.truth = bench::Truth::additive_sine;
  scenario.dimension = 2;
  scenario.max_order = 1;
  scenario.sigma = 0.1;
  scenario.radius = 6.0;
  scenario.rate.c1 = 0.5;
  scenario.kernel =
      kernels::KernelSpec::homogeneous(2, kernels::Family::brownian);
  auto truth = bench::TruthFunction::make(scenario.truth, 2, "");

  for (int replicate = 0; replicate < 10; ++replicate) {
    CAPTURE(replicate);
    auto cell = bench::make_cell(scenario, truth, replicate, 512);
    estimator::FitConfig config = scenario.fit;
    config.radius = {6.0, 6.0};
    auto result = estimator::rescale_fit(cell.data.response, scenario.sigma,
                                         cell.grams, cell.tuning, config);
    auto shares = estimator::decompose(result.model);
    REQUIRE(shares.size() == 2);
    const double ratio = shares[0] / shares[1];
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
  }
}

TEST_CASE("rescale_fit: identity at sigma 1, scaling law, objective relation") {
  std::mt19937_64 rng(7);
  auto design = fixed_design(rng, 16, 2);
  auto grams = brownian_grams(design, 1);
  Eigen::VectorXd y(16);
  for (int i = 0; i < 16; ++i) y[i] = std::sin(0.9 * i) - 0.2;
  auto tuning = manual_tuning(grams, 0.05, 0.08);

  auto direct = estimator::fit(y, grams, tuning);
  auto unit = estimator::rescale_fit(y, 1.0, grams, tuning);
  CHECK(unit.model.intercept == direct.model.intercept);
  for (std::size_t g = 0; g < grams.groups.size(); ++g)
    CHECK(unit.model.theta[g].isApprox(direct.model.theta[g], 0.0));

  // The sigma = 2 estimator applied to 2 Y is 2 times the sigma = 1
  // estimator applied to Y when penalties and radii are scaled to match the
  // transformed problem.
  rates::TuningTable doubled = tuning;
  estimator::FitConfig config;
  config.radius = {2.0, 2.0};
  for (auto& row : doubled.rows) {
    // rescale_fit divides penalties and radii by sigma; doubling both keeps
    // the internal unit problem identical to the plain fit above.
    row.mu *= 2.0;
    row.gamma *= 2.0;
  }
  auto scaled = estimator::rescale_fit(2.0 * y, 2.0, grams, doubled, config);
  auto base = estimator::fit(y, grams, tuning);
  for (int i = 0; i < 16; ++i) {
    Eigen::VectorXd fitted_scaled = Eigen::VectorXd::Zero(16);
    Eigen::VectorXd fitted_base = Eigen::VectorXd::Zero(16);
    for (std::size_t g = 0; g < grams.groups.size(); ++g) {
      fitted_scaled += grams.at(g).K * scaled.model.theta[g];
      fitted_base += grams.at(g).K * base.model.theta[g];
    }
    fitted_scaled.array() += scaled.model.intercept;
    fitted_base.array() += base.model.intercept;
    CHECK(fitted_scaled[i] ==
          doctest::Approx(2.0 * fitted_base[i]).epsilon(1e-7));
  }

  // L_sigma(sigma g) = sigma^2 L_1(g) with matched penalties: evaluate the
  // sigma-problem objective at the scaled-back model.
  const double sigma = 2.0;
  std::vector<double> mu1 = {0.05, 0.05}, gamma1 = {0.08, 0.08};
  std::vector<double> mu_s = {sigma * 0.05, sigma * 0.05};
  std::vector<double> gamma_s = {sigma * 0.08, sigma * 0.08};
  auto g_model = base.model;
  auto scaled_model = g_model;
  scaled_model.intercept *= sigma;
  for (auto& theta : scaled_model.theta) theta *= sigma;
  const double left =
      estimator::objective(sigma * y, scaled_model, grams, mu_s, gamma_s);
  const double right =
      sigma * sigma * estimator::objective(y, g_model, grams, mu1, gamma1);
  CHECK(left == doctest::Approx(right).epsilon(1e-10));

  CHECK_THROWS_AS((void)estimator::rescale_fit(y, 0.0, grams, tuning),
                  std::invalid_argument);
}

TEST_CASE("fit input validation") {
  std::mt19937_64 rng(8);
  auto grams = brownian_grams(fixed_design(rng, 8, 1), 1);
  auto tuning = manual_tuning(grams, 0.1, 0.1);

  Eigen::VectorXd bad(8);
  bad.setOnes();
  bad[3] = std::nan("");
  CHECK_THROWS_AS((void)estimator::fit(bad, grams, tuning),
                  std::invalid_argument);

  auto negative = tuning;
  negative.rows[0].mu = -0.1;
  CHECK_THROWS_AS(
      (void)estimator::fit(Eigen::VectorXd::Ones(8), grams, negative),
      std::invalid_argument);

  CHECK_THROWS_AS(
      (void)estimator::fit(Eigen::VectorXd::Ones(5), grams, tuning),
      std::invalid_argument);
}

}  // TEST_SUITE
