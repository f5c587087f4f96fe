#include "gsanova/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gsanova/noise.hpp"
#include "gsanova/quadrature.hpp"
#include "gsanova/rng.hpp"

namespace gsanova::bench {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Raw (pre-centering) component formulas for the built-in targets. Each one
// reads only the coordinates of its group, so quadrature can probe it with a
// zero-padded point.
double raw_component(Truth kind, std::size_t index, const Eigen::VectorXd& x) {
  switch (kind) {
    case Truth::additive_sine:
      return index == 0 ? std::sin(kTwoPi * x[0]) : 0.5 * std::sin(kTwoPi * x[1]);
    case Truth::sine_plus_interaction:
      if (index == 0) return std::sin(kTwoPi * x[0]);
      if (index == 1) return 0.5 * std::sin(kTwoPi * x[1]);
      return std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
    case Truth::sparse_polynomial:
      if (index == 0) return 6.0 * (x[0] * x[0] - x[0] + 1.0 / 6.0);
      return 6.0 * (x[1] - 0.5) * (x[2] - 0.5);
    case Truth::custom:
      break;
  }
  throw std::logic_error("raw_component: no closed form for this target");
}

// Mean and centered squared L2 norm of one component over [0,1]^|v|,
// tensor Gauss-Legendre on the group's coordinates.
std::pair<double, double> component_moments(Truth kind, std::size_t index,
                                            const kernels::GroupIndex& group,
                                            int dimension) {
  const quad::Rule& rule = quad::gauss_legendre(64);
  Eigen::VectorXd point = Eigen::VectorXd::Zero(dimension);
  const auto node = [&](std::size_t i) { return 0.5 * (rule.nodes[i] + 1.0); };
  const auto weight = [&](std::size_t i) { return 0.5 * rule.weights[i]; };

  double mean = 0.0, second = 0.0;
  if (group.members.size() == 1) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      point[group.members[0]] = node(i);
      const double v = raw_component(kind, index, point);
      mean += weight(i) * v;
      second += weight(i) * v * v;
    }
  } else if (group.members.size() == 2) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      point[group.members[0]] = node(i);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        point[group.members[1]] = node(j);
        const double v = raw_component(kind, index, point);
        const double w = weight(i) * weight(j);
        mean += w * v;
        second += w * v * v;
      }
    }
  } else {
    throw std::logic_error("component_moments: groups above order 2 unused");
  }
  return {mean, second - mean * mean};
}

Eigen::VectorXd fitted_values(const estimator::MetaModel& model,
                              const kernels::GramSet& grams) {
  Eigen::VectorXd total =
      Eigen::VectorXd::Constant(grams.n(), model.intercept);
  for (std::size_t g = 0; g < grams.groups.size(); ++g) {
    if (model.theta[g].size() == grams.n()) {
      total += grams.groups[g].K * model.theta[g];
    }
  }
  return total;
}

// One substream per (n, replicate, purpose) so sweep cells reproduce in
// isolation and independently of the thread schedule.
std::uint64_t replicate_stream(std::uint64_t seed, std::size_t n, int replicate,
                               std::uint64_t purpose) {
  const std::uint64_t cell =
      rng::derive_stream(rng::derive_stream(seed, n), static_cast<std::uint64_t>(replicate));
  return rng::derive_stream(cell, purpose);
}

}  // namespace

Truth truth_from_string(const std::string& name) {
  if (name == "additive_sine") return Truth::additive_sine;
  if (name == "sine_plus_interaction") return Truth::sine_plus_interaction;
  if (name == "sparse_polynomial") return Truth::sparse_polynomial;
  if (name == "custom") return Truth::custom;
  throw std::invalid_argument("unknown truth function: " + name);
}

std::string to_string(Truth truth) {
  switch (truth) {
    case Truth::additive_sine: return "additive_sine";
    case Truth::sine_plus_interaction: return "sine_plus_interaction";
    case Truth::sparse_polynomial: return "sparse_polynomial";
    case Truth::custom: return "custom";
  }
  throw std::logic_error("to_string(Truth): bad enum value");
}

TruthFunction TruthFunction::make(Truth kind, int dimension,
                                  const std::string& expression) {
  TruthFunction f;
  f.kind_ = kind;
  f.dimension_ = dimension;
  switch (kind) {
    case Truth::additive_sine:
      if (dimension < 2) throw std::invalid_argument("additive_sine needs d >= 2");
      f.support_ = {kernels::GroupIndex{{0}}, kernels::GroupIndex{{1}}};
      break;
    case Truth::sine_plus_interaction:
      if (dimension < 2) {
        throw std::invalid_argument("sine_plus_interaction needs d >= 2");
      }
      f.support_ = {kernels::GroupIndex{{0}}, kernels::GroupIndex{{1}},
                    kernels::GroupIndex{{0, 1}}};
      break;
    case Truth::sparse_polynomial:
      if (dimension < 3) {
        throw std::invalid_argument("sparse_polynomial needs d >= 3");
      }
      f.support_ = {kernels::GroupIndex{{0}}, kernels::GroupIndex{{1, 2}}};
      break;
    case Truth::custom:
      if (expression.empty()) {
        throw std::invalid_argument("custom truth needs a non-empty expression");
      }
      f.expr_.emplace(expression, dimension);
      return f;
  }
  f.shifts_.resize(f.support_.size());
  f.l2_squared_.resize(f.support_.size());
  for (std::size_t i = 0; i < f.support_.size(); ++i) {
    const auto [mean, var] =
        component_moments(kind, i, f.support_[i], dimension);
    f.shifts_[i] = mean;
    f.l2_squared_[i] = var;
  }
  return f;
}

double TruthFunction::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != dimension_) {
    throw std::invalid_argument("TruthFunction: point dimension mismatch");
  }
  if (kind_ == Truth::custom) return (*expr_)(x);
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    total += raw_component(kind_, i, x) - shifts_[i];
  }
  return total;
}

double TruthFunction::component(std::size_t index,
                                const Eigen::VectorXd& x) const {
  if (index >= support_.size()) {
    throw std::out_of_range("TruthFunction::component: index out of range");
  }
  return raw_component(kind_, index, x) - shifts_[index];
}

void Scenario::validate() const {
  if (dimension < 1) throw std::invalid_argument("scenario: dimension >= 1");
  kernel.validate();
  if (kernel.dimension() != dimension) {
    throw std::invalid_argument("scenario: kernel coords must match dimension");
  }
  if (truth != Truth::custom) {
    for (const auto& coord : kernel.coords) {
      if (coord.lo != 0.0 || coord.hi != 1.0) {
        throw std::invalid_argument(
            "scenario: built-in truths assume the uniform law on [0,1]");
      }
    }
  }
  if (n < 8) throw std::invalid_argument("scenario: n >= 8");
  if (max_order < 1 || max_order > dimension) {
    throw std::invalid_argument("scenario: max_order in [1, dimension]");
  }
  (void)noise::NoiseSpec::make(alpha, 1.0);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("scenario: sigma must be >= 0 and finite");
  }
  if (replicates < 1) throw std::invalid_argument("scenario: replicates >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("scenario: radius must be positive");
  }
  if (l2_mc < 1000) throw std::invalid_argument("scenario: l2_mc >= 1000");
  if (jobs < 1) throw std::invalid_argument("scenario: jobs >= 1");
  rate.validate();
}

Eigen::MatrixXd make_design(const Scenario& scenario, int replicate,
                            std::size_t n) {
  const int d = scenario.dimension;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), d);
  rng::Generator gen(replicate_stream(scenario.seed, n, replicate, 0));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    for (int a = 0; a < d; ++a) {
      const auto& coord = scenario.kernel.coords[static_cast<std::size_t>(a)];
      design(i, a) = gen.uniform(coord.lo, coord.hi);
    }
  }
  return design;
}

Dataset make_dataset(const Scenario& scenario, const TruthFunction& truth,
                     int replicate, std::size_t n) {
  Dataset ds;
  ds.design = make_design(scenario, replicate, n);
  ds.truth.resize(ds.design.rows());
  for (Eigen::Index i = 0; i < ds.design.rows(); ++i) {
    ds.truth[i] = truth(ds.design.row(i).transpose());
  }
  ds.response = ds.truth;
  if (scenario.sigma > 0.0) {
    const auto eps = noise::sample_errors(
        noise::NoiseSpec::make(scenario.alpha, scenario.sigma), n,
        replicate_stream(scenario.seed, n, replicate, 1));
    for (Eigen::Index i = 0; i < ds.response.size(); ++i) {
      ds.response[i] += eps[static_cast<std::size_t>(i)];
    }
  }
  return ds;
}

double empirical_risk(const Eigen::VectorXd& truth_values,
                      const Eigen::VectorXd& fitted) {
  if (truth_values.size() != fitted.size() || truth_values.size() == 0) {
    throw std::invalid_argument("empirical_risk: size mismatch");
  }
  return (truth_values - fitted).squaredNorm() /
         static_cast<double>(truth_values.size());
}

double empirical_risk(const Eigen::VectorXd& truth_values,
                      const estimator::MetaModel& model,
                      const kernels::GramSet& grams) {
  return empirical_risk(truth_values, fitted_values(model, grams));
}

L2Risk l2_risk(const TruthFunction& truth, const estimator::MetaModel& model,
               const kernels::KernelSpec& spec,
               const Eigen::MatrixXd& design_train, std::size_t n_mc,
               std::uint64_t seed) {
  if (n_mc < 1000) {
    throw std::invalid_argument("l2_risk: n_mc >= 1000 for a usable SE");
  }
  const int d = spec.dimension();
  Eigen::MatrixXd points(static_cast<Eigen::Index>(n_mc), d);
  rng::Generator gen(seed);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int a = 0; a < d; ++a) {
      const auto& coord = spec.coords[static_cast<std::size_t>(a)];
      points(i, a) = gen.uniform(coord.lo, coord.hi);
    }
  }
  const Eigen::VectorXd pred =
      estimator::predict(model, spec, design_train, points);
  double mean = 0.0, second = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double diff = truth(points.row(i).transpose()) - pred[i];
    const double sq = diff * diff;
    mean += sq;
    second += sq * sq;
  }
  const double m = static_cast<double>(n_mc);
  mean /= m;
  const double var = std::max(0.0, second / m - mean * mean);
  return {mean, std::sqrt(var / m)};
}

std::vector<OracleCandidate> make_oracle_candidates(
    const TruthFunction& truth, const Eigen::VectorXd& truth_values,
    const kernels::GramSet& grams, double radius,
    const estimator::FitConfig& fit) {
  const Eigen::Index n = truth_values.size();
  std::vector<OracleCandidate> candidates;

  OracleCandidate zero;
  zero.name = "zero";
  zero.model.intercept = truth_values.mean();
  for (const auto& gram : grams.groups) {
    zero.model.groups.push_back(gram.group);
    zero.model.theta.emplace_back(Eigen::VectorXd::Zero(n));
    zero.model.norm_n.push_back(0.0);
    zero.model.norm_h.push_back(0.0);
    zero.model.radius.push_back(radius);
  }
  zero.bias_squared =
      (truth_values.array() - zero.model.intercept).square().mean();
  candidates.push_back(std::move(zero));

  if (!truth.has_components()) return candidates;

  // Projection candidate: a near-unpenalized fit of the noiseless truth
  // restricted to the true support, still inside the same H-balls. Support
  // groups missing from the model (max_order too small) are simply dropped.
  std::vector<std::size_t> selected;
  for (const auto& group : truth.support()) {
    for (std::size_t g = 0; g < grams.groups.size(); ++g) {
      if (grams.groups[g].group == group) {
        selected.push_back(g);
        break;
      }
    }
  }
  if (selected.empty()) return candidates;

  kernels::GramSet sub;
  sub.design = grams.design;
  sub.spec = grams.spec;
  sub.groups.reserve(selected.size());
  for (std::size_t g : selected) sub.groups.push_back(grams.groups[g]);

  rates::TuningTable tiny;
  tiny.n = static_cast<std::size_t>(n);
  tiny.sigma = 1.0;
  for (std::size_t g : selected) {
    rates::GroupTuning row;
    row.group = grams.groups[g].group;
    row.mu = 1e-8;
    row.gamma = 1e-8;
    tiny.rows.push_back(row);
    tiny.radius.push_back(radius);
  }

  estimator::FitConfig cfg = fit;
  cfg.radius.assign(selected.size(), radius);
  const estimator::FitResult res = estimator::fit(truth_values, sub, tiny, cfg);

  OracleCandidate proj;
  proj.name = "projection";
  proj.model.intercept = res.model.intercept;
  for (const auto& gram : grams.groups) {
    proj.model.groups.push_back(gram.group);
    proj.model.theta.emplace_back(Eigen::VectorXd::Zero(n));
    proj.model.norm_n.push_back(0.0);
    proj.model.norm_h.push_back(0.0);
    proj.model.radius.push_back(radius);
  }
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const std::size_t g = selected[k];
    proj.model.theta[g] = res.model.theta[k];
    proj.model.norm_n[g] = res.model.norm_n[k];
    proj.model.norm_h[g] = res.model.norm_h[k];
    if (res.model.norm_n[k] > 1e-12) proj.support.push_back(g);
  }

  Eigen::VectorXd fitted = Eigen::VectorXd::Constant(n, proj.model.intercept);
  for (std::size_t g : proj.support) {
    fitted += grams.groups[g].K * proj.model.theta[g];
  }
  proj.bias_squared = (truth_values - fitted).squaredNorm() /
                      static_cast<double>(n);
  candidates.push_back(std::move(proj));
  return candidates;
}

double oracle_denominator(const OracleCandidate& candidate,
                          const rates::TuningTable& tuning) {
  double denom = candidate.bias_squared;
  for (std::size_t g : candidate.support) {
    const auto& row = tuning.rows.at(g);
    const double r = g < tuning.radius.size() ? tuning.radius[g] : 1.0;
    denom += row.mu * r + row.gamma * row.gamma;
  }
  return denom;
}

double oracle_ratio(double fitted_risk,
                    const std::vector<OracleCandidate>& candidates,
                    const rates::TuningTable& tuning) {
  if (candidates.empty()) {
    throw std::invalid_argument("oracle_ratio: empty candidate list");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& candidate : candidates) {
    best = std::min(best, oracle_denominator(candidate, tuning));
  }
  if (!(best > 0.0) || !std::isfinite(best)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return fitted_risk / best;
}

bool decomposability_holds(const estimator::MetaModel& fitted,
                           const OracleCandidate& candidate,
                           const std::vector<kernels::GroupGram>& grams,
                           const rates::TuningTable& tuning) {
  const Eigen::Index n = grams.empty() ? 0 : grams.front().K.rows();
  double on = 0.0, off = 0.0;
  for (std::size_t g = 0; g < grams.size(); ++g) {
    Eigen::VectorXd diff = fitted.theta[g];
    if (candidate.model.theta[g].size() == diff.size()) {
      diff -= candidate.model.theta[g];
    }
    const Eigen::VectorXd kd = grams[g].K * diff;
    const double norm_h = std::sqrt(std::max(0.0, diff.dot(kd)));
    const double norm_n = kd.norm() / std::sqrt(static_cast<double>(n));
    const double mass =
        tuning.rows[g].mu * norm_h + tuning.rows[g].gamma * norm_n;
    const bool in_support =
        std::find(candidate.support.begin(), candidate.support.end(), g) !=
        candidate.support.end();
    (in_support ? on : off) += mass;
  }
  return off <= 3.0 * on + 1e-12;
}

rates::TuningTable scenario_tuning(const Scenario& scenario,
                                   const kernels::GramSet& grams) {
  const std::vector<double> radius(grams.groups.size(), scenario.radius);
  if (scenario.sigma > 0.0) {
    return rates::make_tuning_table_scaled(grams, scenario.rate, radius,
                                           scenario.sigma);
  }
  // Noiseless calibration: keep the unit-problem nu for reporting but zero
  // the penalties, leaving a ball-constrained least squares.
  rates::TuningTable tuning =
      rates::make_tuning_table_scaled(grams, scenario.rate, radius, 1.0);
  tuning.sigma = 0.0;
  for (auto& row : tuning.rows) {
    row.mu = 0.0;
    row.gamma = 0.0;
  }
  return tuning;
}

CellArtifacts make_cell(const Scenario& scenario, const TruthFunction& truth,
                        int replicate, std::size_t n) {
  CellArtifacts cell;
  cell.data = make_dataset(scenario, truth, replicate, n);
  const auto groups =
      kernels::enumerate_groups(scenario.dimension, scenario.max_order);
  cell.grams = kernels::anova_gram(scenario.kernel, cell.data.design, groups);
  cell.tuning = scenario_tuning(scenario, cell.grams);
  return cell;
}

namespace {

ReplicateRow run_replicate(const Scenario& scenario, const TruthFunction& truth,
                           std::size_t n, int replicate) {
  const CellArtifacts cell = make_cell(scenario, truth, replicate, n);
  const Dataset& ds = cell.data;
  const kernels::GramSet& grams = cell.grams;
  const rates::TuningTable& tuning = cell.tuning;

  estimator::FitConfig cfg = scenario.fit;
  cfg.radius.assign(grams.groups.size(), scenario.radius);
  cfg.restart_seed = replicate_stream(scenario.seed, n, replicate, 3);
  const estimator::FitResult res =
      scenario.sigma > 0.0
          ? estimator::rescale_fit(ds.response, scenario.sigma, grams, tuning,
                                   cfg)
          : estimator::fit(ds.response, grams, tuning, cfg);

  ReplicateRow row;
  row.n = n;
  row.replicate = replicate;
  row.converged = res.converged;
  row.sweeps = res.sweeps;
  row.empirical_risk = empirical_risk(ds.truth, fitted_values(res.model, grams));

  const L2Risk l2 =
      l2_risk(truth, res.model, scenario.kernel, ds.design, scenario.l2_mc,
              replicate_stream(scenario.seed, n, replicate, 2));
  row.l2_risk = l2.estimate;
  row.l2_std_error = l2.std_error;

  const auto fitted_support =
      estimator::support(res.model, cfg.zero_threshold);
  for (const auto& group : fitted_support) row.support.push_back(group.label());
  row.support_exact =
      truth.has_components() && fitted_support == truth.support();

  double nu_sum = 0.0;
  for (const auto& trow : tuning.rows) nu_sum += trow.nu_empirical;
  row.nu_mean = tuning.rows.empty()
                    ? 0.0
                    : nu_sum / static_cast<double>(tuning.rows.size());

  const auto candidates = make_oracle_candidates(truth, ds.truth, grams,
                                                 scenario.radius, cfg);
  row.oracle_ratio = oracle_ratio(row.empirical_risk, candidates, tuning);
  row.decomposable = false;
  for (const auto& candidate : candidates) {
    if (candidate.name == "projection") {
      row.decomposable =
          decomposability_holds(res.model, candidate, grams.groups, tuning);
    }
  }
  return row;
}

std::vector<ReplicateRow> run_cell(const Scenario& scenario,
                                   const TruthFunction& truth, std::size_t n) {
  const int reps = scenario.replicates;
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(reps));
  const int workers = std::min(scenario.jobs, reps);
  if (workers <= 1) {
    for (int r = 0; r < reps; ++r) {
      rows[static_cast<std::size_t>(r)] = run_replicate(scenario, truth, n, r);
    }
    return rows;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= reps) return;
        try {
          rows[static_cast<std::size_t>(r)] =
              run_replicate(scenario, truth, n, r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sd_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

RiskReport aggregate_report(const Scenario& scenario,
                            std::vector<ReplicateRow> rows,
                            const TruthFunction& truth) {
  RiskReport report;
  report.rows = std::move(rows);
  for (const auto& group :
       kernels::enumerate_groups(scenario.dimension, scenario.max_order)) {
    report.group_labels.push_back(group.label());
  }
  std::vector<double> emp, l2, ratios;
  double exact = 0.0, decomp = 0.0;
  for (const auto& row : report.rows) {
    emp.push_back(row.empirical_risk);
    l2.push_back(row.l2_risk);
    exact += row.support_exact ? 1.0 : 0.0;
    decomp += row.decomposable ? 1.0 : 0.0;
    if (std::isfinite(row.oracle_ratio)) ratios.push_back(row.oracle_ratio);
  }
  const double count = static_cast<double>(report.rows.size());
  double emp_sum = 0.0, l2_sum = 0.0;
  for (double v : emp) emp_sum += v;
  for (double v : l2) l2_sum += v;
  report.mean_empirical_risk = emp_sum / count;
  report.median_empirical_risk = median_of(emp);
  report.sd_empirical_risk = sd_of(emp);
  report.mean_l2_risk = l2_sum / count;
  report.median_l2_risk = median_of(l2);
  report.sd_l2_risk = sd_of(l2);
  report.support_recovery_rate = exact / count;
  report.decomposable_fraction = truth.has_components() ? decomp / count : 0.0;
  if (ratios.empty()) {
    report.mean_oracle_ratio = std::numeric_limits<double>::quiet_NaN();
    report.median_oracle_ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    double rs = 0.0;
    for (double v : ratios) rs += v;
    report.mean_oracle_ratio = rs / static_cast<double>(ratios.size());
    report.median_oracle_ratio = median_of(ratios);
  }
  report.c1_below_theorem_floor = !scenario.rate.c1_in_theorem_range();
  return report;
}

}  // namespace

RiskReport run_scenario(const Scenario& scenario) {
  scenario.validate();
  const TruthFunction truth = TruthFunction::make(
      scenario.truth, scenario.dimension, scenario.expression);
  return aggregate_report(scenario,
                          run_cell(scenario, truth, scenario.n), truth);
}

SweepResult rate_sweep(const Scenario& scenario) {
  scenario.validate();
  if (scenario.n_grid.size() < 4) {
    throw std::invalid_argument("rate_sweep: n_grid needs >= 4 sample sizes");
  }
  for (std::size_t i = 1; i < scenario.n_grid.size(); ++i) {
    if (scenario.n_grid[i] <= scenario.n_grid[i - 1]) {
      throw std::invalid_argument("rate_sweep: n_grid must be increasing");
    }
  }
  const TruthFunction truth = TruthFunction::make(
      scenario.truth, scenario.dimension, scenario.expression);

  SweepResult result;
  result.c1_below_theorem_floor = !scenario.rate.c1_in_theorem_range();
  constexpr double kRiskFloor = 1e-13;

  for (std::size_t n : scenario.n_grid) {
    auto rows = run_cell(scenario, truth, n);
    result.tunings.push_back(make_cell(scenario, truth, 0, n).tuning);
    SweepPoint point;
    point.n = n;
    for (const auto& row : rows) {
      point.mean_empirical_risk += row.empirical_risk;
      point.mean_l2_risk += row.l2_risk;
      point.mean_nu += row.nu_mean;
    }
    const double count = static_cast<double>(rows.size());
    point.mean_empirical_risk /= count;
    point.mean_l2_risk /= count;
    point.mean_nu /= count;
    result.points.push_back(point);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }

  std::vector<double> log_n, log_risk, log_nu;
  for (const auto& point : result.points) {
    if (point.mean_empirical_risk <= kRiskFloor) {
      result.degenerate = true;
      continue;
    }
    log_n.push_back(std::log(static_cast<double>(point.n)));
    log_risk.push_back(std::log(point.mean_empirical_risk));
    log_nu.push_back(std::log(std::max(point.mean_nu, 1e-300)));
  }
  if (log_n.size() >= 2) {
    result.risk_fit = stats::linear_fit(log_n, log_risk);
    result.nu_fit = stats::linear_fit(log_n, log_nu);
  } else {
    result.degenerate = true;
  }

  // Slope uncertainty from per-replicate slopes; replicates are paired across
  // n by construction of the seed streams.
  std::vector<double> slopes;
  for (int r = 0; r < scenario.replicates; ++r) {
    std::vector<double> xs, ys;
    bool ok = true;
    for (std::size_t i = 0; i < scenario.n_grid.size(); ++i) {
      const auto& row =
          result.rows[i * static_cast<std::size_t>(scenario.replicates) +
                      static_cast<std::size_t>(r)];
      if (row.empirical_risk <= kRiskFloor) {
        ok = false;
        break;
      }
      xs.push_back(std::log(static_cast<double>(row.n)));
      ys.push_back(std::log(row.empirical_risk));
    }
    if (ok && xs.size() >= 2) slopes.push_back(stats::linear_fit(xs, ys).slope);
  }
  if (slopes.size() >= 2) {
    double mean = 0.0;
    for (double s : slopes) mean += s;
    mean /= static_cast<double>(slopes.size());
    double var = 0.0;
    for (double s : slopes) var += (s - mean) * (s - mean);
    var /= static_cast<double>(slopes.size() - 1);
    const double half = 2.0 * std::sqrt(var / static_cast<double>(slopes.size()));
    result.risk_slope_ci_lo = mean - half;
    result.risk_slope_ci_hi = mean + half;
  } else {
    result.risk_slope_ci_lo = result.risk_fit.slope;
    result.risk_slope_ci_hi = result.risk_fit.slope;
  }
  return result;
}

}  // namespace gsanova::bench
