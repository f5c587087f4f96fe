#include "gsanova/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "gsanova/rng.hpp"

namespace gsanova::estimator {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reduced eigen-view of one block: the leading rank columns of the Gram
// eigenbasis (viewed in place, the GramSet outlives the solve) and the
// matching sqrt-eigenvalues, all positive.
struct Block {
  const Eigen::MatrixXd* evecs = nullptr;
  Eigen::Index rank = 0;
  Eigen::VectorXd s;
  double mu = 0.0;
  double gamma_n = 0.0;  // gamma / sqrt(n)
  double radius = 1.0;

  [[nodiscard]] auto U() const { return evecs->leftCols(rank); }
};

struct ZeroTest {
  bool zero;      // beta = 0 is optimal for the block
  double margin;  // mu - dist(weighted pull, weighted gamma-ball), >= 0 if zero
};

// Exact group-zero optimality: 0 is in the subdifferential iff
//   min_{||u|| <= gamma_n} || S ((2/n) c - u) || <= mu.
// The constrained minimizer is u_i = s_i^2 g_i / (s_i^2 + eta), eta >= 0
// matching the ball radius, a scalar monotone root problem.
ZeroTest zero_test(const Block& block, const Eigen::VectorXd& c, std::size_t n) {
  const Eigen::VectorXd g = (2.0 / static_cast<double>(n)) * c;
  if (g.norm() <= block.gamma_n) return {true, block.mu};

  const Eigen::VectorXd s2 = block.s.array().square();
  const auto u_norm2 = [&](double eta) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double u = s2(i) * g(i) / (s2(i) + eta);
      acc += u * u;
    }
    return acc;
  };
  const double target = block.gamma_n * block.gamma_n;
  double lo = 0.0;
  double hi = std::max(s2.maxCoeff(), 1.0);
  while (u_norm2(hi) > target && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (u_norm2(mid) > target ? lo : hi) = mid;
    if (hi - lo <= 1e-13 * hi) break;
  }
  const double eta = 0.5 * (lo + hi);
  double dist2 = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double ratio = eta / (s2(i) + eta);
    dist2 += s2(i) * g(i) * g(i) * ratio * ratio;
  }
  const double dist = std::sqrt(dist2);
  return {dist <= block.mu, block.mu - dist};
}

double block_objective(const Block& block, const Eigen::VectorXd& c,
                       std::size_t n, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd sb = block.s.cwiseProduct(beta);
  return (c - sb).squaredNorm() / static_cast<double>(n) +
         block.gamma_n * sb.norm() + block.mu * beta.norm();
}

// Gradient of the block objective, valid away from beta = 0.
Eigen::VectorXd block_gradient(const Block& block, const Eigen::VectorXd& c,
                               std::size_t n, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd sb = block.s.cwiseProduct(beta);
  const double sb_norm = sb.norm();
  const double b_norm = beta.norm();
  Eigen::VectorXd grad =
      (2.0 / static_cast<double>(n)) * block.s.cwiseProduct(sb - c);
  if (sb_norm > 0.0) {
    grad += (block.gamma_n / sb_norm) * block.s.cwiseProduct(sb);
  }
  if (b_norm > 0.0) grad += (block.mu / b_norm) * beta;
  return grad;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& beta, double radius) {
  const double norm = beta.norm();
  if (norm <= radius) return beta;
  return beta * (radius / norm);
}

// Fixed-point residual of the projected gradient map with unit probe step;
// zero exactly at constrained stationary points.
double pg_residual(const Block& block, const Eigen::VectorXd& c, std::size_t n,
                   const Eigen::VectorXd& beta) {
  const Eigen::VectorXd grad = block_gradient(block, c, n, beta);
  return (beta - project_ball(beta - grad, block.radius)).norm();
}

// Projected gradient with Armijo backtracking; beta is updated in place and
// the final objective returned.
double solve_block(const Block& block, const Eigen::VectorXd& c, std::size_t n,
                   Eigen::VectorXd& beta, const FitConfig& config) {
  double step = 1.0;
  double obj = block_objective(block, c, n, beta);
  for (int iter = 0; iter < config.max_inner_iterations; ++iter) {
    const Eigen::VectorXd grad = block_gradient(block, c, n, beta);
    if ((beta - project_ball(beta - grad, block.radius)).norm() <=
        config.inner_tol) {
      break;
    }
    step = std::min(step * 2.0, 1e8);
    bool moved = false;
    while (step > 1e-18) {
      Eigen::VectorXd cand = project_ball(beta - step * grad, block.radius);
      if (cand.norm() < 1e-300) {
        // The ray crossed the origin where the objective is nonsmooth; the
        // zero test already ruled 0 out, so stop just short of it.
        cand = beta * 1e-6;
      }
      const Eigen::VectorXd diff = cand - beta;
      const double cand_obj = block_objective(block, c, n, cand);
      if (cand_obj <=
          obj + grad.dot(diff) + diff.squaredNorm() / (2.0 * step) + 1e-15) {
        beta = cand;
        obj = cand_obj;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // fully stalled, caller may restart
  }
  return obj;
}

// Ridge-flavored warm start for a block entering the active set.
Eigen::VectorXd warm_start(const Block& block, const Eigen::VectorXd& c,
                           std::size_t n) {
  const double nd = static_cast<double>(n);
  Eigen::VectorXd beta(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double s = block.s(i);
    beta(i) = s * c(i) / (s * s + nd * (block.mu + block.gamma_n));
  }
  if (beta.norm() < 1e-300) beta = Eigen::VectorXd::Constant(c.size(), 1e-8);
  return project_ball(beta, block.radius);
}

struct Workspace {
  std::vector<Block> blocks;
  std::vector<Eigen::VectorXd> beta;    // per group, reduced coordinates
  std::vector<Eigen::VectorXd> fitted;  // per group, n-vector U S beta
  Eigen::VectorXd total;                // sum of fitted
  double intercept = 0.0;
};

double total_objective(const Eigen::VectorXd& y, const Workspace& ws,
                       std::size_t n) {
  double obj =
      (y.array() - ws.intercept - ws.total.array()).matrix().squaredNorm() /
      static_cast<double>(n);
  for (std::size_t g = 0; g < ws.blocks.size(); ++g) {
    const Eigen::VectorXd sb = ws.blocks[g].s.cwiseProduct(ws.beta[g]);
    obj += ws.blocks[g].gamma_n * sb.norm() + ws.blocks[g].mu * ws.beta[g].norm();
  }
  return obj;
}

}  // namespace

double objective(const Eigen::VectorXd& y, const MetaModel& model,
                 const kernels::GramSet& grams, const std::vector<double>& mu,
                 const std::vector<double>& gamma) {
  const std::size_t G = grams.groups.size();
  if (model.theta.size() != G || mu.size() != G || gamma.size() != G) {
    throw std::invalid_argument("objective: size mismatch");
  }
  const auto n = static_cast<double>(grams.n());
  Eigen::VectorXd fitted = Eigen::VectorXd::Zero(grams.n());
  double penalty = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    const Eigen::VectorXd fv = grams.groups[g].K * model.theta[g];
    fitted += fv;
    const double norm_n = fv.norm() / std::sqrt(n);
    const double h2 = model.theta[g].dot(fv);
    penalty += gamma[g] * norm_n + mu[g] * std::sqrt(std::max(h2, 0.0));
  }
  return (y.array() - model.intercept - fitted.array()).matrix().squaredNorm() / n +
         penalty;
}

FitResult fit(const Eigen::VectorXd& y, const kernels::GramSet& grams,
              const rates::TuningTable& tuning, const FitConfig& config) {
  const std::size_t G = grams.groups.size();
  const auto n = static_cast<std::size_t>(grams.n());
  if (y.size() != grams.n()) throw std::invalid_argument("fit: y size mismatch");
  if (!y.allFinite()) throw std::invalid_argument("fit: y has non-finite entries");
  if (tuning.rows.size() != G) {
    throw std::invalid_argument("fit: tuning table size mismatch");
  }
  if (!config.radius.empty() && config.radius.size() != G) {
    throw std::invalid_argument("fit: radius size mismatch");
  }

  Workspace ws;
  ws.blocks.resize(G);
  ws.beta.resize(G);
  ws.fitted.resize(G);
  ws.total = Eigen::VectorXd::Zero(grams.n());
  ws.intercept = y.mean();

  for (std::size_t g = 0; g < G; ++g) {
    const auto& gg = grams.groups[g];
    if (gg.eigvecs.size() == 0) {
      throw std::invalid_argument("fit: GramSet lacks eigenvectors");
    }
    if (!(gg.group == tuning.rows[g].group)) {
      throw std::invalid_argument("fit: tuning group order mismatch");
    }
    const double eig_max = gg.eigvals.size() ? gg.eigvals(0) : 0.0;
    const double cutoff = std::max(config.rank_tol * eig_max, 0.0);
    Eigen::Index rank = 0;
    while (rank < gg.eigvals.size() && gg.eigvals(rank) > cutoff) ++rank;
    Block& block = ws.blocks[g];
    block.evecs = &gg.eigvecs;
    block.rank = rank;
    block.s = gg.eigvals.head(rank).array().sqrt();
    block.mu = tuning.rows[g].mu;
    block.gamma_n = tuning.rows[g].gamma / std::sqrt(static_cast<double>(n));
    block.radius = config.radius.empty() ? 1.0 : config.radius[g];
    if (!(block.radius > 0.0)) {
      throw std::invalid_argument("fit: radius must be positive");
    }
    if (!(block.mu >= 0.0) || !(block.gamma_n >= 0.0)) {
      throw std::invalid_argument("fit: penalties must be nonnegative");
    }
    ws.beta[g] = Eigen::VectorXd::Zero(rank);
    ws.fitted[g] = Eigen::VectorXd::Zero(grams.n());
  }

  FitResult result;
  result.pg_residual.assign(G, kNaN);
  result.zero_margin.assign(G, kNaN);

  double prev_obj = total_objective(y, ws, n);
  int sweep = 0;
  for (; sweep < config.max_sweeps; ++sweep) {
    for (std::size_t g = 0; g < G; ++g) {
      Block& block = ws.blocks[g];
      if (block.rank == 0) continue;  // rank-zero Gram, block stays empty
      const Eigen::VectorXd residual =
          y.array() - ws.intercept - (ws.total - ws.fitted[g]).array();
      const Eigen::VectorXd c = block.U().transpose() * residual;
      if (zero_test(block, c, n).zero) {
        ws.beta[g].setZero();
      } else {
        if (ws.beta[g].isZero()) ws.beta[g] = warm_start(block, c, n);
        const double entry_obj = block_objective(block, c, n, ws.beta[g]);
        double obj = solve_block(block, c, n, ws.beta[g], config);
        if (pg_residual(block, c, n, ws.beta[g]) > config.inner_tol &&
            obj >= entry_obj - 1e-15 * (1.0 + std::fabs(entry_obj))) {
          // Stalled without progress: seeded random restarts, best kept.
          rng::Generator gen(rng::derive_stream(
              config.restart_seed, (static_cast<std::uint64_t>(sweep) << 20) + g));
          for (int attempt = 0; attempt < config.max_restarts; ++attempt) {
            Eigen::VectorXd trial(block.rank);
            for (Eigen::Index i = 0; i < trial.size(); ++i) trial(i) = gen.normal();
            trial *= (0.5 * block.radius) / std::max(trial.norm(), 1e-300);
            const double trial_obj = solve_block(block, c, n, trial, config);
            if (trial_obj < obj) {
              obj = trial_obj;
              ws.beta[g] = trial;
            }
          }
        }
      }
      ws.total -= ws.fitted[g];
      ws.fitted[g] = block.U() * block.s.cwiseProduct(ws.beta[g]);
      ws.total += ws.fitted[g];
    }
    ws.intercept = (y - ws.total).mean();

    const double obj = total_objective(y, ws, n);
    result.objective_trace.push_back(obj);
    const double denom = std::max(std::fabs(prev_obj), 1e-12);
    if (prev_obj - obj <= config.tol_rel_objective * denom) {
      // Accept only a verified fixed point: every block decision must hold
      // against the final state of the others.
      bool stationary = true;
      for (std::size_t g = 0; g < G && stationary; ++g) {
        const Block& block = ws.blocks[g];
        if (block.rank == 0) continue;
        const Eigen::VectorXd residual =
            y.array() - ws.intercept - (ws.total - ws.fitted[g]).array();
        const Eigen::VectorXd c = block.U().transpose() * residual;
        if (ws.beta[g].isZero()) {
          stationary = zero_test(block, c, n).margin >= -1e-10;
        } else {
          stationary =
              pg_residual(block, c, n, ws.beta[g]) <= 10.0 * config.inner_tol;
        }
      }
      if (stationary) {
        result.converged = true;
        prev_obj = obj;
        ++sweep;
        break;
      }
    }
    prev_obj = obj;
  }
  result.sweeps = sweep;

  // Final diagnostics against the converged state.
  for (std::size_t g = 0; g < G; ++g) {
    const Block& block = ws.blocks[g];
    if (block.rank == 0) {
      result.zero_margin[g] = block.mu;
      continue;
    }
    const Eigen::VectorXd residual =
        y.array() - ws.intercept - (ws.total - ws.fitted[g]).array();
    const Eigen::VectorXd c = block.U().transpose() * residual;
    if (ws.beta[g].isZero()) {
      result.zero_margin[g] = zero_test(block, c, n).margin;
    } else {
      result.pg_residual[g] = pg_residual(block, c, n, ws.beta[g]);
    }
  }

  MetaModel& model = result.model;
  model.intercept = ws.intercept;
  model.groups.reserve(G);
  model.theta.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    const Block& block = ws.blocks[g];
    model.groups.push_back(grams.groups[g].group);
    // theta = U S^(-1) beta, the minimum-norm preimage on the kept rank.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(grams.n());
    if (block.rank > 0 && !ws.beta[g].isZero()) {
      theta = block.U() * ws.beta[g].cwiseQuotient(block.s);
    }
    model.theta.push_back(std::move(theta));
    const double norm_h = ws.beta[g].norm();
    const double norm_n =
        block.rank ? block.s.cwiseProduct(ws.beta[g]).norm() /
                         std::sqrt(static_cast<double>(n))
                   : 0.0;
    model.norm_h.push_back(norm_h);
    model.norm_n.push_back(norm_n);
    model.radius.push_back(block.radius);
    if (std::fabs(norm_h - block.radius) <= 1e-9) ++result.binding_count;
  }
  return result;
}

FitResult rescale_fit(const Eigen::VectorXd& y, double sigma,
                      const kernels::GramSet& grams,
                      const rates::TuningTable& tuning, const FitConfig& config) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("rescale_fit: sigma must be positive and finite");
  }
  rates::TuningTable scaled = tuning;
  for (auto& row : scaled.rows) {
    row.mu /= sigma;
    row.gamma /= sigma;
  }
  FitConfig scaled_config = config;
  if (scaled_config.radius.empty()) {
    scaled_config.radius.assign(grams.groups.size(), 1.0);
  }
  for (auto& r : scaled_config.radius) r /= sigma;

  FitResult result = fit(y / sigma, grams, scaled, scaled_config);

  result.model.intercept *= sigma;
  for (std::size_t g = 0; g < result.model.theta.size(); ++g) {
    result.model.theta[g] *= sigma;
    result.model.norm_n[g] *= sigma;
    result.model.norm_h[g] *= sigma;
    result.model.radius[g] *= sigma;
  }
  return result;
}

Eigen::MatrixXd predict_components(const MetaModel& model,
                                   const kernels::KernelSpec& spec,
                                   const Eigen::MatrixXd& x_train,
                                   const Eigen::MatrixXd& x_new) {
  spec.validate();
  const std::size_t G = model.groups.size();
  const Eigen::Index n = x_train.rows();
  const Eigen::Index m = x_new.rows();
  const int d = spec.dimension();
  if (x_train.cols() != d || x_new.cols() != d) {
    throw std::invalid_argument("predict: design width != spec dimension");
  }
  if (model.theta.size() != G) throw std::invalid_argument("predict: bad model");
  for (const auto& theta : model.theta) {
    if (theta.size() != n) {
      throw std::invalid_argument("predict: theta length != x_train rows");
    }
  }

  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (const auto& g : model.groups) {
    for (int a : g.members) used[static_cast<std::size_t>(a)] = true;
  }

  // Per-coordinate centered kernels with cached embeddings on both sides.
  std::vector<std::unique_ptr<kernels::CenteredKernel>> k0(
      static_cast<std::size_t>(d));
  Eigen::MatrixXd train_emb = Eigen::MatrixXd::Zero(n, d);
  Eigen::MatrixXd new_emb = Eigen::MatrixXd::Zero(m, d);
  for (int a = 0; a < d; ++a) {
    if (!used[static_cast<std::size_t>(a)]) continue;
    auto& k = k0[static_cast<std::size_t>(a)];
    k = std::make_unique<kernels::CenteredKernel>(
        spec.coords[static_cast<std::size_t>(a)], spec.quadrature_order);
    for (Eigen::Index i = 0; i < n; ++i) {
      train_emb(i, a) = k->mean_embedding(x_train(i, a));
    }
    for (Eigen::Index p = 0; p < m; ++p) {
      new_emb(p, a) = k->mean_embedding(x_new(p, a));
    }
  }

  Eigen::MatrixXd components =
      Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(G));
  for (Eigen::Index p = 0; p < m; ++p) {
    for (std::size_t g = 0; g < G; ++g) {
      const auto& members = model.groups[g].members;
      const Eigen::VectorXd& theta = model.theta[g];
      if (theta.isZero()) continue;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int a : members) {
          const auto& k = *k0[static_cast<std::size_t>(a)];
          prod *= kernels::base_kernel(k.model(), x_new(p, a), x_train(i, a)) -
                  new_emb(p, a) * train_emb(i, a) / k.grand_mean();
        }
        acc += theta(i) * prod;
      }
      components(p, static_cast<Eigen::Index>(g)) = acc;
    }
  }
  return components;
}

Eigen::VectorXd predict(const MetaModel& model, const kernels::KernelSpec& spec,
                        const Eigen::MatrixXd& x_train,
                        const Eigen::MatrixXd& x_new) {
  const Eigen::MatrixXd components =
      predict_components(model, spec, x_train, x_new);
  return (components.rowwise().sum().array() + model.intercept).matrix();
}

std::vector<kernels::GroupIndex> support(const MetaModel& model,
                                         double threshold) {
  std::vector<kernels::GroupIndex> out;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    if (model.norm_n[g] > threshold) out.push_back(model.groups[g]);
  }
  return out;
}

std::vector<double> decompose(const MetaModel& model) {
  double total = 0.0;
  for (double v : model.norm_n) total += v * v;
  if (!(total > 0.0)) {
    throw std::invalid_argument("decompose: all groups are zero");
  }
  std::vector<double> shares;
  shares.reserve(model.norm_n.size());
  for (double v : model.norm_n) shares.push_back(v * v / total);
  return shares;
}

}  // namespace gsanova::estimator
