#include "gsanova/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsanova/quadrature.hpp"

namespace gsanova::kernels {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

}  // namespace

Family family_from_string(const std::string& name) {
  if (name == "brownian") return Family::brownian;
  if (name == "gaussian") return Family::gaussian;
  if (name == "matern32") return Family::matern32;
  if (name == "sobolev1") return Family::sobolev1;
  throw std::invalid_argument("unknown kernel family: " + name);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::brownian: return "brownian";
    case Family::gaussian: return "gaussian";
    case Family::matern32: return "matern32";
    case Family::sobolev1: return "sobolev1";
  }
  throw std::logic_error("unreachable kernel family");
}

KernelSpec KernelSpec::homogeneous(int d, Family family, double bandwidth,
                                   int quadrature_order) {
  KernelSpec spec;
  spec.coords.assign(static_cast<std::size_t>(d),
                     CoordinateModel{family, bandwidth, 0.0, 1.0});
  spec.quadrature_order = quadrature_order;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (coords.empty()) throw std::invalid_argument("KernelSpec: no coordinates");
  if (quadrature_order < 2 || quadrature_order > 512) {
    throw std::invalid_argument("KernelSpec: quadrature_order out of range");
  }
  for (const auto& c : coords) {
    if (!(c.hi > c.lo)) throw std::invalid_argument("KernelSpec: empty law support");
    const bool needs_bandwidth =
        c.family == Family::gaussian || c.family == Family::matern32;
    if (needs_bandwidth && !(c.bandwidth > 0.0)) {
      throw std::invalid_argument("KernelSpec: bandwidth must be positive");
    }
  }
}

double base_kernel(const CoordinateModel& model, double x, double y) {
  switch (model.family) {
    case Family::brownian:
      return std::min(x, y);
    case Family::gaussian: {
      const double z = (x - y) / model.bandwidth;
      return std::exp(-0.5 * z * z);
    }
    case Family::matern32: {
      const double r = kSqrt3 * std::fabs(x - y) / model.bandwidth;
      return (1.0 + r) * std::exp(-r);
    }
    case Family::sobolev1:
      return 1.0 + std::min(x, y);
  }
  throw std::logic_error("unreachable kernel family");
}

CenteredKernel::CenteredKernel(const CoordinateModel& model, int quadrature_order)
    : model_(model), order_(quadrature_order) {
  // E_{U,V} k(U,V) = E_V [ E_U k(V,U) ]; the inner embedding is kink-split,
  // so the outer integrand is smooth and one panel suffices.
  const auto& rule = quad::gauss_legendre(order_);
  const double mid = 0.5 * (model_.lo + model_.hi);
  const double half = 0.5 * (model_.hi - model_.lo);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * mean_embedding(mid + half * rule.nodes[i]);
  }
  grand_mean_ = 0.5 * acc;  // times half / (hi - lo)
  if (!(std::fabs(grand_mean_) > 1e-12)) {
    throw std::invalid_argument(
        "CenteredKernel: grand mean vanishes, kernel is already centered");
  }
}

double CenteredKernel::mean_embedding(double x) const {
  // Split the law support at x: u -> k(x,u) has its only kink there for the
  // min and |x-u| families and is analytic elsewhere, so each sub-panel
  // integrates at spectral accuracy.
  const auto& rule = quad::gauss_legendre(order_);
  const double split = std::clamp(x, model_.lo, model_.hi);
  const double inv_len = 1.0 / (model_.hi - model_.lo);
  double acc = 0.0;
  for (const double bound : {model_.lo, model_.hi}) {
    const double a = std::min(split, bound);
    const double b = std::max(split, bound);
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double part = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      part += rule.weights[i] * base_kernel(model_, x, mid + half * rule.nodes[i]);
    }
    acc += half * part;
  }
  return acc * inv_len;
}

double CenteredKernel::operator()(double x, double y) const {
  return base_kernel(model_, x, y) -
         mean_embedding(x) * mean_embedding(y) / grand_mean_;
}

CenteredKernel center_kernel(const KernelSpec& spec, int coordinate) {
  spec.validate();
  if (coordinate < 0 || coordinate >= spec.dimension()) {
    throw std::invalid_argument("center_kernel: coordinate out of range");
  }
  return CenteredKernel(spec.coords[static_cast<std::size_t>(coordinate)],
                        spec.quadrature_order);
}

std::string GroupIndex::label() const {
  std::string out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(members[i] + 1);
  }
  return out;
}

std::vector<GroupIndex> enumerate_groups(int d, int max_order) {
  if (d < 1) throw std::invalid_argument("enumerate_groups: d must be >= 1");
  if (max_order < 1 || max_order > d) {
    throw std::invalid_argument("enumerate_groups: max_order out of [1, d]");
  }
  std::vector<GroupIndex> out;
  std::vector<int> current;
  // Lexicographic subsets of fixed size, sizes ascending: graded lex.
  auto emit = [&](auto&& self, int start, int remaining) -> void {
    if (remaining == 0) {
      out.push_back(GroupIndex{current});
      return;
    }
    for (int i = start; i <= d - remaining; ++i) {
      current.push_back(i);
      self(self, i + 1, remaining - 1);
      current.pop_back();
    }
  };
  for (int size = 1; size <= max_order; ++size) emit(emit, 0, size);
  return out;
}

namespace {

void validate_groups(int d, const std::vector<GroupIndex>& groups) {
  if (groups.empty()) throw std::invalid_argument("anova_gram: no groups");
  for (const auto& g : groups) {
    if (g.members.empty()) throw std::invalid_argument("anova_gram: empty group");
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      if (g.members[i] < 0 || g.members[i] >= d) {
        throw std::invalid_argument("anova_gram: group member out of range");
      }
      if (i > 0 && g.members[i] <= g.members[i - 1]) {
        throw std::invalid_argument("anova_gram: group must be sorted unique");
      }
    }
  }
}

void spectral_decompose(GroupGram& gg, bool want_vectors, double clip_tol,
                        Eigen::Index n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.compute(gg.K, want_vectors ? Eigen::ComputeEigenvectors
                                    : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("anova_gram: eigendecomposition failed");
  }
  const Eigen::VectorXd& ascending = solver.eigenvalues();
  gg.min_eig_raw = ascending(0);
  gg.eigvals = ascending.reverse();
  for (Eigen::Index i = 0; i < gg.eigvals.size(); ++i) {
    if (gg.eigvals(i) < clip_tol) gg.eigvals(i) = 0.0;
  }
  if (want_vectors) {
    gg.eigvecs = solver.eigenvectors().rowwise().reverse();
  }
  gg.spectrum = gg.eigvals / static_cast<double>(n);
}

}  // namespace

GramSet anova_gram(const KernelSpec& spec, const Eigen::MatrixXd& design,
                   const std::vector<GroupIndex>& groups,
                   const GramOptions& options) {
  spec.validate();
  const Eigen::Index n = design.rows();
  const int d = spec.dimension();
  if (design.cols() != d) {
    throw std::invalid_argument("anova_gram: design width != spec dimension");
  }
  if (n < 1) throw std::invalid_argument("anova_gram: empty design");
  if (!design.allFinite()) {
    throw std::invalid_argument("anova_gram: design has non-finite entries");
  }
  validate_groups(d, groups);

  // Which coordinates are actually used.
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (const auto& g : groups) {
    for (int a : g.members) used[static_cast<std::size_t>(a)] = true;
  }

  // One centered Gram per used coordinate; group Grams are entrywise
  // products of these, so assembly is deterministic elementwise arithmetic.
  std::vector<Eigen::MatrixXd> coord_gram(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    if (!used[static_cast<std::size_t>(a)]) continue;
    const CenteredKernel k0(spec.coords[static_cast<std::size_t>(a)],
                            spec.quadrature_order);
    Eigen::VectorXd emb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      emb(i) = k0.mean_embedding(design(i, a));
    }
    const double inv_grand = 1.0 / k0.grand_mean();
    Eigen::MatrixXd& C = coord_gram[static_cast<std::size_t>(a)];
    C.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        const double value =
            base_kernel(k0.model(), design(i, a), design(j, a)) -
            emb(i) * emb(j) * inv_grand;
        C(i, j) = value;
        C(j, i) = value;
      }
    }
  }

  GramSet set;
  set.design = design;
  set.spec = spec;
  set.groups.reserve(groups.size());
  for (const auto& g : groups) {
    GroupGram gg;
    gg.group = g;
    gg.K = coord_gram[static_cast<std::size_t>(g.members.front())];
    for (std::size_t m = 1; m < g.members.size(); ++m) {
      gg.K = gg.K.cwiseProduct(
          coord_gram[static_cast<std::size_t>(g.members[m])]);
    }
    if (options.spectra || options.eigenvectors) {
      spectral_decompose(gg, options.eigenvectors, options.clip_tol, n);
    }
    set.groups.push_back(std::move(gg));
  }
  return set;
}

Eigen::VectorXd gram_spectrum(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols() || K.rows() < 1) {
    throw std::invalid_argument("gram_spectrum: K must be square");
  }
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("gram_spectrum: K must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("gram_spectrum: eigendecomposition failed");
  }
  Eigen::VectorXd desc = solver.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < desc.size(); ++i) {
    if (desc(i) < 0.0) desc(i) = 0.0;
  }
  return desc / static_cast<double>(K.rows());
}

}  // namespace gsanova::kernels
