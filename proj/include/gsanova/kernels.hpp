#pragma once

// ANOVA kernel construction. Each input coordinate a carries a base kernel
// k_a on a compact interval and a uniform input law P_a. The centered kernel
//
//   k0_a(x, y) = k_a(x, y) - E_U[k_a(x,U)] E_U[k_a(y,U)] / E_{U,V}[k_a(U,V)]
//
// reproduces the subspace of P_a-centered functions, and a group kernel is
// the product k_v = prod_{a in v} k0_a. Expectations are Gauss-Legendre
// quadrature against P_a; one-dimensional integrals split the panel at the
// kernel's diagonal kink (min and |x-y| families), which restores spectral
// accuracy and makes the quadrature centering identity hold to roundoff.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gsanova::kernels {

enum class Family { brownian, gaussian, matern32, sobolev1 };

[[nodiscard]] Family family_from_string(const std::string& name);
[[nodiscard]] std::string to_string(Family family);

struct CoordinateModel {
  Family family = Family::brownian;
  double bandwidth = 0.25;  // length scale for gaussian / matern32
  double lo = 0.0;          // uniform law support [lo, hi]
  double hi = 1.0;
};

struct KernelSpec {
  std::vector<CoordinateModel> coords;
  int quadrature_order = 64;

  // d identical coordinates on [0,1].
  static KernelSpec homogeneous(int d, Family family, double bandwidth = 0.25,
                                int quadrature_order = 64);

  [[nodiscard]] int dimension() const { return static_cast<int>(coords.size()); }
  void validate() const;  // throws std::invalid_argument
};

// Base kernel value for one coordinate model.
[[nodiscard]] double base_kernel(const CoordinateModel& model, double x, double y);

// Centered kernel evaluator for one coordinate. Construction precomputes the
// grand mean E_{U,V} k(U,V); mean embeddings are evaluated on demand.
class CenteredKernel {
 public:
  CenteredKernel(const CoordinateModel& model, int quadrature_order);

  [[nodiscard]] double operator()(double x, double y) const;
  [[nodiscard]] double mean_embedding(double x) const;  // E_U k(x, U)
  [[nodiscard]] double grand_mean() const { return grand_mean_; }
  [[nodiscard]] const CoordinateModel& model() const { return model_; }

 private:
  CoordinateModel model_;
  int order_;
  double grand_mean_ = 0.0;
};

[[nodiscard]] CenteredKernel center_kernel(const KernelSpec& spec, int coordinate);

// A group of coordinate indices (0-based, sorted, unique). The user-facing
// labels x1..xd are 1-based; conversion happens at the serialization layer.
struct GroupIndex {
  std::vector<int> members;

  [[nodiscard]] bool operator==(const GroupIndex& other) const {
    return members == other.members;
  }
  [[nodiscard]] std::string label() const;  // "1x3" style 1-based label
};

// All nonempty subsets of {0..d-1} with size <= max_order, in graded
// lexicographic order (singletons first, then pairs, ...). Deterministic.
[[nodiscard]] std::vector<GroupIndex> enumerate_groups(int d, int max_order);

struct GramOptions {
  bool spectra = true;        // eigenvalues of K_v / n
  bool eigenvectors = true;   // kept when the solver will run on this set
  double clip_tol = 0.0;      // eigenvalues below this are clipped to zero
};

struct GroupGram {
  GroupIndex group;
  Eigen::MatrixXd K;          // n x n ANOVA Gram, K[i][j] = k_v(X_i, X_j)
  Eigen::VectorXd eigvals;    // eigenvalues of K, descending, clipped at >= 0
  Eigen::MatrixXd eigvecs;    // matching columns; empty unless requested
  Eigen::VectorXd spectrum;   // eigvals / n
  double min_eig_raw = 0.0;   // smallest eigenvalue before clipping
};

struct GramSet {
  Eigen::MatrixXd design;     // n x d
  KernelSpec spec;
  std::vector<GroupGram> groups;

  [[nodiscard]] Eigen::Index n() const { return design.rows(); }
  [[nodiscard]] const GroupGram& at(std::size_t g) const { return groups.at(g); }
};

// Assembles the centered per-coordinate Grams once and forms each group Gram
// as an entrywise product. Entry order is deterministic and schedule free.
[[nodiscard]] GramSet anova_gram(const KernelSpec& spec,
                                 const Eigen::MatrixXd& design,
                                 const std::vector<GroupIndex>& groups,
                                 const GramOptions& options = {});

// Spectrum of K / n: descending, negative eigenvalues clipped to zero.
[[nodiscard]] Eigen::VectorXd gram_spectrum(const Eigen::MatrixXd& K);

}  // namespace gsanova::kernels
