// Python bindings for the gsanova core. The surface mirrors the CLI: noise
// sampling and moments, critical radii, group enumeration, the ridge group
// sparse fit (wrapped in a Model that keeps the design and kernel spec so it
// can predict on new points), and the covering / Sudakov / concentration
// probes. Report types cross the boundary as plain dicts built from the same
// JSON views the CLI writes, so Python and file artifacts never disagree.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsanova/estimator.hpp"
#include "gsanova/kernels.hpp"
#include "gsanova/noise.hpp"
#include "gsanova/probes.hpp"
#include "gsanova/rates.hpp"
#include "gsanova/rng.hpp"
#include "gsanova/serialize.hpp"

namespace py = pybind11;
using namespace gsanova;

namespace {

py::object json_to_py(const nlohmann::json& value) {
  switch (value.type()) {
    case nlohmann::json::value_t::null:
      return py::none();
    case nlohmann::json::value_t::boolean:
      return py::bool_(value.get<bool>());
    case nlohmann::json::value_t::number_integer:
      return py::int_(value.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned:
      return py::int_(value.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float:
      return py::float_(value.get<double>());
    case nlohmann::json::value_t::string:
      return py::str(value.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& item : value) out.append(json_to_py(item));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [key, item] : value.items())
        out[py::str(key)] = json_to_py(item);
      return out;
    }
    default:
      throw std::runtime_error("unsupported JSON payload in binding layer");
  }
}

// Group members are 0-based in the core and 1-based everywhere user facing.
py::list groups_to_py(const std::vector<kernels::GroupIndex>& groups) {
  py::list out;
  for (const auto& group : groups) {
    py::list members;
    for (int a : group.members) members.append(a + 1);
    out.append(members);
  }
  return out;
}

struct FitOptions {
  int max_order = 1;
  std::string family = "brownian";
  double bandwidth = 0.25;
  int quadrature_order = 64;
  double radius = 1.0;
  double sigma = 1.0;
  double c1 = 15.0;
  double delta = 1.0;
  std::string floor = "dims";
  std::uint64_t seed = 0;
};

rates::RateParams rate_params(const FitOptions& opt) {
  rates::RateParams params;
  params.delta = opt.delta;
  params.c1 = opt.c1;
  if (opt.floor == "dims") {
    params.floor = rates::RateParams::Floor::dims;
  } else if (opt.floor == "log_dims") {
    params.floor = rates::RateParams::Floor::log_dims;
  } else {
    throw std::invalid_argument("floor must be 'dims' or 'log_dims'");
  }
  params.validate();
  return params;
}

// A fitted meta-model bundled with everything prediction needs.
class Model {
 public:
  Model(estimator::FitResult result, kernels::KernelSpec spec,
        Eigen::MatrixXd x_train, rates::TuningTable tuning)
      : result_(std::move(result)),
        spec_(std::move(spec)),
        x_train_(std::move(x_train)),
        tuning_(std::move(tuning)) {}

  double intercept() const { return result_.model.intercept; }
  py::list groups() const { return groups_to_py(result_.model.groups); }
  std::vector<double> norms_n() const { return result_.model.norm_n; }
  std::vector<double> norms_h() const { return result_.model.norm_h; }
  bool converged() const { return result_.converged; }
  int sweeps() const { return result_.sweeps; }
  std::vector<double> objective_trace() const { return result_.objective_trace; }

  std::vector<double> nu() const {
    std::vector<double> out;
    out.reserve(tuning_.rows.size());
    for (const auto& row : tuning_.rows) out.push_back(row.nu_empirical);
    return out;
  }
  std::vector<double> mu() const { return tuning_.mu(); }
  std::vector<double> gamma() const { return tuning_.gamma(); }
  bool c1_in_theorem_range() const {
    return tuning_.params.c1_in_theorem_range();
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& x_new) const {
    check_dimension(x_new);
    return estimator::predict(result_.model, spec_, x_train_, x_new);
  }

  Eigen::MatrixXd predict_components(const Eigen::MatrixXd& x_new) const {
    check_dimension(x_new);
    return estimator::predict_components(result_.model, spec_, x_train_, x_new);
  }

  py::list support(double threshold) const {
    return groups_to_py(estimator::support(result_.model, threshold));
  }

  std::vector<double> decompose() const {
    return estimator::decompose(result_.model);
  }

  py::object tuning() const {
    return json_to_py(serialize::to_json(tuning_));
  }

  std::string to_json() const {
    return serialize::to_json(result_).dump(2) + "\n";
  }

 private:
  void check_dimension(const Eigen::MatrixXd& x_new) const {
    if (x_new.cols() != x_train_.cols())
      throw std::invalid_argument("x_new must have the training dimension");
  }

  estimator::FitResult result_;
  kernels::KernelSpec spec_;
  Eigen::MatrixXd x_train_;
  rates::TuningTable tuning_;
};

Model fit_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                const FitOptions& opt) {
  if (x.rows() != y.size())
    throw std::invalid_argument("x and y must have matching row counts");
  if (x.rows() < 2) throw std::invalid_argument("need at least two rows");
  if (!(opt.sigma > 0.0))
    throw std::invalid_argument("sigma must be positive");
  if (!(opt.radius > 0.0))
    throw std::invalid_argument("radius must be positive");

  auto spec = kernels::KernelSpec::homogeneous(
      static_cast<int>(x.cols()), kernels::family_from_string(opt.family),
      opt.bandwidth, opt.quadrature_order);
  auto groups = kernels::enumerate_groups(spec.dimension(), opt.max_order);
  auto grams = kernels::anova_gram(spec, x, groups);

  std::vector<double> radius(groups.size(), opt.radius);
  auto tuning = rates::make_tuning_table_scaled(grams, rate_params(opt),
                                                radius, opt.sigma);
  estimator::FitConfig config;
  config.radius = radius;
  config.restart_seed = rng::derive_stream(opt.seed, 7);
  auto result = estimator::rescale_fit(y, opt.sigma, grams, tuning, config);
  return Model(std::move(result), std::move(spec), x, std::move(tuning));
}

py::object tune_table(const Eigen::MatrixXd& x, const FitOptions& opt) {
  if (x.rows() < 2) throw std::invalid_argument("need at least two rows");
  auto spec = kernels::KernelSpec::homogeneous(
      static_cast<int>(x.cols()), kernels::family_from_string(opt.family),
      opt.bandwidth, opt.quadrature_order);
  auto groups = kernels::enumerate_groups(spec.dimension(), opt.max_order);
  kernels::GramOptions options;
  options.eigenvectors = false;
  auto grams = kernels::anova_gram(spec, x, groups, options);
  std::vector<double> radius(groups.size(), opt.radius);
  auto table = rates::make_tuning_table_scaled(grams, rate_params(opt),
                                               radius, opt.sigma);
  return json_to_py(serialize::to_json(table));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "RKHS ANOVA meta-modeling with ridge group sparse estimation";
  m.attr("__version__") = serialize::kVersion;
  m.attr("rng_algorithm") = std::string(rng::algorithm_id);

  m.def(
      "sample_errors",
      [](double alpha, std::size_t n, std::uint64_t seed, double sigma,
         bool probe_mode) {
        auto spec = noise::NoiseSpec::make(alpha, sigma, probe_mode);
        auto draws = noise::sample_errors(spec, n, seed);
        return py::array_t<double>(static_cast<py::ssize_t>(draws.size()),
                                   draws.data());
      },
      py::arg("alpha"), py::arg("n"), py::arg("seed"), py::arg("sigma") = 1.0,
      py::arg("probe_mode") = false,
      "n unit-variance generalized Gaussian draws, scaled by sigma");

  m.def("normalizing_constant", &noise::normalizing_constant, py::arg("alpha"),
        "density constant a_alpha = alpha / (2 Gamma(1/alpha))");
  m.def("noise_variance", &noise::variance, py::arg("alpha"),
        "Var(Z) = Gamma(3/alpha) / Gamma(1/alpha) for the raw law");
  m.def("abs_first_moment", &noise::abs_first_moment, py::arg("alpha"));
  m.def("fourth_moment", &noise::fourth_moment, py::arg("alpha"));
  m.def("eps_square_variance", &noise::eps_square_variance, py::arg("alpha"),
        "Var(eps^2) for the standardized eps, used to size MC tolerances");
  m.def("noise_density", &noise::density, py::arg("alpha"), py::arg("x"));
  m.def("noise_cdf", &noise::cdf, py::arg("alpha"), py::arg("x"));
  m.def(
      "tail_log_derivative",
      [](double alpha, double t) {
        auto d = noise::tail_log_derivative(alpha, t);
        return py::make_tuple(d.exact, d.analytic);
      },
      py::arg("alpha"), py::arg("t"),
      "(exact, analytic) log-derivative of the upper tail at t");
  m.def("hazard_threshold", &noise::hazard_threshold, py::arg("alpha"),
        py::arg("rho") = 1.0);

  m.def(
      "enumerate_groups",
      [](int d, int max_order) {
        return groups_to_py(kernels::enumerate_groups(d, max_order));
      },
      py::arg("d"), py::arg("max_order"),
      "nonempty subsets of {1..d} up to max_order, graded lexicographic");

  m.def(
      "critical_radius",
      [](const Eigen::VectorXd& omega, std::size_t n, double delta,
         double tol) { return rates::critical_radius(omega, n, delta, tol); },
      py::arg("omega"), py::arg("n"), py::arg("delta") = 1.0,
      py::arg("tol") = 1e-9,
      "smallest t with Q(t) <= delta t^2 for a Gram spectrum omega");
  m.def(
      "q_function",
      [](const Eigen::VectorXd& omega, std::size_t n, double t) {
        return rates::q_function(omega, n, t);
      },
      py::arg("omega"), py::arg("n"), py::arg("t"));

  py::class_<Model>(m, "Model",
                    "fitted meta-model; groups are 1-based member lists")
      .def_property_readonly("intercept", &Model::intercept)
      .def_property_readonly("groups", &Model::groups)
      .def_property_readonly("norms_n", &Model::norms_n)
      .def_property_readonly("norms_h", &Model::norms_h)
      .def_property_readonly("converged", &Model::converged)
      .def_property_readonly("sweeps", &Model::sweeps)
      .def_property_readonly("objective_trace", &Model::objective_trace)
      .def_property_readonly("nu", &Model::nu)
      .def_property_readonly("mu", &Model::mu)
      .def_property_readonly("gamma", &Model::gamma)
      .def_property_readonly("c1_in_theorem_range", &Model::c1_in_theorem_range)
      .def("predict", &Model::predict, py::arg("x_new"))
      .def("predict_components", &Model::predict_components, py::arg("x_new"),
           "per-group contributions, one column per group")
      .def("support", &Model::support, py::arg("threshold") = 1e-10)
      .def("decompose", &Model::decompose,
           "empirical-norm shares across groups")
      .def("tuning", &Model::tuning, "tuning table as a dict")
      .def("to_json", &Model::to_json);

  m.def(
      "fit",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_order,
         const std::string& family, double bandwidth, int quadrature_order,
         double radius, double sigma, double c1, double delta,
         const std::string& floor, std::uint64_t seed) {
        FitOptions opt{max_order, family,  bandwidth, quadrature_order,
                       radius,    sigma,   c1,        delta,
                       floor,     seed};
        return fit_model(x, y, opt);
      },
      py::arg("x"), py::arg("y"), py::kw_only(), py::arg("max_order") = 1,
      py::arg("family") = "brownian", py::arg("bandwidth") = 0.25,
      py::arg("quadrature_order") = 64, py::arg("radius") = 1.0,
      py::arg("sigma") = 1.0, py::arg("c1") = 15.0, py::arg("delta") = 1.0,
      py::arg("floor") = "dims", py::arg("seed") = 0,
      "ridge group sparse fit on [0,1]^d with a homogeneous kernel spec");

  m.def(
      "tune",
      [](const Eigen::MatrixXd& x, int max_order, const std::string& family,
         double bandwidth, int quadrature_order, double radius, double sigma,
         double c1, double delta, const std::string& floor) {
        FitOptions opt{max_order, family, bandwidth, quadrature_order,
                       radius,    sigma,  c1,        delta,
                       floor,     0};
        return tune_table(x, opt);
      },
      py::arg("x"), py::kw_only(), py::arg("max_order") = 1,
      py::arg("family") = "brownian", py::arg("bandwidth") = 0.25,
      py::arg("quadrature_order") = 64, py::arg("radius") = 1.0,
      py::arg("sigma") = 1.0, py::arg("c1") = 15.0, py::arg("delta") = 1.0,
      py::arg("floor") = "dims",
      "critical radii and penalties for a design, as a dict");

  m.def(
      "covering_number",
      [](const Eigen::MatrixXd& points, double delta, bool proper) {
        return json_to_py(
            serialize::to_json(probes::covering_number(points, delta, proper)));
      },
      py::arg("points"), py::arg("delta"), py::arg("proper") = false,
      "greedy covering sandwich for a point set, as a dict");

  m.def(
      "sudakov_probe",
      [](const Eigen::MatrixXd& points, double alpha,
         std::optional<std::vector<double>> deltas, std::size_t n_mc,
         std::uint64_t seed) {
        std::vector<double> grid =
            deltas.value_or(std::vector<double>{0.125, 0.25, 0.5, 1.0});
        return json_to_py(serialize::to_json(
            probes::sudakov_probe(points, alpha, grid, n_mc, seed)));
      },
      py::arg("points"), py::arg("alpha"), py::arg("deltas") = py::none(),
      py::arg("n_mc") = 20000, py::arg("seed") = 0,
      "Sudakov-shape diagnostic for sup <t, Z> over the rows of points");

  m.def(
      "concentration_probe",
      [](double alpha, std::size_t dim, const std::string& statistic,
         std::size_t n_mc, std::uint64_t seed) {
        return json_to_py(serialize::to_json(probes::concentration_probe(
            alpha, dim, probes::statistic_from_string(statistic), n_mc,
            seed)));
      },
      py::arg("alpha"), py::arg("dim"), py::arg("statistic") = "max",
      py::arg("n_mc") = 20000, py::arg("seed") = 0,
      "tail-decay diagnostic for phi(Z) around its mean, as a dict");
}
