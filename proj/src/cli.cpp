#include "gsanova/cli.hpp"

#include <cstdio>
#include <exception>
#include <set>
#include <stdexcept>

#include <CLI11.hpp>

#include "gsanova/rng.hpp"
#include "gsanova/serialize.hpp"

namespace gsanova::cli {

namespace {

using nlohmann::json;

void require_keys(const json& doc, const char* block,
                  const std::set<std::string>& allowed) {
  if (!doc.is_object()) {
    throw std::invalid_argument(std::string("config: ") + block +
                                " must be an object");
  }
  for (const auto& item : doc.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      throw std::invalid_argument(std::string("config: unknown key '") +
                                  item.key() + "' in " + block);
    }
  }
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  return doc.at(key).get<T>();
}

kernels::KernelSpec parse_kernel(const json& doc, int dimension) {
  require_keys(doc, "scenario.kernel",
               {"family", "bandwidth", "lo", "hi", "quadrature_order", "coords"});
  const int order = get_or(doc, "quadrature_order", 64);
  kernels::KernelSpec spec;
  spec.quadrature_order = order;
  if (doc.contains("coords")) {
    for (const auto& entry : doc.at("coords")) {
      require_keys(entry, "scenario.kernel.coords[]",
                   {"family", "bandwidth", "lo", "hi"});
      kernels::CoordinateModel coord;
      coord.family = kernels::family_from_string(
          get_or<std::string>(entry, "family", "brownian"));
      coord.bandwidth = get_or(entry, "bandwidth", 0.25);
      coord.lo = get_or(entry, "lo", 0.0);
      coord.hi = get_or(entry, "hi", 1.0);
      spec.coords.push_back(coord);
    }
  } else {
    kernels::CoordinateModel coord;
    coord.family = kernels::family_from_string(
        get_or<std::string>(doc, "family", "brownian"));
    coord.bandwidth = get_or(doc, "bandwidth", 0.25);
    coord.lo = get_or(doc, "lo", 0.0);
    coord.hi = get_or(doc, "hi", 1.0);
    spec.coords.assign(static_cast<std::size_t>(dimension), coord);
  }
  return spec;
}

rates::RateParams parse_rate(const json& doc) {
  require_keys(doc, "scenario.rate",
               {"delta", "c1", "c2", "c3", "beta", "floor"});
  rates::RateParams params;
  params.delta = get_or(doc, "delta", params.delta);
  params.c1 = get_or(doc, "c1", params.c1);
  params.c2 = get_or(doc, "c2", params.c2);
  params.c3 = get_or(doc, "c3", params.c3);
  if (doc.contains("beta") && !doc.at("beta").is_null()) {
    params.beta = doc.at("beta").get<double>();
  }
  const std::string floor = get_or<std::string>(doc, "floor", "dims");
  if (floor == "dims") {
    params.floor = rates::RateParams::Floor::dims;
  } else if (floor == "log_dims") {
    params.floor = rates::RateParams::Floor::log_dims;
  } else {
    throw std::invalid_argument("config: rate.floor must be dims or log_dims");
  }
  return params;
}

estimator::FitConfig parse_fit(const json& doc) {
  require_keys(doc, "scenario.fit",
               {"tol_rel_objective", "max_sweeps", "max_inner_iterations",
                "inner_tol", "zero_threshold", "rank_tol", "max_restarts"});
  estimator::FitConfig config;
  config.tol_rel_objective = get_or(doc, "tol_rel_objective", config.tol_rel_objective);
  config.max_sweeps = get_or(doc, "max_sweeps", config.max_sweeps);
  config.max_inner_iterations =
      get_or(doc, "max_inner_iterations", config.max_inner_iterations);
  config.inner_tol = get_or(doc, "inner_tol", config.inner_tol);
  config.zero_threshold = get_or(doc, "zero_threshold", config.zero_threshold);
  config.rank_tol = get_or(doc, "rank_tol", config.rank_tol);
  config.max_restarts = get_or(doc, "max_restarts", config.max_restarts);
  return config;
}

bench::Scenario parse_scenario(const json& doc, std::uint64_t run_seed) {
  require_keys(doc, "scenario",
               {"truth", "expression", "dimension", "n", "max_order", "alpha",
                "sigma", "replicates", "seed", "radius", "l2_mc", "jobs",
                "n_grid", "kernel", "rate", "fit"});
  bench::Scenario scenario;
  scenario.truth =
      bench::truth_from_string(get_or<std::string>(doc, "truth", "additive_sine"));
  scenario.expression = get_or<std::string>(doc, "expression", "");
  scenario.dimension = get_or(doc, "dimension", 2);
  scenario.n = get_or<std::size_t>(doc, "n", 256);
  scenario.max_order = get_or(doc, "max_order", 1);
  scenario.alpha = get_or(doc, "alpha", 3.0);
  scenario.sigma = get_or(doc, "sigma", 0.1);
  scenario.replicates = get_or(doc, "replicates", 10);
  scenario.seed = get_or<std::uint64_t>(doc, "seed", run_seed);
  scenario.radius = get_or(doc, "radius", 1.0);
  scenario.l2_mc = get_or<std::size_t>(doc, "l2_mc", 4000);
  scenario.jobs = get_or(doc, "jobs", 1);
  scenario.n_grid =
      get_or<std::vector<std::size_t>>(doc, "n_grid", {64, 128, 256, 512, 1024});
  scenario.kernel = parse_kernel(doc.contains("kernel") ? doc.at("kernel") : json::object(),
                                 scenario.dimension);
  scenario.rate = parse_rate(doc.contains("rate") ? doc.at("rate") : json::object());
  scenario.fit = parse_fit(doc.contains("fit") ? doc.at("fit") : json::object());
  return scenario;
}

ProbeConfig parse_probe(const json& doc) {
  require_keys(doc, "probe",
               {"kind", "statistic", "alpha", "dim", "n_mc", "random_points",
                "deltas", "proper"});
  ProbeConfig probe;
  probe.kind = get_or<std::string>(doc, "kind", probe.kind);
  probe.statistic = get_or<std::string>(doc, "statistic", probe.statistic);
  probe.alpha = get_or(doc, "alpha", probe.alpha);
  probe.dim = get_or<std::size_t>(doc, "dim", probe.dim);
  probe.n_mc = get_or<std::size_t>(doc, "n_mc", probe.n_mc);
  probe.random_points =
      get_or<std::size_t>(doc, "random_points", probe.random_points);
  probe.deltas = get_or<std::vector<double>>(doc, "deltas", {});
  probe.proper = get_or(doc, "proper", probe.proper);
  if (probe.kind != "covering" && probe.kind != "sudakov" &&
      probe.kind != "concentration") {
    throw std::invalid_argument("config: probe.kind must be covering, sudakov, "
                                "or concentration");
  }
  return probe;
}

json kernel_to_json(const kernels::KernelSpec& spec) {
  json coords = json::array();
  for (const auto& coord : spec.coords) {
    coords.push_back({{"family", kernels::to_string(coord.family)},
                      {"bandwidth", coord.bandwidth},
                      {"lo", coord.lo},
                      {"hi", coord.hi}});
  }
  return {{"quadrature_order", spec.quadrature_order}, {"coords", coords}};
}

json fit_to_json(const estimator::FitConfig& config) {
  return {{"tol_rel_objective", config.tol_rel_objective},
          {"max_sweeps", config.max_sweeps},
          {"max_inner_iterations", config.max_inner_iterations},
          {"inner_tol", config.inner_tol},
          {"zero_threshold", config.zero_threshold},
          {"rank_tol", config.rank_tol},
          {"max_restarts", config.max_restarts}};
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc) {
  require_keys(doc, "config",
               {"command", "output_dir", "seed", "data", "alpha_prime",
                "scenario", "probe"});
  RunConfig config;
  config.command = get_or<std::string>(doc, "command", "");
  if (config.command != "fit" && config.command != "tune" &&
      config.command != "simulate" && config.command != "sweep" &&
      config.command != "probe") {
    throw std::invalid_argument(
        "config: command must be fit, tune, simulate, sweep, or probe");
  }
  config.output_dir = get_or<std::string>(doc, "output_dir", "out");
  config.seed = get_or<std::uint64_t>(doc, "seed", config.seed);
  config.data = get_or<std::string>(doc, "data", "");
  config.alpha_prime = get_or(doc, "alpha_prime", 1.0);
  config.scenario = parse_scenario(
      doc.contains("scenario") ? doc.at("scenario") : json::object(),
      config.seed);
  config.probe =
      parse_probe(doc.contains("probe") ? doc.at("probe") : json::object());
  return config;
}

json RunConfig::to_json() const {
  json scenario_doc = {
      {"truth", bench::to_string(scenario.truth)},
      {"expression", scenario.expression},
      {"dimension", scenario.dimension},
      {"n", scenario.n},
      {"max_order", scenario.max_order},
      {"alpha", scenario.alpha},
      {"sigma", scenario.sigma},
      {"replicates", scenario.replicates},
      {"seed", scenario.seed},
      {"radius", scenario.radius},
      {"l2_mc", scenario.l2_mc},
      {"jobs", scenario.jobs},
      {"n_grid", scenario.n_grid},
      {"kernel", kernel_to_json(scenario.kernel)},
      {"rate", serialize::to_json(scenario.rate)},
      {"fit", fit_to_json(scenario.fit)},
  };
  json probe_doc = {{"kind", probe.kind},
                    {"statistic", probe.statistic},
                    {"alpha", probe.alpha},
                    {"dim", probe.dim},
                    {"n_mc", probe.n_mc},
                    {"random_points", probe.random_points},
                    {"deltas", probe.deltas},
                    {"proper", probe.proper}};
  return {{"command", command},
          {"output_dir", output_dir.string()},
          {"seed", seed},
          {"data", data},
          {"alpha_prime", alpha_prime},
          {"scenario", std::move(scenario_doc)},
          {"probe", std::move(probe_doc)}};
}

void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like key.path=value: " +
                                spec);
  }
  std::string pointer = "/";
  for (char c : spec.substr(0, eq)) pointer += c == '.' ? '/' : c;
  const std::string value = spec.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings stay strings
  }
  doc[json::json_pointer(pointer)] = std::move(parsed);
}

namespace {

// Point set for the covering / sudakov probes: uniform in [0,1]^dim.
Eigen::MatrixXd probe_points(const ProbeConfig& probe, std::uint64_t seed) {
  if (probe.random_points == 0) {
    throw std::invalid_argument("probe: random_points >= 1");
  }
  Eigen::MatrixXd points(static_cast<Eigen::Index>(probe.random_points),
                         static_cast<Eigen::Index>(probe.dim));
  rng::Generator gen(rng::derive_stream(seed, 11));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      points(i, j) = gen.uniform(0.0, 1.0);
    }
  }
  return points;
}

std::vector<double> probe_deltas(const ProbeConfig& probe) {
  if (!probe.deltas.empty()) return probe.deltas;
  return {0.125, 0.25, 0.5, 1.0};
}

void run_tune(const RunConfig& config, serialize::OutputWriter& out) {
  const bench::Scenario& scenario = config.scenario;
  Eigen::MatrixXd design;
  if (!config.data.empty()) {
    const auto parsed =
        serialize::parse_dataset_csv(serialize::read_file(config.data));
    if (parsed.design.cols() != scenario.dimension) {
      throw std::invalid_argument("tune: data dimension mismatch");
    }
    design = parsed.design;
  } else {
    design = bench::make_design(scenario, 0, scenario.n);
  }
  kernels::GramOptions options;
  options.eigenvectors = false;
  const auto groups =
      kernels::enumerate_groups(scenario.dimension, scenario.max_order);
  const auto grams =
      kernels::anova_gram(scenario.kernel, design, groups, options);
  const auto tuning = bench::scenario_tuning(scenario, grams);
  out.write_json("tuning.json", serialize::to_json(tuning));
  out.write_json("assumptions.json",
                 serialize::to_json(rates::assumption_report(
                     tuning, std::nullopt, scenario.alpha, config.alpha_prime)));
}

void run_fit(const RunConfig& config, serialize::OutputWriter& out) {
  const bench::Scenario& scenario = config.scenario;
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  if (!config.data.empty()) {
    const auto parsed =
        serialize::parse_dataset_csv(serialize::read_file(config.data));
    if (parsed.design.cols() != scenario.dimension) {
      throw std::invalid_argument("fit: data dimension mismatch");
    }
    if (parsed.response.size() == 0) {
      throw std::invalid_argument("fit: data file has no y column");
    }
    design = parsed.design;
    response = parsed.response;
  } else {
    const auto truth = bench::TruthFunction::make(
        scenario.truth, scenario.dimension, scenario.expression);
    const auto data = bench::make_dataset(scenario, truth, 0, scenario.n);
    design = data.design;
    response = data.response;
  }
  const auto groups =
      kernels::enumerate_groups(scenario.dimension, scenario.max_order);
  const auto grams = kernels::anova_gram(scenario.kernel, design, groups);
  const auto tuning = bench::scenario_tuning(scenario, grams);
  estimator::FitConfig fit_config = scenario.fit;
  fit_config.radius.assign(groups.size(), scenario.radius);
  fit_config.restart_seed = rng::derive_stream(scenario.seed, 7);
  const auto result =
      scenario.sigma > 0.0
          ? estimator::rescale_fit(response, scenario.sigma, grams, tuning,
                                   fit_config)
          : estimator::fit(response, grams, tuning, fit_config);
  out.write_json("tuning.json", serialize::to_json(tuning));
  out.write_json("model.json", serialize::to_json(result));
  out.write_text("fit_result.csv", serialize::fit_groups_csv(result, tuning));
}

void run_simulate(const RunConfig& config, serialize::OutputWriter& out) {
  const bench::Scenario& scenario = config.scenario;
  const auto truth = bench::TruthFunction::make(
      scenario.truth, scenario.dimension, scenario.expression);
  for (int r = 0; r < scenario.replicates; ++r) {
    const auto data = bench::make_dataset(scenario, truth, r, scenario.n);
    char name[32];
    std::snprintf(name, sizeof name, "dataset_%03d.csv", r);
    out.write_text(name, serialize::dataset_csv(data));
  }
}

void run_sweep(const RunConfig& config, serialize::OutputWriter& out) {
  const auto result = bench::rate_sweep(config.scenario);
  out.write_json("sweep.json", serialize::to_json(result));
  out.write_text("points.csv", serialize::sweep_points_csv(result));
  out.write_text("replicates.csv", serialize::risk_rows_csv(result.rows));
}

void run_probe(const RunConfig& config, serialize::OutputWriter& out) {
  const ProbeConfig& probe = config.probe;
  const std::uint64_t seed = config.seed;
  if (probe.kind == "covering") {
    const auto points = probe_points(probe, seed);
    std::vector<probes::CoverResult> results;
    for (double delta : probe_deltas(probe)) {
      results.push_back(probes::covering_number(points, delta, probe.proper));
    }
    json doc = json::array();
    for (const auto& result : results) {
      doc.push_back(serialize::to_json(result));
    }
    out.write_json("covering.json", doc);
    out.write_text("covering.csv", serialize::covering_csv(results));
  } else if (probe.kind == "sudakov") {
    const auto points = probe_points(probe, seed);
    const auto report =
        probes::sudakov_probe(points, probe.alpha, probe_deltas(probe),
                              probe.n_mc, rng::derive_stream(seed, 12));
    out.write_json("sudakov.json", serialize::to_json(report));
    out.write_text("sudakov.csv", serialize::sudakov_csv(report));
  } else {
    const auto report = probes::concentration_probe(
        probe.alpha, probe.dim, probes::statistic_from_string(probe.statistic),
        probe.n_mc, rng::derive_stream(seed, 13));
    out.write_json("concentration.json", serialize::to_json(report));
    out.write_text("concentration.csv", serialize::concentration_csv(report));
  }
}

void write_error_record(const std::filesystem::path& dir,
                        const std::string& type, const std::string& message,
                        int code) {
  try {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return;
    const json doc = {{"error", {{"type", type},
                                 {"message", message},
                                 {"exit_code", code}}}};
    serialize::write_file(dir / "error.json", doc.dump(2) + "\n");
  } catch (...) {
    // The error path must not throw; stderr already carries the message.
  }
}

}  // namespace

int run(const RunConfig& config) {
  try {
    // Probes do not touch the scenario; everything else does, at least for
    // the kernel spec, so validate up front for a clean exit-2 on bad input.
    if (config.command != "probe") config.scenario.validate();
    serialize::OutputWriter out(config.output_dir, config.command,
                                config.to_json(), config.seed);
    if (config.command == "tune") {
      run_tune(config, out);
    } else if (config.command == "fit") {
      run_fit(config, out);
    } else if (config.command == "simulate") {
      run_simulate(config, out);
    } else if (config.command == "sweep") {
      run_sweep(config, out);
    } else if (config.command == "probe") {
      run_probe(config, out);
    } else {
      throw std::invalid_argument("config: unknown command " + config.command);
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    write_error_record(config.output_dir, "config", e.what(), 2);
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    write_error_record(config.output_dir, "config", e.what(), 2);
    return 2;
  } catch (const std::runtime_error& e) {
    const bool io = std::string(e.what()).rfind("io:", 0) == 0;
    std::fprintf(stderr, "%s error: %s\n", io ? "io" : "numerical", e.what());
    write_error_record(config.output_dir, io ? "io" : "numerical", e.what(),
                       io ? 4 : 3);
    return io ? 4 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    write_error_record(config.output_dir, "numerical", e.what(), 3);
    return 3;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"gsanova: RKHS ANOVA meta-models with ridge group sparse "
               "estimation under generalized Gaussian noise"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int jobs = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "seed (overrides config)");
  app.add_option("--jobs", jobs, "replicate worker threads (overrides config)");
  app.add_option("--override", overrides,
                 "dotted-path config override, e.g. scenario.n=512");

  std::vector<CLI::App*> subcommands;
  for (const char* name : {"fit", "tune", "simulate", "sweep", "probe"}) {
    // Flags may appear after the subcommand; unmatched ones flow to the app.
    subcommands.push_back(app.add_subcommand(name)->fallthrough());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  json doc;
  try {
    doc = json::parse(serialize::read_file(config_path));
    for (const auto& spec : overrides) apply_override(doc, spec);
    for (const auto* sub : subcommands) {
      if (sub->parsed()) doc["command"] = sub->get_name();
    }
    if (!out_dir.empty()) doc["output_dir"] = out_dir;
    if (seed >= 0) {
      doc["seed"] = static_cast<std::uint64_t>(seed);
      if (doc.contains("scenario") && doc["scenario"].contains("seed")) {
        doc["scenario"].erase("seed");
      }
    }
    if (jobs > 0) doc["scenario"]["jobs"] = jobs;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  RunConfig config;
  try {
    config = RunConfig::from_json(doc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  return run(config);
}

}  // namespace gsanova::cli
