#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsanova/cli.hpp"
#include "gsanova/serialize.hpp"

using namespace gsanova;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(std::vector<std::string> args) {
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (auto& arg : args) argv.push_back(arg.data());
  return cli::main_entry(static_cast<int>(argv.size()), argv.data());
}

std::filesystem::path write_config(const std::filesystem::path& dir,
                                   const json& doc) {
  const auto path = dir / "config.json";
  serialize::write_file(path, doc.dump(2) + "\n");
  return path;
}

// Small scenario shared by the end-to-end cases; cheap enough that the whole
// suite stays in the seconds range.
json small_scenario() {
  return {{"truth", "additive_sine"}, {"dimension", 2},   {"n", 48},
          {"max_order", 2},           {"alpha", 3.0},     {"sigma", 0.1},
          {"radius", 6.0},            {"replicates", 2},  {"seed", 99},
          {"l2_mc", 1000}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config round trips through json") {
  const json doc = {{"command", "tune"},
                    {"seed", 42},
                    {"scenario", {{"dimension", 3}, {"n", 64}, {"alpha", 4.0}}},
                    {"probe", {{"kind", "sudakov"}, {"dim", 4}}}};
  const auto config = cli::RunConfig::from_json(doc);
  CHECK(config.command == "tune");
  CHECK(config.seed == 42);
  CHECK(config.scenario.dimension == 3);
  CHECK(config.probe.kind == "sudakov");

  // A full emit parses back to the identical document.
  const json emitted = config.to_json();
  CHECK(cli::RunConfig::from_json(emitted).to_json().dump() == emitted.dump());
}

TEST_CASE("unknown keys and bad enums are rejected") {
  CHECK_THROWS_AS(cli::RunConfig::from_json({{"commandx", "tune"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::RunConfig::from_json(
                      {{"command", "tune"}, {"scenario", {{"nn", 10}}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::RunConfig::from_json(
                      {{"command", "probe"}, {"probe", {{"kind", "census"}}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::RunConfig::from_json({{"command", "explode"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      cli::RunConfig::from_json(
          {{"command", "tune"}, {"scenario", {{"rate", {{"floor", "sqrt"}}}}}}),
      std::invalid_argument);
}

TEST_CASE("overrides follow dotted paths and parse json values") {
  json doc = {{"command", "fit"}, {"scenario", {{"n", 10}}}};
  cli::apply_override(doc, "scenario.n=512");
  CHECK(doc["scenario"]["n"] == 512);

  cli::apply_override(doc, "scenario.rate.c1=1e9");
  CHECK(doc["scenario"]["rate"]["c1"] == 1e9);

  cli::apply_override(doc, "scenario.n_grid=[8,16]");
  CHECK(doc["scenario"]["n_grid"] == json::array({8, 16}));

  // Values that are not valid json stay bare strings, so paths survive.
  cli::apply_override(doc, "data=/tmp/run 1/dataset.csv");
  CHECK(doc["data"] == "/tmp/run 1/dataset.csv");

  CHECK_THROWS_AS(cli::apply_override(doc, "no_equals_sign"),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::apply_override(doc, "=5"), std::invalid_argument);
}

TEST_CASE("tune writes a recomputable tuning table") {
  const auto dir = scratch_dir("gsanova_cli_tune");
  const auto config = write_config(dir, {{"scenario", small_scenario()}});
  const auto out = dir / "out";
  REQUIRE(run_cli({"gsanova", "tune", "--config", config.string(), "--out",
                   out.string(), "--seed", "123"}) == 0);

  const auto tuning = json::parse(serialize::read_file(out / "tuning.json"));
  const double n = tuning.at("n").get<double>();
  const double d = tuning.at("d").get<double>();
  const double sigma = tuning.at("sigma").get<double>();
  const double c1 = tuning.at("params").at("c1").get<double>();
  const double floor = std::sqrt(d / n);
  const auto radius = tuning.at("radius").get<std::vector<double>>();
  const auto rows = tuning.at("groups");
  REQUIRE(rows.size() == 3);  // d = 2 at max_order 2: {1}, {2}, {1,2}
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const double nu = rows[g].at("nu_empirical").get<double>();
    const double lambda = rows[g].at("lambda").get<double>();
    CHECK(lambda == std::max(nu, floor));
    CHECK(rows[g].at("mu").get<double>() ==
          doctest::Approx(c1 * lambda * lambda * sigma * sigma / radius[g])
              .epsilon(1e-12));
    CHECK(rows[g].at("gamma").get<double>() ==
          doctest::Approx(c1 * lambda * sigma).epsilon(1e-12));
  }

  const auto assumptions =
      json::parse(serialize::read_file(out / "assumptions.json"));
  CHECK(assumptions.contains("nlog_ok"));
  CHECK(assumptions.at("sparsity_evaluated") == false);

  // Manifest hashes must match the bodies actually on disk.
  const auto manifest = json::parse(serialize::read_file(out / "manifest.json"));
  CHECK(manifest.at("command") == "tune");
  CHECK(manifest.at("seed") == 123);
  for (const auto& [name, hash] : manifest.at("artifacts").items()) {
    CHECK(hash == serialize::hash_hex(serialize::read_file(out / name)));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("simulate then fit reuses the dataset csv") {
  const auto dir = scratch_dir("gsanova_cli_fit");
  const auto config = write_config(dir, {{"scenario", small_scenario()}});
  const auto sim_out = dir / "sim";
  REQUIRE(run_cli({"gsanova", "simulate", "--config", config.string(), "--out",
                   sim_out.string()}) == 0);
  REQUIRE(std::filesystem::exists(sim_out / "dataset_000.csv"));
  REQUIRE(std::filesystem::exists(sim_out / "dataset_001.csv"));

  const auto data = serialize::parse_dataset_csv(
      serialize::read_file(sim_out / "dataset_000.csv"));
  REQUIRE(data.design.rows() == 48);
  REQUIRE(data.response.size() == 48);

  // A c1 hammer empties the active set; the intercept falls back to the mean.
  const auto fit_out = dir / "fit";
  REQUIRE(run_cli({"gsanova", "fit", "--config", config.string(), "--out",
                   fit_out.string(), "--override",
                   "data=" + (sim_out / "dataset_000.csv").string(),
                   "--override", "scenario.rate.c1=1e9"}) == 0);

  const auto model = json::parse(serialize::read_file(fit_out / "model.json"));
  CHECK(model.at("model").at("intercept").get<double>() ==
        doctest::Approx(data.response.mean()).epsilon(1e-12));
  for (const auto& group : model.at("model").at("groups")) {
    CHECK(group.at("norm_n").get<double>() <= 1e-10);
  }
  CHECK(std::filesystem::exists(fit_out / "fit_result.csv"));
  CHECK(std::filesystem::exists(fit_out / "tuning.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("exit codes distinguish config, io, and parse failures") {
  const auto dir = scratch_dir("gsanova_cli_errors");

  // Parse-phase failures happen before any output directory exists.
  CHECK(run_cli({"gsanova", "tune", "--config",
                 (dir / "missing.json").string()}) == 2);
  serialize::write_file(dir / "broken.json", "{not json");
  CHECK(run_cli({"gsanova", "tune", "--config",
                 (dir / "broken.json").string()}) == 2);
  CHECK(run_cli({"gsanova", "tune"}) == 2);  // --config is required

  // Config errors inside the run leave an error record behind.
  json bad = {{"scenario", small_scenario()}};
  bad["scenario"]["n"] = 4;
  const auto bad_path = write_config(dir, bad);
  const auto bad_out = dir / "bad";
  CHECK(run_cli({"gsanova", "tune", "--config", bad_path.string(), "--out",
                 bad_out.string()}) == 2);
  auto record = json::parse(serialize::read_file(bad_out / "error.json"));
  CHECK(record.at("error").at("type") == "config");
  CHECK(record.at("error").at("exit_code") == 2);

  // A missing data file is an io failure, not a config one.
  const auto io_config = write_config(dir, {{"scenario", small_scenario()},
                                            {"data", "/nonexistent/data.csv"}});
  const auto io_out = dir / "io";
  CHECK(run_cli({"gsanova", "fit", "--config", io_config.string(), "--out",
                 io_out.string()}) == 4);
  record = json::parse(serialize::read_file(io_out / "error.json"));
  CHECK(record.at("error").at("type") == "io");
  CHECK(record.at("error").at("exit_code") == 4);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep reruns are byte identical") {
  const auto dir = scratch_dir("gsanova_cli_sweep");
  json scenario = small_scenario();
  scenario["max_order"] = 1;
  scenario["n_grid"] = {16, 32, 48, 64};
  scenario["rate"] = {{"c1", 2.0}};
  const auto config = write_config(dir, {{"scenario", scenario}, {"seed", 7}});

  const auto out_a = dir / "a";
  const auto out_b = dir / "b";
  REQUIRE(run_cli({"gsanova", "sweep", "--config", config.string(), "--out",
                   out_a.string()}) == 0);
  REQUIRE(run_cli({"gsanova", "sweep", "--config", config.string(), "--out",
                   out_b.string()}) == 0);
  for (const char* name : {"sweep.json", "points.csv", "replicates.csv"}) {
    CHECK(serialize::read_file(out_a / name) ==
          serialize::read_file(out_b / name));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("probe reruns are byte identical") {
  const auto dir = scratch_dir("gsanova_cli_probe");
  const json doc = {{"seed", 11},
                    {"probe",
                     {{"kind", "concentration"},
                      {"statistic", "max"},
                      {"alpha", 3.0},
                      {"dim", 8},
                      {"n_mc", 2000}}}};
  const auto config = write_config(dir, doc);
  const auto out_a = dir / "a";
  const auto out_b = dir / "b";
  REQUIRE(run_cli({"gsanova", "probe", "--config", config.string(), "--out",
                   out_a.string()}) == 0);
  REQUIRE(run_cli({"gsanova", "probe", "--config", config.string(), "--out",
                   out_b.string()}) == 0);
  for (const char* name : {"concentration.json", "concentration.csv"}) {
    CHECK(serialize::read_file(out_a / name) ==
          serialize::read_file(out_b / name));
  }

  // Covering probe artifacts carry the certified sandwich per delta.
  const json cover_doc = {{"seed", 11},
                          {"probe",
                           {{"kind", "covering"},
                            {"dim", 2},
                            {"random_points", 16},
                            {"deltas", {0.25, 0.5}}}}};
  const auto cover_config = write_config(dir, cover_doc);
  const auto cover_out = dir / "cover";
  REQUIRE(run_cli({"gsanova", "probe", "--config", cover_config.string(),
                   "--out", cover_out.string()}) == 0);
  const auto covering =
      json::parse(serialize::read_file(cover_out / "covering.json"));
  REQUIRE(covering.size() == 2);
  for (const auto& row : covering) {
    CHECK(row.at("packing_lower").get<int>() <= row.at("upper").get<int>());
    CHECK(row.at("upper").get<int>() <= row.at("upper_half").get<int>());
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE("cli")
