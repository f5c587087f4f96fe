#include <doctest.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsanova/bench.hpp"
#include "gsanova/rng.hpp"
#include "gsanova/serialize.hpp"

using namespace gsanova;
using nlohmann::json;

namespace {

// Fresh scratch directory under the system temp root; wiped on entry so a
// crashed earlier run cannot leak stale artifacts into the assertions.
std::filesystem::path scratch_dir(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("format_double round trips exactly") {
  const double values[] = {0.0,   -0.0,        1.0,          0.1,
                           1.0 / 3.0,          -3.141592653589793,
                           1e-300, 1.2345e17,  -7.25,        42.0};
  for (double x : values) {
    const std::string text = serialize::format_double(x);
    CHECK(std::stod(text) == x);
  }
  // Shortest-form output, not padded scientific notation.
  CHECK(serialize::format_double(1.0) == "1");
  CHECK(serialize::format_double(-7.25) == "-7.25");
}

TEST_CASE("fnv1a matches the published 64-bit test vectors") {
  CHECK(serialize::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(serialize::fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(serialize::fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("hash_hex is 16 lowercase hex digits") {
  CHECK(serialize::hash_hex("") == "cbf29ce484222325");
  CHECK(serialize::hash_hex("foobar") == "85944171f73967e8");
  const std::string h = serialize::hash_hex("arbitrary body");
  CHECK(h.size() == 16);
  for (char c : h) {
    const bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    CHECK(hex);
  }
}

TEST_CASE("render_csv joins cells and rejects ragged rows") {
  const std::string out = serialize::render_csv(
      {"a", "b"}, {{"1", "2"}, {"x", "y"}});
  CHECK(out == "a,b\n1,2\nx,y\n");
  CHECK(serialize::render_csv({"only"}, {}) == "only\n");
  CHECK_THROWS_AS(serialize::render_csv({"a", "b"}, {{"1"}}),
                  std::invalid_argument);
}

TEST_CASE("dataset csv round trips through the parser") {
  bench::Dataset data;
  data.design.resize(3, 2);
  data.design << 0.1, 0.2, 0.34567891234567891, 0.9, 1.0 / 3.0, 0.0;
  data.truth.resize(3);
  data.truth << -1.5, 0.0, 2.25;
  data.response.resize(3);
  data.response << 0.017, -3.0, 1e-12;

  const std::string body = serialize::dataset_csv(data);
  CHECK(body.substr(0, body.find('\n')) == "x1,x2,y,m");

  const auto parsed = serialize::parse_dataset_csv(body);
  CHECK(parsed.design.rows() == 3);
  CHECK(parsed.design.cols() == 2);
  CHECK(parsed.design.isApprox(data.design, 0.0));
  CHECK(parsed.response.isApprox(data.response, 0.0));
  CHECK(parsed.truth.isApprox(data.truth, 0.0));
}

TEST_CASE("dataset parser accepts partial columns and CRLF") {
  const auto design_only = serialize::parse_dataset_csv("x1\n0.5\n0.25\n");
  CHECK(design_only.design.rows() == 2);
  CHECK(design_only.response.size() == 0);
  CHECK(design_only.truth.size() == 0);

  const auto crlf = serialize::parse_dataset_csv("x1,y\r\n0.5,1.0\r\n");
  CHECK(crlf.response[0] == 1.0);
}

TEST_CASE("dataset parser rejects malformed input") {
  CHECK_THROWS_AS(serialize::parse_dataset_csv(""), std::invalid_argument);
  // Header must start with the x1, x2, ... block.
  CHECK_THROWS_AS(serialize::parse_dataset_csv("a,b\n1,2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(serialize::parse_dataset_csv("x1,z\n1,2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(serialize::parse_dataset_csv("x1,y\n1,2,3\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(serialize::parse_dataset_csv("x1,y\n1,oops\n"),
                  std::invalid_argument);
}

TEST_CASE("group index serializes with one-based members") {
  kernels::GroupIndex pair;
  pair.members = {0, 2};
  const json doc = serialize::to_json(pair);
  CHECK(doc.at("label") == "1x3");
  CHECK(doc.at("members") == json::array({1, 3}));
}

TEST_CASE("rate params serialize beta as null when absent") {
  rates::RateParams params;
  json doc = serialize::to_json(params);
  CHECK(doc.at("beta").is_null());
  CHECK(doc.at("floor") == "dims");
  CHECK(doc.at("c1") == 15.0);

  params.beta = 2.5;
  params.floor = rates::RateParams::Floor::log_dims;
  doc = serialize::to_json(params);
  CHECK(doc.at("beta") == 2.5);
  CHECK(doc.at("floor") == "log_dims");
}

TEST_CASE("file io reports io-prefixed errors") {
  const auto dir = scratch_dir("gsanova_test_io");
  std::filesystem::create_directories(dir);
  const auto path = dir / "blob.txt";
  const std::string body = "line1\nline2\r\nraw\tbytes";
  serialize::write_file(path, body);
  CHECK(serialize::read_file(path) == body);

  bool io_prefixed = false;
  try {
    static_cast<void>(serialize::read_file(dir / "missing.txt"));
  } catch (const std::runtime_error& e) {
    io_prefixed = std::string(e.what()).rfind("io:", 0) == 0;
  }
  CHECK(io_prefixed);
  std::filesystem::remove_all(dir);
}

TEST_CASE("output writer maintains a hashed manifest") {
  const auto dir = scratch_dir("gsanova_test_writer");
  const json config = {{"command", "probe"}, {"seed", 7}};
  serialize::OutputWriter out(dir, "probe", config, 7);

  // The manifest lands before any result so a crashed run is still traceable.
  auto manifest = json::parse(serialize::read_file(dir / "manifest.json"));
  CHECK(manifest.at("command") == "probe");
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("config") == config);
  CHECK(manifest.at("config_hash") == serialize::hash_hex(config.dump(2)));
  CHECK(manifest.at("rng_algorithm") == std::string(rng::algorithm_id));
  CHECK(manifest.at("versions").at("gsanova") == serialize::kVersion);
  CHECK(manifest.at("artifacts").empty());

  const std::string timestamp = manifest.at("timestamp");
  REQUIRE(timestamp.size() == 20);
  CHECK(timestamp[10] == 'T');
  CHECK(timestamp.back() == 'Z');

  const std::string body = "u,tail\n0.5,0.25\n";
  out.write_text("trace.csv", body);
  CHECK(serialize::read_file(dir / "trace.csv") == body);
  manifest = json::parse(serialize::read_file(dir / "manifest.json"));
  CHECK(manifest.at("artifacts").at("trace.csv") == serialize::hash_hex(body));

  out.write_json("doc.json", json{{"k", 1}});
  const std::string doc_body = serialize::read_file(dir / "doc.json");
  CHECK(doc_body == json{{"k", 1}}.dump(2) + "\n");
  manifest = json::parse(serialize::read_file(dir / "manifest.json"));
  CHECK(manifest.at("artifacts").at("doc.json") ==
        serialize::hash_hex(doc_body));
  std::filesystem::remove_all(dir);
}

TEST_CASE("fit result json carries model and diagnostics") {
  estimator::MetaModel model;
  model.intercept = 0.25;
  kernels::GroupIndex g;
  g.members = {1};
  model.groups = {g};
  model.theta = {Eigen::VectorXd::Constant(2, 0.5)};
  model.norm_n = {0.3};
  model.norm_h = {0.9};
  model.radius = {1.0};

  estimator::FitResult result;
  result.model = model;
  result.converged = true;
  result.sweeps = 3;
  result.binding_count = 0;
  result.objective_trace = {1.0, 0.5};
  result.pg_residual = {1e-9};
  result.zero_margin = {0.0};

  const json doc = serialize::to_json(result);
  CHECK(doc.at("model").at("intercept") == 0.25);
  CHECK(doc.at("model").at("groups")[0].at("members") == json::array({2}));
  CHECK(doc.at("model").at("groups")[0].at("theta").size() == 2);
  CHECK(doc.at("converged") == true);
  CHECK(doc.at("diagnostics")[0].at("label") == "2");
  CHECK(doc.at("objective_trace").size() == 2);
}

}  // TEST_SUITE("serialize")
