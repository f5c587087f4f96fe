#pragma once

// Command-line orchestration. One JSON config file fully specifies a run;
// flags only select the config, redirect output, and override dotted keys.
// Every command writes a manifest (config echo, content hashes, versions,
// RNG identifier) before its result files, so reruns are auditable.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsanova/bench.hpp"

namespace gsanova::cli {

struct ProbeConfig {
  std::string kind = "concentration";  // covering | sudakov | concentration
  std::string statistic = "max";       // concentration phi
  double alpha = 3.0;                  // probe law exponent, 2.0 allowed
  std::size_t dim = 16;                // ambient dimension / coordinates
  std::size_t n_mc = 20000;
  std::size_t random_points = 32;      // point-set size, uniform in [0,1]^dim
  std::vector<double> deltas;          // defaults to {0.125,0.25,0.5,1.0}
  bool proper = false;                 // exhaustive certification when <= 20 pts
};

struct RunConfig {
  std::string command;                 // fit | tune | simulate | sweep | probe
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 20260801ull;
  std::string data;                    // optional dataset CSV for fit / tune
  double alpha_prime = 1.0;            // eigendecay exponent for assumptions
  bench::Scenario scenario;
  ProbeConfig probe;

  // Strict parser: unknown keys and type mismatches throw
  // std::invalid_argument / nlohmann exceptions (both map to exit 2).
  static RunConfig from_json(const nlohmann::json& doc);
  [[nodiscard]] nlohmann::json to_json() const;  // full resolved echo
};

// Applies one "--override key=value" onto the raw config document. The key
// is a dotted path; the value parses as JSON when possible, else as a string.
void apply_override(nlohmann::json& doc, const std::string& spec);

// Executes one command; returns the exit status (0 success, 2 invalid
// config, 3 numerical failure, 4 I/O failure). On failure an error.json
// record lands in the output directory when that directory is writable.
int run(const RunConfig& config);

// argv entry point used by the binary; parses flags, loads + overrides the
// config, and dispatches to run().
int main_entry(int argc, char** argv);

}  // namespace gsanova::cli
