#pragma once

// Artifact serialization: CSV tables, JSON documents, content hashes, and the
// run manifest. Result bodies are deterministic byte-for-byte for a fixed
// config + seed: doubles print with 17 significant digits, files are written
// in binary mode with LF endings, and JSON keys are sorted by the library.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gsanova/bench.hpp"
#include "gsanova/estimator.hpp"
#include "gsanova/probes.hpp"
#include "gsanova/rates.hpp"

namespace gsanova::serialize {

inline constexpr const char* kVersion = "0.1.0";

// 17 significant digits, round-trip exact; integral values still carry a
// decimal exponent only when needed (to_chars general format).
[[nodiscard]] std::string format_double(double x);

// FNV-1a 64-bit over raw bytes, rendered as 16 hex digits.
[[nodiscard]] std::uint64_t fnv1a(std::string_view data);
[[nodiscard]] std::string hash_hex(std::string_view data);

// One CSV table: header plus string cells, LF endings, no quoting (labels
// and numbers never contain commas here).
[[nodiscard]] std::string render_csv(
    const std::vector<std::string>& header,
    const std::vector<std::vector<std::string>>& rows);

// Binary-mode write; throws std::runtime_error tagged "io:" on failure.
void write_file(const std::filesystem::path& path, std::string_view body);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

// JSON views of the result types. Group members serialize 1-based to match
// the x1..xd labels used everywhere user-facing.
[[nodiscard]] nlohmann::json to_json(const kernels::GroupIndex& group);
[[nodiscard]] nlohmann::json to_json(const rates::RateParams& params);
[[nodiscard]] nlohmann::json to_json(const rates::TuningTable& table);
[[nodiscard]] nlohmann::json to_json(const rates::AssumptionReport& report);
[[nodiscard]] nlohmann::json to_json(const estimator::MetaModel& model);
[[nodiscard]] nlohmann::json to_json(const estimator::FitResult& result);
[[nodiscard]] nlohmann::json to_json(const bench::RiskReport& report);
[[nodiscard]] nlohmann::json to_json(const bench::SweepResult& result);
[[nodiscard]] nlohmann::json to_json(const probes::CoverResult& result);
[[nodiscard]] nlohmann::json to_json(const probes::SudakovReport& report);
[[nodiscard]] nlohmann::json to_json(const probes::ConcentrationReport& report);

// CSV views (one row per replicate / group / grid value).
[[nodiscard]] std::string risk_rows_csv(const std::vector<bench::ReplicateRow>& rows);
[[nodiscard]] std::string fit_groups_csv(const estimator::FitResult& result,
                                         const rates::TuningTable& tuning);
[[nodiscard]] std::string dataset_csv(const bench::Dataset& data);
[[nodiscard]] std::string sweep_points_csv(const bench::SweepResult& result);
[[nodiscard]] std::string sudakov_csv(const probes::SudakovReport& report);
[[nodiscard]] std::string concentration_csv(const probes::ConcentrationReport& report);
[[nodiscard]] std::string covering_csv(const std::vector<probes::CoverResult>& results);

// Parses a dataset written by dataset_csv (or any x1..xd[,y][,m] table).
struct ParsedDataset {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;  // empty when the y column is absent
  Eigen::VectorXd truth;     // empty when the m column is absent
};
[[nodiscard]] ParsedDataset parse_dataset_csv(const std::string& body);

// Run manifest. Written to out_dir/manifest.json before any result file, then
// rewritten after each result so the final copy carries every content hash.
class OutputWriter {
 public:
  OutputWriter(std::filesystem::path out_dir, std::string command,
               nlohmann::json config, std::uint64_t seed);

  void write_text(const std::string& name, std::string_view body);
  void write_json(const std::string& name, const nlohmann::json& doc);
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  void flush_manifest() const;

  std::filesystem::path dir_;
  nlohmann::json manifest_;
};

}  // namespace gsanova::serialize
