#include "gsanova/serialize.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "gsanova/rng.hpp"

namespace gsanova::serialize {

namespace {

std::string iso_timestamp() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += '|';
    out += labels[i];
  }
  return out;
}

nlohmann::json members_one_based(const kernels::GroupIndex& group) {
  nlohmann::json members = nlohmann::json::array();
  for (int a : group.members) members.push_back(a + 1);
  return members;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char byte : data) {
    hash ^= byte;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string hash_hex(std::string_view data) {
  const std::uint64_t h = fnv1a(data);
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) {
    buf[15 - i] = digits[(h >> (4 * i)) & 0xf];
  }
  buf[16] = '\0';
  return buf;
}

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("render_csv: ragged row");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot open " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("io: short write to " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path.string());
  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("io: read failure on " + path.string());
  return body;
}

nlohmann::json to_json(const kernels::GroupIndex& group) {
  return {{"label", group.label()}, {"members", members_one_based(group)}};
}

nlohmann::json to_json(const rates::RateParams& params) {
  nlohmann::json doc = {
      {"delta", params.delta},
      {"c1", params.c1},
      {"c2", params.c2},
      {"c3", params.c3},
      {"floor", params.floor == rates::RateParams::Floor::dims ? "dims"
                                                               : "log_dims"},
  };
  doc["beta"] = params.beta ? nlohmann::json(*params.beta) : nlohmann::json();
  return doc;
}

nlohmann::json to_json(const rates::TuningTable& table) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json g = to_json(row.group);
    g["nu_empirical"] = row.nu_empirical;
    g["lambda"] = row.lambda;
    g["mu"] = row.mu;
    g["gamma"] = row.gamma;
    groups.push_back(std::move(g));
  }
  return {{"n", table.n},
          {"d", table.d},
          {"sigma", table.sigma},
          {"radius", table.radius},
          {"params", to_json(table.params)},
          {"c1_in_theorem_range", table.params.c1_in_theorem_range()},
          {"groups", std::move(groups)}};
}

nlohmann::json to_json(const rates::AssumptionReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json g = to_json(row.group);
    g["lambda"] = row.lambda;
    g["nlog_margin"] = row.nlog_margin;
    g["nlog_ok"] = row.nlog_ok;
    rows.push_back(std::move(g));
  }
  return {{"rows", std::move(rows)},
          {"nlog_ok", report.nlog_ok},
          {"sparsity_ok", report.sparsity_ok},
          {"sparsity_evaluated", report.sparsity_evaluated},
          {"sparsity_margin", report.sparsity_margin},
          {"regularity_ok", report.regularity_ok},
          {"regularity_margin", report.regularity_margin},
          {"c1_in_theorem_range", report.c1_in_theorem_range}};
}

nlohmann::json to_json(const estimator::MetaModel& model) {
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    nlohmann::json doc = to_json(model.groups[g]);
    doc["norm_n"] = model.norm_n[g];
    doc["norm_h"] = model.norm_h[g];
    doc["radius"] = model.radius[g];
    nlohmann::json theta = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.theta[g].size(); ++i) {
      theta.push_back(model.theta[g][i]);
    }
    doc["theta"] = std::move(theta);
    groups.push_back(std::move(doc));
  }
  return {{"intercept", model.intercept}, {"groups", std::move(groups)}};
}

nlohmann::json to_json(const estimator::FitResult& result) {
  nlohmann::json diagnostics = nlohmann::json::array();
  for (std::size_t g = 0; g < result.model.groups.size(); ++g) {
    diagnostics.push_back({{"label", result.model.groups[g].label()},
                           {"pg_residual", result.pg_residual[g]},
                           {"zero_margin", result.zero_margin[g]}});
  }
  return {{"model", to_json(result.model)},
          {"converged", result.converged},
          {"sweeps", result.sweeps},
          {"binding_count", result.binding_count},
          {"objective_trace", result.objective_trace},
          {"diagnostics", std::move(diagnostics)}};
}

namespace {

nlohmann::json to_json(const bench::ReplicateRow& row) {
  return {{"n", row.n},
          {"replicate", row.replicate},
          {"empirical_risk", row.empirical_risk},
          {"l2_risk", row.l2_risk},
          {"l2_std_error", row.l2_std_error},
          {"support", row.support},
          {"support_exact", row.support_exact},
          {"nu_mean", row.nu_mean},
          {"oracle_ratio", row.oracle_ratio},
          {"decomposable", row.decomposable},
          {"converged", row.converged},
          {"sweeps", row.sweeps}};
}

}  // namespace

nlohmann::json to_json(const bench::RiskReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) rows.push_back(to_json(row));
  return {{"mean_empirical_risk", report.mean_empirical_risk},
          {"median_empirical_risk", report.median_empirical_risk},
          {"sd_empirical_risk", report.sd_empirical_risk},
          {"mean_l2_risk", report.mean_l2_risk},
          {"median_l2_risk", report.median_l2_risk},
          {"sd_l2_risk", report.sd_l2_risk},
          {"support_recovery_rate", report.support_recovery_rate},
          {"decomposable_fraction", report.decomposable_fraction},
          {"mean_oracle_ratio", report.mean_oracle_ratio},
          {"median_oracle_ratio", report.median_oracle_ratio},
          {"c1_below_theorem_floor", report.c1_below_theorem_floor},
          {"group_labels", report.group_labels},
          {"replicates", std::move(rows)}};
}

nlohmann::json to_json(const bench::SweepResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& point : result.points) {
    points.push_back({{"n", point.n},
                      {"mean_empirical_risk", point.mean_empirical_risk},
                      {"mean_l2_risk", point.mean_l2_risk},
                      {"mean_nu", point.mean_nu}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) rows.push_back(to_json(row));
  nlohmann::json tunings = nlohmann::json::array();
  for (const auto& tuning : result.tunings) tunings.push_back(to_json(tuning));
  return {{"points", std::move(points)},
          {"risk_slope",
           {{"slope", result.risk_fit.slope},
            {"intercept", result.risk_fit.intercept},
            {"r2", result.risk_fit.r2},
            {"ci_lo", result.risk_slope_ci_lo},
            {"ci_hi", result.risk_slope_ci_hi}}},
          {"nu_slope",
           {{"slope", result.nu_fit.slope},
            {"intercept", result.nu_fit.intercept},
            {"r2", result.nu_fit.r2}}},
          {"degenerate", result.degenerate},
          {"c1_below_theorem_floor", result.c1_below_theorem_floor},
          {"tunings", std::move(tunings)},
          {"replicates", std::move(rows)}};
}

nlohmann::json to_json(const probes::CoverResult& result) {
  nlohmann::json doc = {{"delta", result.delta},
                        {"upper", result.upper},
                        {"packing_lower", result.packing_lower},
                        {"upper_half", result.upper_half}};
  doc["exact"] =
      result.exact ? nlohmann::json(*result.exact) : nlohmann::json();
  return doc;
}

nlohmann::json to_json(const probes::SudakovReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"delta", row.delta},
                    {"cover", row.cover},
                    {"log_cover", row.log_cover},
                    {"bound_quadratic", row.bound_quadratic},
                    {"bound_alpha", row.bound_alpha},
                    {"regime", row.regime},
                    {"ratio", row.ratio}});
  }
  return {{"m_hat", report.m_hat},
          {"m_std_error", report.m_std_error},
          {"n_mc", report.n_mc},
          {"rows", std::move(rows)}};
}

nlohmann::json to_json(const probes::ConcentrationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"u", row.u},
                    {"tail", row.tail},
                    {"exceedances", row.exceedances}});
  }
  return {{"statistic", probes::to_string(report.statistic)},
          {"alpha", report.alpha},
          {"dim", report.dim},
          {"n_mc", report.n_mc},
          {"slope", report.slope},
          {"intercept", report.intercept},
          {"r2", report.r2},
          {"degenerate", report.degenerate},
          {"gaussian_baseline_ok", report.gaussian_baseline_ok},
          {"rows", std::move(rows)}};
}

std::string risk_rows_csv(const std::vector<bench::ReplicateRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    cells.push_back({std::to_string(row.n), std::to_string(row.replicate),
                     format_double(row.empirical_risk),
                     format_double(row.l2_risk),
                     format_double(row.l2_std_error),
                     format_double(row.nu_mean),
                     format_double(row.oracle_ratio), join_labels(row.support),
                     row.support_exact ? "1" : "0", row.decomposable ? "1" : "0",
                     row.converged ? "1" : "0", std::to_string(row.sweeps)});
  }
  return render_csv({"n", "replicate", "empirical_risk", "l2_risk",
                     "l2_std_error", "nu_mean", "oracle_ratio", "support",
                     "support_exact", "decomposable", "converged", "sweeps"},
                    cells);
}

std::string fit_groups_csv(const estimator::FitResult& result,
                           const rates::TuningTable& tuning) {
  std::vector<std::vector<std::string>> cells;
  for (std::size_t g = 0; g < result.model.groups.size(); ++g) {
    const double norm_n = result.model.norm_n[g];
    const double norm_h = result.model.norm_h[g];
    const double radius = result.model.radius[g];
    const bool active = norm_n > 1e-10;
    const bool binding = std::abs(norm_h - radius) <= 1e-9;
    cells.push_back({result.model.groups[g].label(),
                     format_double(tuning.rows[g].nu_empirical),
                     format_double(tuning.rows[g].lambda),
                     format_double(tuning.rows[g].mu),
                     format_double(tuning.rows[g].gamma), format_double(norm_n),
                     format_double(norm_h), format_double(radius),
                     active ? "1" : "0", binding ? "1" : "0",
                     format_double(result.pg_residual[g]),
                     format_double(result.zero_margin[g])});
  }
  return render_csv({"group", "nu_empirical", "lambda", "mu", "gamma", "norm_n",
                     "norm_h", "radius", "active", "binding", "pg_residual",
                     "zero_margin"},
                    cells);
}

std::string dataset_csv(const bench::Dataset& data) {
  const int d = static_cast<int>(data.design.cols());
  std::vector<std::string> header;
  for (int a = 0; a < d; ++a) header.push_back("x" + std::to_string(a + 1));
  header.push_back("y");
  header.push_back("m");
  std::vector<std::vector<std::string>> cells;
  for (Eigen::Index i = 0; i < data.design.rows(); ++i) {
    std::vector<std::string> row;
    for (int a = 0; a < d; ++a) row.push_back(format_double(data.design(i, a)));
    row.push_back(format_double(data.response[i]));
    row.push_back(format_double(data.truth[i]));
    cells.push_back(std::move(row));
  }
  return render_csv(header, cells);
}

std::string sweep_points_csv(const bench::SweepResult& result) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& point : result.points) {
    cells.push_back({std::to_string(point.n),
                     format_double(point.mean_empirical_risk),
                     format_double(point.mean_l2_risk),
                     format_double(point.mean_nu)});
  }
  return render_csv({"n", "mean_empirical_risk", "mean_l2_risk", "mean_nu"},
                    cells);
}

std::string sudakov_csv(const probes::SudakovReport& report) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : report.rows) {
    cells.push_back({"sudakov", format_double(report.m_hat),
                     format_double(report.m_std_error), format_double(row.delta),
                     std::to_string(row.cover), format_double(row.log_cover),
                     format_double(row.bound_quadratic),
                     format_double(row.bound_alpha), row.regime,
                     format_double(row.ratio)});
  }
  return render_csv({"probe", "m_hat", "m_std_error", "delta", "cover",
                     "log_cover", "bound_quadratic", "bound_alpha", "regime",
                     "ratio"},
                    cells);
}

std::string concentration_csv(const probes::ConcentrationReport& report) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : report.rows) {
    cells.push_back({"concentration", probes::to_string(report.statistic),
                     format_double(report.alpha), std::to_string(report.dim),
                     std::to_string(report.n_mc), format_double(row.u),
                     format_double(row.tail), std::to_string(row.exceedances)});
  }
  return render_csv({"probe", "statistic", "alpha", "dim", "n_mc", "u", "tail",
                     "exceedances"},
                    cells);
}

std::string covering_csv(const std::vector<probes::CoverResult>& results) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& result : results) {
    cells.push_back({"covering", format_double(result.delta),
                     std::to_string(result.packing_lower),
                     std::to_string(result.upper),
                     std::to_string(result.upper_half),
                     result.exact ? std::to_string(*result.exact) : ""});
  }
  return render_csv(
      {"probe", "delta", "packing_lower", "upper", "upper_half", "exact"},
      cells);
}

ParsedDataset parse_dataset_csv(const std::string& body) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : body) {
    if (c == '\n') {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) lines.push_back(current);
  if (lines.empty()) throw std::invalid_argument("dataset csv: empty file");

  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    return cells;
  };

  const auto header = split(lines[0]);
  int d = 0;
  while (d < static_cast<int>(header.size()) &&
         header[static_cast<std::size_t>(d)] == "x" + std::to_string(d + 1)) {
    ++d;
  }
  if (d == 0) {
    throw std::invalid_argument("dataset csv: header must start with x1");
  }
  int y_col = -1, m_col = -1;
  for (std::size_t i = static_cast<std::size_t>(d); i < header.size(); ++i) {
    if (header[i] == "y" && y_col < 0) {
      y_col = static_cast<int>(i);
    } else if (header[i] == "m" && m_col < 0) {
      m_col = static_cast<int>(i);
    } else {
      throw std::invalid_argument("dataset csv: unexpected column " + header[i]);
    }
  }

  const std::size_t n = lines.size() - 1;
  ParsedDataset out;
  out.design.resize(static_cast<Eigen::Index>(n), d);
  if (y_col >= 0) out.response.resize(static_cast<Eigen::Index>(n));
  if (m_col >= 0) out.truth.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = split(lines[i + 1]);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("dataset csv: ragged row " +
                                  std::to_string(i + 2));
    }
    const auto value = [&](int col) {
      const std::string& cell = cells[static_cast<std::size_t>(col)];
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) {
        throw std::invalid_argument("dataset csv: bad number " + cell);
      }
      return v;
    };
    for (int a = 0; a < d; ++a) out.design(static_cast<Eigen::Index>(i), a) = value(a);
    if (y_col >= 0) out.response[static_cast<Eigen::Index>(i)] = value(y_col);
    if (m_col >= 0) out.truth[static_cast<Eigen::Index>(i)] = value(m_col);
  }
  return out;
}

OutputWriter::OutputWriter(std::filesystem::path out_dir, std::string command,
                           nlohmann::json config, std::uint64_t seed)
    : dir_(std::move(out_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw std::runtime_error("io: cannot create output dir " + dir_.string());
  }
  manifest_["command"] = std::move(command);
  manifest_["config"] = config;
  manifest_["config_hash"] = hash_hex(config.dump(2));
  manifest_["seed"] = seed;
  manifest_["rng_algorithm"] = rng::algorithm_id;
  manifest_["versions"] = {
      {"gsanova", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"compiler", __VERSION__},
  };
  manifest_["timestamp"] = iso_timestamp();
  manifest_["artifacts"] = nlohmann::json::object();
  flush_manifest();
}

void OutputWriter::write_text(const std::string& name, std::string_view body) {
  write_file(dir_ / name, body);
  manifest_["artifacts"][name] = hash_hex(body);
  flush_manifest();
}

void OutputWriter::write_json(const std::string& name,
                              const nlohmann::json& doc) {
  write_text(name, doc.dump(2) + "\n");
}

void OutputWriter::flush_manifest() const {
  write_file(dir_ / "manifest.json", manifest_.dump(2) + "\n");
}

}  // namespace gsanova::serialize
