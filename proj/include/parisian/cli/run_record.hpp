#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "parisian/asymptotics.hpp"
#include "parisian/constants_lab.hpp"
#include "parisian/parisian_estimator.hpp"

#ifndef PARISIAN_VERSION
#define PARISIAN_VERSION "0.0.0"
#endif

namespace parisian::cli {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_unknown_regime = 2,
  exit_malformed_config = 3,
  exit_unwritable_output = 4,
};

struct CliError : std::runtime_error {
  CliError(int code_, const std::string& what) : std::runtime_error(what), code(code_) {}
  int code;
};

/// Non-finite doubles become null so the record survives a JSON round trip.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

inline json to_json(const StepHalving& h) {
  return {{"grid_step", num(h.grid_step)}, {"p_hat", num(h.p_hat)},       {"stderr", num(h.stderr)},
          {"shift", num(h.shift)},         {"joint_stderr", num(h.joint_stderr)}, {"bias_bound", num(h.bias_bound)},
          {"flagged", h.flagged}};
}

inline json to_json(const MCEstimate& e, double u) {
  json j = {{"kind", "mc_estimate"},
            {"u", num(u)},
            {"p_hat", num(e.p_hat)},
            {"stderr", num(e.stderr)},
            {"n", e.n},
            {"ci95", {num(e.ci_lo), num(e.ci_hi)}},
            {"ess", num(e.ess)},
            {"grid_step", num(e.grid_step)},
            {"hits", e.hits},
            {"weighted", e.weighted},
            {"tilt", num(e.tilt)},
            {"window", num(e.window)},
            {"notes", e.notes}};
  j["step_halving"] = e.halving ? to_json(*e.halving) : json(nullptr);
  return j;
}

inline json to_json(const AsymptoticValue& v) {
  json inputs = json::object();
  for (const auto& [k, x] : v.inputs) inputs[k] = num(x);
  return {{"kind", "asymptotic"},
          {"regime", std::string(to_string(v.regime))},
          {"value", num(v.value)},
          {"inputs", inputs},
          {"validity_notes", v.validity_notes}};
}

inline json to_json(const ConstantEstimate& e) {
  json diag = json::array();
  for (const auto& p : e.diagnostics)
    diag.push_back({{"lambda", num(p.lambda)},
                    {"raw", num(p.raw)},
                    {"stderr", num(p.stderr)},
                    {"raw_over_lambda", num(p.raw_over_lambda())}});
  return {{"kind", "constant"},   {"value", num(e.value)},         {"stderr", num(e.stderr)},
          {"n", e.n},             {"lambda", num(e.lambda)},       {"T", num(e.T)},
          {"grid_step", num(e.grid_step)}, {"extrapolated", e.extrapolated}, {"diagnostics", diag},
          {"notes", e.notes}};
}

inline json to_json(const RuinTimeLaw& law, double u) {
  json pts = json::array();
  for (std::size_t i = 0; i < law.x.size(); ++i)
    pts.push_back({{"x", num(law.x[i])},
                   {"cdf", num(law.cdf[i])},
                   {"stderr", num(law.stderr[i])},
                   {"ci95", {num(law.ci_lo[i]), num(law.ci_hi[i])}}});
  return {{"kind", "ruin_time_law"}, {"u", num(u)},
          {"ruin_events", law.ruin_events}, {"ess", num(law.ess)},
          {"p_ruin", num(law.p_ruin)}, {"window", num(law.window)},
          {"grid_step", num(law.grid_step)}, {"weighted", law.weighted},
          {"points", pts}};
}

/// Plot-ready table; missing cells are empty in CSV and null in JSON.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    char buf[64];
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        if (row[i] && std::isfinite(*row[i])) {
          std::snprintf(buf, sizeof buf, "%.17g", *row[i]);
          out += buf;
        }
      }
      out += '\n';
    }
    return out;
  }

  bool operator==(const Table&) const = default;
};

inline const std::vector<std::string> kRatioHeader = {"u", "p_mc", "stderr", "p_asympt", "ratio",
                                                      "p_exact_if_available"};
inline const std::vector<std::string> kConstantsHeader = {"lambda", "T", "raw", "stderr", "raw_over_lambda"};

inline json to_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (const auto& c : r) row.push_back(num(c));
    rows.push_back(row);
  }
  return {{"header", t.header}, {"rows", rows}};
}

inline Table table_from_json(const json& j) {
  Table t;
  t.header = j.at("header").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<std::optional<double>> row;
    for (const auto& c : r) row.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct RunRecord {
  int format_version = kFormatVersion;
  std::string tool_version = PARISIAN_VERSION;
  std::string command;
  json config = json::object();
  json results = json::array();
  Table table;
  std::vector<std::string> notes;
  double duration_s = 0.0;
  std::string timestamp;

  bool operator==(const RunRecord&) const = default;
};

inline json to_json(const RunRecord& r) {
  return {{"format_version", r.format_version},
          {"tool_version", r.tool_version},
          {"command", r.command},
          {"config", r.config},
          {"results", r.results},
          {"table", to_json(r.table)},
          {"notes", r.notes},
          {"duration_s", r.duration_s},
          {"timestamp", r.timestamp}};
}

inline RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.format_version = j.at("format_version").get<int>();
  r.tool_version = j.at("tool_version").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.config = j.at("config");
  r.results = j.at("results");
  r.table = table_from_json(j.at("table"));
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.duration_s = j.at("duration_s").get<double>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes run.json and table.csv into dir (created if needed).
inline void write_record(const RunRecord& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CliError(exit_unwritable_output, "cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::filesystem::path& p, const std::string& body) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw CliError(exit_unwritable_output, "cannot write " + p.string());
    os << body;
    os.flush();
    if (!os) throw CliError(exit_unwritable_output, "failed writing " + p.string());
  };
  write(dir / "run.json", to_json(r).dump(2) + "\n");
  write(dir / "table.csv", r.table.to_csv());
}

inline RunRecord load_record(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  return record_from_json(json::parse(is));
}

}  // namespace parisian::cli
