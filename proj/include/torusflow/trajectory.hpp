#pragma once

// Trajectory directory layout:
//   <dir>/config.cfg       copy of the run configuration
//   <dir>/timeseries.csv   one row per monitor report, config echo up front
//   <dir>/state_NNNNNN.*.snap   field snapshots (write-then-rename)
//   <dir>/verdict.txt      final status + per-criterion verdicts
// Every file appears atomically, so partial trajectories always parse.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "torusflow/config.hpp"
#include "torusflow/snapshot.hpp"

namespace torusflow {

class TrajectoryWriter {
 public:
  TrajectoryWriter(std::filesystem::path dir, const std::string& config_text,
                   const MonitorConfig& mc)
      : dir_(std::move(dir)), monitor_(mc) {
    std::filesystem::create_directories(dir_);
    detail::write_file_atomic(dir_ / "config.cfg", config_text);
  }

  const std::filesystem::path& dir() const { return dir_; }

  void add_report(const MonitorReport& r) { reports_.push_back(r); }
  const std::vector<MonitorReport>& reports() const { return reports_; }

  void write_state_snapshot(const SplitState& s, long report_index) {
    std::string stem = "state_" + index_string(report_index);
    write_snapshot(dir_ / (stem + ".u.snap"), make_snapshot(s.u, s.Gbar, s.t));
    if (s.kind == DatumKind::map)
      write_snapshot(dir_ / (stem + ".map.snap"), make_snapshot(s.map, s.Gbar, s.t));
    if (s.kind == DatumKind::spinor)
      write_snapshot(dir_ / (stem + ".phi.snap"), make_snapshot(s.phi, s.Gbar, s.t));
  }

  void write_state_snapshot(const UnsplitState& s, long report_index) {
    std::string stem = "state_" + index_string(report_index);
    write_snapshot(dir_ / (stem + ".frame.snap"), make_snapshot(s.F, s.t));
    if (s.kind == DatumKind::map)
      write_snapshot(dir_ / (stem + ".map.snap"), make_snapshot(s.map, FlatMetric(), s.t));
    if (s.kind == DatumKind::spinor)
      write_snapshot(dir_ / (stem + ".phi.snap"), make_snapshot(s.phi, FlatMetric(), s.t));
  }

  // Writes the time series with a config echo header; deterministic format.
  void write_timeseries() const {
    std::ostringstream out;
    out << "# eps=" << fmt(monitor_.eps) << " q=" << fmt(monitor_.q)
        << " basepoints=" << monitor_.basepoints << "\n";
    const auto& cols = monitor_columns();
    for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& r : reports_) {
      auto vals = monitor_values(r);
      for (size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << fmt(vals[i]);
      out << "\n";
    }
    detail::write_file_atomic(dir_ / "timeseries.csv", out.str());
  }

  void write_verdict(const std::string& status, const VerdictRecord& v,
                     const std::string& extra = "") const {
    std::ostringstream out;
    out << "status: " << status << "\n";
    for (const auto& c : v.criteria) {
      out << "criterion " << c.name << ": " << (c.passed ? "held" : "violated");
      if (!c.passed)
        out << " (" << c.violated_quantity << " at t=" << fmt(c.violation_time) << ")";
      out << "\n";
    }
    if (!extra.empty()) out << extra;
    detail::write_file_atomic(dir_ / "verdict.txt", out.str());
  }

  static std::string fmt(double x) {
    std::ostringstream ss;
    ss << std::setprecision(17) << x;
    return ss.str();
  }

 private:
  static std::string index_string(long k) {
    std::ostringstream ss;
    ss << std::setw(6) << std::setfill('0') << k;
    return ss.str();
  }

  std::filesystem::path dir_;
  MonitorConfig monitor_;
  std::vector<MonitorReport> reports_;
};

// Reader used by the report command.
struct TrajectorySummary {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string verdict_text;
};

inline TrajectorySummary read_trajectory(const std::filesystem::path& dir) {
  TrajectorySummary out;
  std::ifstream csv(dir / "timeseries.csv");
  if (!csv) throw std::runtime_error("no timeseries.csv in " + dir.string());
  std::string line;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (out.columns.empty()) {
      std::istringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.columns.push_back(tok);
      continue;
    }
    std::istringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::strtod(tok.c_str(), nullptr));
    if (row.size() == out.columns.size()) out.rows.push_back(std::move(row));
  }
  std::ifstream vf(dir / "verdict.txt");
  if (vf)
    out.verdict_text.assign((std::istreambuf_iterator<char>(vf)),
                            std::istreambuf_iterator<char>());
  return out;
}

}  // namespace torusflow
