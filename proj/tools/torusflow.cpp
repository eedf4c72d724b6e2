// Command line driver: run flows, uniformize metrics, execute the acceptance
// suite and summarize stored trajectories.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "torusflow/acceptance.hpp"
#include "torusflow/runner.hpp"

namespace {

int load_config(const std::string& path, torusflow::RunConfig& cfg, std::string& text) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config file '" << path << "'\n";
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  torusflow::ParseResult pr = torusflow::parse_config(text);
  for (const auto& w : pr.config.warnings) std::cerr << "warning: " << w << "\n";
  if (!pr.ok) {
    std::cerr << "config errors (" << pr.errors.size() << "):\n";
    for (const auto& e : pr.errors) std::cerr << "  " << e << "\n";
    return 2;
  }
  cfg = pr.config;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torusflow: split geometric flows on the flat torus"};
  app.require_subcommand(1);

  std::string config_path, trajectory_dir;
  std::string check_dir = "acceptance-out";

  CLI::App* run = app.add_subcommand("run", "integrate a flow from a config file");
  run->add_option("config", config_path, "configuration file")->required();

  CLI::App* uni = app.add_subcommand("uniformize", "flow a metric to its flat representative");
  uni->add_option("config", config_path, "configuration file")->required();

  CLI::App* check = app.add_subcommand("check", "run the acceptance suite");
  check->add_option("--out", check_dir, "scratch directory for acceptance runs");

  CLI::App* report = app.add_subcommand("report", "summarize a trajectory directory");
  report->add_option("dir", trajectory_dir, "trajectory directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || uni->parsed()) {
      torusflow::RunConfig cfg;
      std::string text;
      if (int rc = load_config(config_path, cfg, text)) return rc;
      torusflow::ExecuteResult res = run->parsed()
                                         ? torusflow::execute(cfg, text, std::cout)
                                         : torusflow::execute_uniformize(cfg, text, std::cout);
      std::cout << "verdict: " << res.status << "\n";
      return res.code;
    }
    if (check->parsed()) {
      bool ok = torusflow::run_acceptance(std::cout, check_dir);
      return ok ? 0 : 3;
    }
    if (report->parsed()) {
      torusflow::TrajectorySummary s = torusflow::read_trajectory(trajectory_dir);
      std::cout << "reports: " << s.rows.size() << "\n";
      if (!s.rows.empty()) {
        auto col = [&](const std::string& name) {
          for (size_t i = 0; i < s.columns.size(); ++i)
            if (s.columns[i] == name) return static_cast<long>(i);
          return -1L;
        };
        for (const char* name :
             {"t", "vol", "curvature_l2", "map_energy", "spinor_energy", "inj_lower_bound",
              "u_c0", "velocity_l2"}) {
          long k = col(name);
          if (k < 0) continue;
          double lo = s.rows.front()[k], hi = lo, last = lo;
          for (auto& row : s.rows) {
            lo = std::min(lo, row[k]);
            hi = std::max(hi, row[k]);
            last = row[k];
          }
          std::cout << "  " << name << ": first " << s.rows.front()[k] << ", min " << lo
                    << ", max " << hi << ", last " << last << "\n";
        }
      }
      std::cout << s.verdict_text;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
