#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "torusflow/random_fields.hpp"
#include "torusflow/runner.hpp"

using namespace torusflow;

namespace {

std::filesystem::path temp_dir() {
  auto p = std::filesystem::temp_directory_path() /
           ("torusflow_test_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(p);
  return p;
}

const char* kMinimalRicci = R"(
[run]
flow = ricci
n = 64
[metric]
preset = sine-bump
)";

}  // namespace

TEST_CASE("config: minimal file parses with defaults") {
  ParseResult pr = parse_config(kMinimalRicci);
  REQUIRE(pr.ok);
  CHECK(pr.config.flow == "ricci");
  CHECK(pr.config.n == 64);
  CHECK(pr.config.u_preset == "sine-bump");
  CHECK(pr.config.monitor.q == 6.0);
  CHECK(pr.config.warnings.empty());
}

TEST_CASE("config: the q > 4 gate and other rejections collect all errors") {
  ParseResult pr = parse_config(R"(
[run]
flow = spinor-split
n = 48
[datum]
kind = random-spinor
[monitor]
q = 3
eps = -0.1
[made-up]
key = 1
)");
  CHECK_FALSE(pr.ok);
  auto has = [&](const std::string& needle) {
    for (const auto& e : pr.errors)
      if (e.find(needle) != std::string::npos) return true;
    return false;
  };
  CHECK(has("monitor.q"));        // q = 3 rejected: the exponent must exceed 4
  CHECK(has("monitor.eps"));
  CHECK(has("run.n"));            // 48 is not a power of two
  CHECK(has("unknown key"));
  CHECK(pr.errors.size() >= 4);
}

TEST_CASE("config: non-unit determinant is renormalized with a warning") {
  ParseResult pr = parse_config(R"(
[run]
flow = ricci
[metric]
g11 = 2
g12 = 0
g22 = 1
)");
  REQUIRE(pr.ok);
  REQUIRE(pr.config.warnings.size() == 1);
  CHECK(std::abs(pr.config.G.g11 - std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(pr.config.G.g22 - 1.0 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(pr.config.G.det() - 1.0) < 1e-12);
}

TEST_CASE("config: datum compatibility is enforced") {
  ParseResult a = parse_config("[run]\nflow = hrf\n[datum]\nkind = random-spinor\n");
  CHECK_FALSE(a.ok);
  ParseResult b = parse_config("[run]\nflow = ricci\n[datum]\nkind = random-map\n");
  CHECK_FALSE(b.ok);
  ParseResult c = parse_config("[run]\nflow = hrf\n[datum]\nkind = equator-map\n");
  CHECK(c.ok);
}

TEST_CASE("snapshots round trip bitwise") {
  auto dir = temp_dir();
  const int n = 32;
  std::mt19937_64 rng(9);

  ScalarField u = random_band_limited(n, 3, 0.5, rng);
  FlatMetric G(1.2, 0.1, (1.0 + 0.01) / 1.2);
  write_snapshot(dir / "u.snap", make_snapshot(u, G, 0.625));
  Snapshot su = read_snapshot(dir / "u.snap");
  CHECK(su.kind == FieldKind::scalar);
  CHECK(su.time == 0.625);
  CHECK(su.G.g11 == G.g11);
  ScalarField u2 = scalar_from_snapshot(su);
  CHECK(std::memcmp(u2.v.data(), u.v.data(), u.v.size() * sizeof(double)) == 0);

  SpinorField phi = random_spinor_field(n, {1, 0}, 2, 0.4, rng);
  write_snapshot(dir / "phi.snap", make_snapshot(phi, G, 1.0));
  SpinorField phi2 = spinor_from_snapshot(read_snapshot(dir / "phi.snap"));
  CHECK(phi2.spin.parity_x == 1);
  CHECK(phi2.spin.parity_y == 0);
  CHECK(std::memcmp(phi2.a.data(), phi.a.data(), phi.a.size() * sizeof(cplx)) == 0);
  CHECK(std::memcmp(phi2.b.data(), phi.b.data(), phi.b.size() * sizeof(cplx)) == 0);

  MapField m = random_map_field(n, 2, 0.3, rng);
  write_snapshot(dir / "map.snap", make_snapshot(m, G, 2.0));
  MapField m2 = map_from_snapshot(read_snapshot(dir / "map.snap"));
  CHECK(std::memcmp(m2.y.v.data(), m.y.v.data(), m.y.v.size() * sizeof(double)) == 0);

  // no stray temporaries once writes complete
  for (auto& entry : std::filesystem::directory_iterator(dir))
    CHECK(entry.path().extension() != ".tmp");

  // a truncated file is reported as torn, not parsed
  {
    std::ifstream in(dir / "u.snap", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(dir / "torn.snap", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(read_snapshot(dir / "torn.snap"), std::runtime_error);

  std::filesystem::remove_all(dir);
}

TEST_CASE("runner: a short Ricci run writes a parseable trajectory") {
  auto dir = temp_dir();
  std::string text = std::string(kMinimalRicci) +
                     "\n[run.extra]\n";  // placeholder replaced below
  text = std::string(kMinimalRicci);
  ParseResult pr = parse_config(text);
  REQUIRE(pr.ok);
  RunConfig cfg = pr.config;
  cfg.n = 32;
  cfg.out_dir = (dir / "run1").string();
  cfg.step.t_final = 2e-3;
  cfg.step.report_every = 20;
  cfg.snapshot_every = 1;
  std::ostringstream log;
  ExecuteResult res = execute(cfg, text, log);
  CHECK(res.code == 0);

  TrajectorySummary s = read_trajectory(dir / "run1");
  CHECK(s.columns == monitor_columns());
  CHECK(s.rows.size() >= 2);
  // monotone time stamps
  for (size_t k = 1; k < s.rows.size(); ++k) CHECK(s.rows[k][0] > s.rows[k - 1][0]);
  CHECK(s.verdict_text.find("status:") != std::string::npos);
  // snapshots parse
  bool found_snap = false;
  for (auto& entry : std::filesystem::directory_iterator(dir / "run1"))
    if (entry.path().extension() == ".snap") {
      read_snapshot(entry.path());
      found_snap = true;
    }
  CHECK(found_snap);
  std::filesystem::remove_all(dir);
}

TEST_CASE("runner: deterministic reruns produce byte-identical time series") {
  auto dir = temp_dir();
  std::string text = R"(
[run]
flow = spinor-split
n = 32
seed = 5
[metric]
preset = random
amplitude = 0.15
kcut = 2
[datum]
kind = random-spinor
amplitude = 0.3
kcut = 2
)";
  ParseResult pr = parse_config(text);
  REQUIRE(pr.ok);
  RunConfig cfg = pr.config;
  cfg.step.t_final = 5e-4;
  cfg.step.report_every = 10;
  std::ostringstream log;
  cfg.out_dir = (dir / "a").string();
  execute(cfg, text, log);
  cfg.out_dir = (dir / "b").string();
  execute(cfg, text, log);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  std::string a = slurp(dir / "a" / "timeseries.csv");
  std::string b = slurp(dir / "b" / "timeseries.csv");
  CHECK(a == b);
  CHECK(!a.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("runner: an intentionally huge step aborts and keeps the partial trajectory") {
  auto dir = temp_dir();
  std::string text = R"(
[run]
flow = spinor-split
n = 32
seed = 3
[metric]
preset = random
amplitude = 0.2
kcut = 2
[datum]
kind = random-spinor
amplitude = 0.4
kcut = 2
[step]
dt = 0.05
max_halvings = 0
t_final = 1.0
)";
  ParseResult pr = parse_config(text);
  REQUIRE(pr.ok);
  RunConfig cfg = pr.config;
  cfg.out_dir = (dir / "boom").string();
  std::ostringstream log;
  ExecuteResult res = execute(cfg, text, log);
  CHECK(res.code == 1);
  CHECK(res.status == "aborted-nonfinite");
  TrajectorySummary s = read_trajectory(dir / "boom");
  CHECK(!s.rows.empty());
  CHECK(s.verdict_text.find("aborted-nonfinite") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("runner: unsplit flow writes frame snapshots") {
  auto dir = temp_dir();
  std::string text = R"(
[run]
flow = hrf
n = 32
seed = 11
[metric]
preset = random
amplitude = 0.15
kcut = 2
[datum]
kind = random-map
amplitude = 0.4
kcut = 2
)";
  ParseResult pr = parse_config(text);
  REQUIRE(pr.ok);
  RunConfig cfg = pr.config;
  cfg.out_dir = (dir / "hrf").string();
  cfg.step.t_final = 4e-4;
  cfg.step.report_every = 10;
  std::ostringstream log;
  ExecuteResult res = execute(cfg, text, log);
  CHECK(res.code == 0);
  bool frame_found = false;
  for (auto& entry : std::filesystem::directory_iterator(dir / "hrf"))
    if (entry.path().filename().string().find(".frame.snap") != std::string::npos) {
      Snapshot s = read_snapshot(entry.path());
      CHECK(s.kind == FieldKind::frame);
      frame_found = true;
    }
  CHECK(frame_found);
  std::filesystem::remove_all(dir);
}

TEST_CASE("runner: paired-consistency exits 0 on agreement, 3 on a broken variant") {
  auto dir = temp_dir();
  std::string text = R"(
[run]
flow = paired-consistency
n = 32
seed = 21
[metric]
preset = random
amplitude = 0.15
kcut = 2
[datum]
kind = random-map
amplitude = 0.5
kcut = 2
[step]
t_final = 4e-3
report_every = 25
cfl = 0.5
)";
  ParseResult pr = parse_config(text);
  REQUIRE(pr.ok);
  RunConfig cfg = pr.config;
  cfg.out_dir = (dir / "pair").string();
  std::ostringstream log;
  ExecuteResult res = execute(cfg, text, log);
  CHECK(res.code == 0);
  CHECK(res.status == "consistent");
  CHECK(std::filesystem::exists(dir / "pair" / "comparison.csv"));

  cfg.sign_convention = "flipped";
  cfg.out_dir = (dir / "pair-flipped").string();
  ExecuteResult bad = execute(cfg, text, log);
  CHECK(bad.code == 3);
  CHECK(bad.status == "inconsistent");
  std::filesystem::remove_all(dir);
}

TEST_CASE("output root environment variable resolves relative directories") {
  auto dir = temp_dir();
  setenv("TORUSFLOW_OUTPUT_ROOT", dir.c_str(), 1);
  CHECK(resolve_out_dir("rel/path") == dir / "rel/path");
  unsetenv("TORUSFLOW_OUTPUT_ROOT");
  CHECK(resolve_out_dir("rel/path") == std::filesystem::path("rel/path"));
  CHECK(resolve_out_dir("/abs/path") == std::filesystem::path("/abs/path"));
  std::filesystem::remove_all(dir);
}
