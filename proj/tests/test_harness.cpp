#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kpplab/error.hpp"
#include "kpplab/harness.hpp"

using namespace kpplab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kpplab-harness-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quick(ExperimentKind kind, const std::string& out) {
  ExperimentConfig c = ExperimentConfig::defaults(kind);
  c.out = scratch(out).string();
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto kv = parse_config_text("# comment\nseed = 7\n theta=1, 2 ,3\n\n");
  CHECK(kv.at("seed") == "7");
  CHECK_THROWS_AS(parse_config_text("sed = 7\n"), UsageError);
  CHECK_THROWS_AS(parse_config_text("seed = 1\nseed = 2\n"), UsageError);
  CHECK_THROWS_AS(parse_config_text("seed\n"), UsageError);

  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::Speed);
  set_config_value(c, "theta", "3,4,5");
  CHECK(c.thetas == std::vector<double>{3, 4, 5});
  set_config_value(c, "scheme", "euler");
  CHECK(c.params.scheme == NoiseScheme::EulerMaruyama);
  CHECK_THROWS_AS(set_config_value(c, "bogus", "1"), UsageError);
  CHECK_THROWS_AS(set_config_value(c, "replicas", "-3"), UsageError);
  CHECK_THROWS_AS(set_config_value(c, "dx", "abc"), UsageError);
  CHECK_THROWS_AS(parse_kind("nope"), UsageError);
}

TEST_CASE("config text round trip") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::Duality);
  c.seed = 99;
  c.identity = "competition";
  ExperimentConfig d = ExperimentConfig::defaults(ExperimentKind::Duality);
  for (const auto& [k, v] : parse_config_text(c.to_text())) set_config_value(d, k, v);
  CHECK(d.to_text() == c.to_text());
  CHECK(c.to_text(false).find("out =") == std::string::npos);
}

TEST_CASE("load_config precedence") {
  const fs::path dir = scratch("precedence");
  fs::create_directories(dir);
  const fs::path file = dir / "c.cfg";
  std::ofstream(file) << "kind = simulate\nseed = 3\nreplicas = 2\nT = 0.5\n";
  ::setenv("KPPLAB_REPLICAS", "5", 1);
  ::setenv("KPPLAB_T", "0.25", 1);
  const ExperimentConfig c = load_config(ExperimentKind::Simulate, file.string(), {{"T", "0.75"}});
  ::unsetenv("KPPLAB_REPLICAS");
  ::unsetenv("KPPLAB_T");
  CHECK(c.seed == 3);
  CHECK(c.replicas == 5);
  CHECK(c.horizon == 0.75);
  CHECK_THROWS_AS(load_config(ExperimentKind::Speed, file.string(), {}), UsageError);
  CHECK_THROWS_AS(load_config(ExperimentKind::Simulate, (dir / "missing").string(), {}), UsageError);
}

TEST_CASE("validation names the field") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::Simulate);
  c.grid.dt = 1.0;
  try {
    c.validate();
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("dt") != std::string::npos);
  }
}

TEST_CASE("simulate from the zero field") {
  ExperimentConfig c = quick(ExperimentKind::Simulate, "zero");
  c.ic.type = "zero";
  RunManifest m = run_experiment(c);
  CHECK(exit_status(m) == 0);
  const std::string summary = slurp(fs::path(c.out) / "summary.csv");
  CHECK(summary.find(",0,") != std::string::npos);
  CHECK(fs::exists(fs::path(c.out) / "manifest.json"));
}

TEST_CASE("identical configs give identical hashes") {
  ExperimentConfig a = quick(ExperimentKind::Simulate, "hash-a");
  a.replicas = 3;
  a.horizon = 0.3;
  a.snapshot_times = {0.1};
  ExperimentConfig b = a;
  b.out = scratch("hash-b").string();
  b.jobs = 1;
  const RunManifest ma = run_experiment(a);
  const RunManifest mb = run_experiment(b);
  REQUIRE(ma.artifacts.size() == mb.artifacts.size());
  REQUIRE(ma.artifacts.size() > 3);
  for (std::size_t i = 0; i < ma.artifacts.size(); ++i) {
    CHECK(ma.artifacts[i].path == mb.artifacts[i].path);
    CHECK(ma.artifacts[i].sha256 == mb.artifacts[i].sha256);
  }
  CHECK(sha256_hex(fs::path(a.out) / "config.txt").size() == 64);
}

TEST_CASE("speed table over a theta sweep") {
  ExperimentConfig c = quick(ExperimentKind::Speed, "speed");
  c.thetas = {3, 4, 5, 6};
  c.replicas = 8;
  c.horizon = 2;
  RunManifest m = run_experiment(c);
  CHECK(exit_status(m) == 0);
  const std::string table = slurp(fs::path(c.out) / "speed_table.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);
  emit_plot_data(m, "speed");
  CHECK(fs::exists(fs::path(c.out) / "plots/speed_B_hat.dat"));
  CHECK(fs::file_size(fs::path(c.out) / "plots/speed_2sqrt_theta.dat") > 0);
  CHECK(fs::exists(fs::path(c.out) / "plots/speed.svg"));
}

TEST_CASE("empty sweep gives an empty data file") {
  ExperimentConfig c = quick(ExperimentKind::Sweep, "empty-sweep");
  c.thetas.clear();
  RunManifest m = run_experiment(c);
  CHECK(exit_status(m) == 0);
  emit_plot_data(m, "sweep");
  CHECK(fs::file_size(fs::path(c.out) / "plots/sweep_p_extinct.dat") == 0);
  CHECK_THROWS_AS(emit_plot_data(m, "speed"), UsageError);
}

TEST_CASE("deterministic marker plot has no NaN") {
  ExperimentConfig c = quick(ExperimentKind::Simulate, "markers");
  c.params.noise_amp = 0;
  c.horizon = 0.5;
  RunManifest m = run_experiment(c);
  emit_plot_data(m, default_plot_kind(c));
  bool any = false;
  for (const auto& e : fs::directory_iterator(fs::path(c.out) / "plots")) {
    if (e.path().extension() != ".dat") continue;
    const std::string body = slurp(e.path());
    CHECK(body.find("nan") == std::string::npos);
    CHECK(body.find("inf") == std::string::npos);
    any = any || !body.empty();
  }
  CHECK(any);
}

TEST_CASE("couple and duality runs") {
  ExperimentConfig c = quick(ExperimentKind::Couple, "couple");
  c.horizon = 0.2;
  c.replicas = 2;
  CHECK(exit_status(run_experiment(c)) == 0);
  CHECK(fs::exists(fs::path(c.out) / "wiring.json"));

  ExperimentConfig d = quick(ExperimentKind::Duality, "duality");
  d.replicas = 50;
  d.horizon = 0.1;
  d.split_times = {0.0, 0.05, 0.1};
  RunManifest md = run_experiment(d);
  CHECK(fs::exists(fs::path(d.out) / "duality.csv"));
  emit_plot_data(md, "duality");
}
