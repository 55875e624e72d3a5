// kpplab: command-line front end. One subcommand per experiment kind.
//
//   kpplab speed --config speed.cfg --out runs/speed --seed 7 --set theta=3,4,5,6
//
// Exit status: 0 pass, 1 usage error, 2 invariant assertion failed,
// 3 runtime failure.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kpplab/error.hpp"
#include "kpplab/harness.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;
  std::vector<std::string> sets;
  std::vector<std::string> plots;
  bool no_plot = false;
  bool quiet = false;
};

int run(kpplab::ExperimentKind kind, const Flags& f) {
  std::map<std::string, std::string> overrides;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw kpplab::UsageError("--set expects key=value, got '" + s + "'");
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (f.seed) overrides["seed"] = std::to_string(*f.seed);
  if (f.out) overrides["out"] = *f.out;
  if (f.jobs) overrides["jobs"] = std::to_string(*f.jobs);
  std::string config = f.config;
  if (config.empty()) {
    if (const char* env = std::getenv("KPPLAB_CONFIG")) config = env;
  }

  const kpplab::ExperimentConfig cfg = kpplab::load_config(kind, config, overrides);
  kpplab::RunManifest m = kpplab::run_experiment(cfg);
  if (!f.no_plot) {
    std::vector<std::string> plots = f.plots;
    if (plots.empty()) plots.push_back(kpplab::default_plot_kind(cfg));
    for (const auto& p : plots) kpplab::emit_plot_data(m, p);
  }
  if (!f.quiet) {
    std::cout << m.kind << ": " << m.artifacts.size() << " artifacts in " << m.out_dir.string()
              << " (" << m.wall_seconds << " s)\n";
  }
  for (const auto& msg : m.failures) std::cerr << "assertion failed: " << msg << '\n';
  return kpplab::exit_status(m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kpplab: Monte Carlo lab for the noisy KPP equation"};
  app.require_subcommand(1);
  Flags flags;
  std::optional<kpplab::ExperimentKind> chosen;

  const std::vector<std::pair<kpplab::ExperimentKind, std::string>> kinds = {
      {kpplab::ExperimentKind::Simulate, "single-equation trajectories"},
      {kpplab::ExperimentKind::Couple, "coupled systems with order checks"},
      {kpplab::ExperimentKind::Particle, "long-range contact process runs"},
      {kpplab::ExperimentKind::Speed, "front speed B and alpha_T estimates"},
      {kpplab::ExperimentKind::Wave, "travelling-wave samples"},
      {kpplab::ExperimentKind::Duality, "duality identity checks"},
      {kpplab::ExperimentKind::Sweep, "extinction probability over theta"},
  };
  for (const auto& [kind, desc] : kinds) {
    CLI::App* sub = app.add_subcommand(kpplab::to_string(kind), desc);
    sub->add_option("--config", flags.config, "flat key = value config file");
    sub->add_option("--seed", flags.seed, "base seed (replica r uses seed + r)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--jobs", flags.jobs, "worker threads, 0 = all cores");
    sub->add_option("--set", flags.sets, "override a config key (key=value), repeatable");
    sub->add_option("--plot", flags.plots, "plot kinds to emit (default: the kind's natural plot)");
    sub->add_flag("--no-plot", flags.no_plot, "skip plot data");
    sub->add_flag("-q,--quiet", flags.quiet, "no summary line");
    sub->callback([&chosen, kind = kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(*chosen, flags);
  } catch (const kpplab::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const kpplab::InvariantError& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 3;
  }
}
