// Command-line front end for the experiment harness.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wqed/errors.hpp"
#include "wqed/harness/config.hpp"
#include "wqed/harness/output.hpp"
#include "wqed/harness/presets.hpp"
#include "wqed/harness/run.hpp"

namespace {

using namespace wqed;
using namespace wqed::harness;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
  std::optional<std::size_t> trajectories;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool fresh = false;
  bool quiet = false;

  void attach(CLI::App* app, bool with_config) {
    if (with_config) app->add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "master seed");
    app->add_option("--realizations", realizations, "number of disorder realizations");
    app->add_option("--trajectories", trajectories, "quantum-jump trajectories per realization");
    app->add_option("-o,--out", out, "output directory");
    app->add_option("-j,--threads", threads, "worker threads (0 = all cores)");
    app->add_flag("--fresh", fresh, "ignore checkpoints from earlier runs");
    app->add_flag("-q,--quiet", quiet, "no progress output");
  }

  void apply(ExperimentConfig& c) const {
    if (seed) c.seed = *seed;
    if (realizations) c.realizations = *realizations;
    if (trajectories) c.trajectories = *trajectories;
    if (out) c.output_dir = *out;
    if (threads) c.threads = *threads;
  }
};

int execute(ExperimentConfig cfg, const Overrides& ov) {
  ov.apply(cfg);
  cfg = load_config(dump_config(cfg));  // re-validate after overrides
  RunOptions opts;
  opts.resume = !ov.fresh;
  if (!ov.quiet) opts.log = [](const std::string& s) { std::cerr << s << "\n"; };
  const auto m = run(cfg, opts);
  std::cout << "config_hash " << m.config_hash << "\n";
  for (const auto& f : m.files) std::cout << "wrote " << f << "\n";
  if (!m.failures.empty()) std::cout << m.failures.size() << " failures logged in manifest.json\n";
  return 0;
}

ExperimentConfig config_for(ExperimentKind kind, const std::string& path) {
  if (path.empty()) return default_config(kind);
  auto c = load_config(read_file(path));
  if (c.kind != kind)
    throw ConfigError({"/experiment: expected " + to_string(kind) + ", found " + to_string(c.kind)});
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disordered atom arrays coupled to a waveguide: experiment runner"};
  app.require_subcommand(1);

  std::vector<std::pair<ExperimentKind, CLI::App*>> kinds;
  Overrides ov;
  for (const auto& [kind, name] : experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment (defaults or --config)");
    ov.attach(sub, true);
    kinds.emplace_back(kind, sub);
  }

  auto* presets = app.add_subcommand("presets", "named reference configurations");
  presets->require_subcommand(1);
  presets->add_subcommand("list", "list preset names");
  auto* show = presets->add_subcommand("show", "print a preset config as JSON");
  std::string show_name;
  show->add_option("name", show_name)->required();
  auto* prun = presets->add_subcommand("run", "run a preset");
  std::string run_name;
  prun->add_option("name", run_name)->required();
  ov.attach(prun, false);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [kind, sub] : kinds)
      if (sub->parsed()) return execute(config_for(kind, ov.config_path), ov);

    const auto lib = preset_library();
    if (presets->got_subcommand("list")) {
      for (const auto& p : lib) std::printf("%-28s %s\n", p.name.c_str(), p.description.c_str());
      return 0;
    }
    const std::string& name = show->parsed() ? show_name : run_name;
    const auto* p = find_preset(lib, name);
    if (!p) throw ConfigError({"preset: no preset named '" + name + "'"});
    if (show->parsed()) {
      std::cout << dump_config(p->config) << "\n";
      return 0;
    }
    return execute(p->config, ov);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
