#pragma once

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "pgrowth/cli/pipelines.hpp"

namespace pgrowth {

/// Entry point of the pgrowth tool. Returns the process exit code: 0 on success, the error
/// family code on a library error, 2 on a command-line error, 1 on anything unexpected.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Regularity experiments for p-growth elasticity minimizers"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--seed", seed, "overrides output.seed");
    sub->add_option("-o,--out", out_dir, "overrides output.directory");
    sub->add_option("-j,--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };
  std::vector<CLI::App*> subs;
  for (const auto& name : command_names()) subs.push_back(app.add_subcommand(name, "run the " + name + " command"));
  subs.push_back(app.add_subcommand("run", "run whatever command the configuration names"));
  for (auto* s : subs) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorFamily::config);
  }

  try {
    const std::string requested = app.get_subcommands().front()->get_name();
    ExperimentConfig cfg = load_config(config_path);
    if (requested != "run" && requested != cfg.command)
      throw ConfigError("command: the configuration names '" + cfg.command + "' but '" + requested + "' was requested");
    RunOverrides ov;
    ov.seed = seed;
    ov.out = out_dir;
    ov.threads = threads;
    const RunResult res = run(std::move(cfg), ov);
    out << res.manifest["command"].get<std::string>() << ": wrote " << res.manifest["files"].size() << " files to "
        << res.directory.string() << "\n"
        << res.summary.dump() << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pgrowth
