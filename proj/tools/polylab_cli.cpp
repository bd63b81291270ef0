#include <cstdio>
#include <iostream>
#include <optional>

#include <omp.h>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace polylab::cli;

int main(int argc, char** argv) {
  CLI::App app{"polylab: directed polymers in random potentials"};
  app.require_subcommand(1);
  std::string config_file, out_dir = ".";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  app.add_option("--config", config_file, "key=value configuration file");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--workers", workers, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "output directory");

  std::map<std::string, std::vector<std::string>> args;
  std::vector<std::string> names = configured_commands();
  names.push_back("report");
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->fallthrough();
    sub->add_option("args", args[name], name == "report" ? "artifact JSON files" : "key=value overrides");
    sub->add_flag_callback("--schema", [name] {
      for (const auto& k : schema_for(name, {})) std::cout << k.key << " = " << k.fallback << "    # " << k.doc << "\n";
      std::exit(kExitOk);
    }, "print the keys and defaults");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  if (workers > 0) omp_set_num_threads(workers);

  const std::string command = app.get_subcommands().front()->get_name();
  const auto& positional = args[command];
  try {
    RunOptions opt;
    opt.out_dir = out_dir;
    RunResult res;
    if (command == "report") {
      if (!config_file.empty() || seed) throw ConfigError({"report takes artifact files only"});
      opt.inputs = positional;
      res = run_report(positional, opt);
    } else {
      RawConfig raw;
      std::vector<std::string> problems;
      if (!config_file.empty()) {
        raw = read_config_file(config_file);
        opt.inputs.push_back(config_file);
      }
      for (std::size_t i = 0; i < positional.size(); ++i) {
        const auto& a = positional[i];
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) {
          problems.push_back("argument " + std::to_string(i + 1) + ": expected key=value, got '" + a + "'");
          continue;
        }
        raw.push_back({a.substr(0, eq), a.substr(eq + 1), "command line", "argument " + std::to_string(i + 1)});
      }
      if (seed) raw.push_back({"seed", std::to_string(*seed), "--seed", "--seed"});
      if (!problems.empty()) throw ConfigError(problems);
      const auto cfg = Config::resolve(command, schema_for(command, raw), raw);
      res = run_command(cfg, opt);
    }
    std::cout << res.summary << (res.summary.empty() || res.summary.back() == '\n' ? "" : "\n");
    for (const auto& a : res.artifacts) std::cout << "wrote " << a << "\n";
    if (res.exit_code == kExitInconclusive) std::cout << "verdict inconclusive\n";
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
