#include "qmisdr/cli/commands.hpp"
#include "qmisdr/cli/config.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  using namespace qmisdr::cli;

  CLI::App app{"Supervised dimension reduction by quadratic mutual information derivatives"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trials;
  RunOptions opts;
  std::string out_dir = ".";

  for (const char* name : {"illustrate", "sdr", "bench"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file with a [" + std::string(name) + "] section")->required();
    sub->add_option("--seed", seed, "overrides the seed key");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--trials", trials, "overrides the trials key")->check(CLI::PositiveNumber);
    sub->add_option("--threads", opts.threads, "worker threads, 0 for all cores");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  opts.out_dir = out_dir;
  try {
    Section cfg = load_section(config_path, command);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (trials) cfg.set("trials", std::to_string(*trials));
    return run_command(cfg, opts, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
