// Command-line front end: simulate, scans, fitting, oracle comparison and
// heterodyne analysis. Exit codes: 0 ok, 2 configuration, 3 numerical
// failure, 4 non-convergence.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "srb/io.hpp"
#include "srb/runs.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool overwrite = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI or JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "disorder and Monte Carlo seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads (default: SRB_THREADS or 1)")->check(CLI::PositiveNumber);
  cmd->add_flag("--overwrite", f.overwrite, "allow writing into a non-empty output directory");
}

int resolve_threads(const CommonFlags& f) {
  if (f.threads) return *f.threads;
  if (const char* env = std::getenv("SRB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw srb::ConfigError(std::string("SRB_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superradiant burst simulator for waveguide-coupled atomic ensembles"};
  app.require_subcommand(1);
  CommonFlags flags;
  using Command = void (*)(const srb::RunConfig&, int);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"simulate", "disorder-averaged burst for one atom number and pulse area", srb::command_simulate},
      {"scan-n", "scan the atom number (scan.n_list)", srb::command_scan_n},
      {"scan-area", "scan the pulse area (scan.area_list_pi)", srb::command_scan_area},
      {"fit-disorder", "fit the coupling mean and width to target traces", srb::command_fit_disorder},
      {"oracle-compare", "exact master equation against the cascade model", srb::command_oracle_compare},
      {"heterodyne", "heterodyne correlation surfaces and click Monte Carlo", srb::command_heterodyne},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, flags);
    subs.emplace_back(cmd, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    srb::RunConfig cfg = flags.config.empty() ? srb::RunConfig{} : srb::load_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    cfg.overwrite = cfg.overwrite || flags.overwrite;
    cfg.validate();
    const int threads = resolve_threads(flags);
    srb::prepare_output_dir(cfg.out_dir, cfg.overwrite);
    for (const auto& [cmd, fn] : subs)
      if (cmd->parsed()) fn(cfg, threads);
    return 0;
  } catch (const srb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const srb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const srb::ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
