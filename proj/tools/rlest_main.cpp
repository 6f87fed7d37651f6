#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rlest/common.hpp"
#include "rlest/config.hpp"
#include "rlest/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::int64_t seed = -1;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "experiment config file");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out_path, "output CSV path");
  cmd->add_option("--seed", flags.seed, "override master_seed");
  cmd->add_option("--threads", flags.threads, "worker threads");
}

rlest::RunConfig assemble(const std::string& command, const CommonFlags& flags) {
  rlest::RunConfig config;
  if (!flags.config_path.empty()) {
    config = rlest::parse_config(slurp(flags.config_path));
    if (config.command != command)
      throw std::invalid_argument("config command '" + config.command +
                                  "' does not match subcommand '" + command + "'");
  } else {
    config.command = command;
  }
  if (!flags.out_path.empty()) config.output_path = flags.out_path;
  if (flags.seed >= 0) config.master_seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.threads > 0) config.threads = flags.threads;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"replica mutual-information toolkit for structured random linear models"};
  app.require_subcommand(1);

  CommonFlags replica_flags, spectrum_flags, oracle_flags, interp_flags, selftest_flags;

  auto* replica = app.add_subcommand("replica", "lambda sweep of the replica formula");
  add_common(replica, replica_flags, true);
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalue atoms and transforms");
  add_common(spectrum, spectrum_flags, true);
  auto* oracle = app.add_subcommand("oracle", "finite-size exact mutual information");
  add_common(oracle, oracle_flags, true);

  auto* interp = app.add_subcommand("interp", "interpolating-channel diagnostics");
  add_common(interp, interp_flags, true);
  double t_flag = -1.0, eps1_flag = -1.0, eps2_flag = -1.0;
  double rbar_flag = -1.0, ebar_flag = -1.0;
  std::string path_file_flag, check_flag;
  interp->add_option("--t", t_flag, "interpolation time in [0, 1]");
  interp->add_option("--eps1", eps1_flag, "scalar-channel snr offset");
  interp->add_option("--eps2", eps2_flag, "matrix-channel snr offset");
  interp->add_option("--path-file", path_file_flag,
                     "[r]/[E]-sectioned 't value' tables for the path");
  interp->add_option("--check", check_flag, "none | boundary | derivative");
  interp->add_option("--rbar", rbar_flag, "constant r(t) when no path file");
  interp->add_option("--ebar", ebar_flag, "constant E(t) when no path file");

  auto* selftest = app.add_subcommand("selftest", "run the full verification suite");
  add_common(selftest, selftest_flags, false);

  CLI11_PARSE(app, argc, argv);

  try {
    rlest::RunConfig config;
    if (replica->parsed()) config = assemble("replica", replica_flags);
    if (spectrum->parsed()) config = assemble("spectrum", spectrum_flags);
    if (oracle->parsed()) config = assemble("oracle", oracle_flags);
    if (selftest->parsed()) config = assemble("selftest", selftest_flags);
    if (interp->parsed()) {
      config = assemble("interp", interp_flags);
      if (t_flag >= 0.0) config.interp_t = t_flag;
      if (eps1_flag >= 0.0) config.interp_eps1 = eps1_flag;
      if (eps2_flag >= 0.0) config.interp_eps2 = eps2_flag;
      if (rbar_flag >= 0.0) config.interp_rbar = rbar_flag;
      if (ebar_flag >= 0.0) config.interp_ebar = ebar_flag;
      if (!path_file_flag.empty()) config.interp_path_file = path_file_flag;
      if (!check_flag.empty()) config.interp_check = check_flag;
    }
    return rlest::run(config);
  } catch (const rlest::numerical_failure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
