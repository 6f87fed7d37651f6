#include "rlest/runner.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "rlest/common.hpp"
#include "rlest/gibbs.hpp"
#include "rlest/interp.hpp"
#include "rlest/potential.hpp"
#include "rlest/rng.hpp"
#include "rlest/selftest.hpp"

namespace rlest {

namespace {

std::string header_block(const RunConfig& config) {
  std::string out = "# rlest ";
  out += kArtifactVersion;
  out += "\n";
  std::istringstream in(serialize_config(config));
  std::string line;
  while (std::getline(in, line)) {
    out += "# ";
    out += line;
    out += "\n";
  }
  return out;
}

std::string default_output(const RunConfig& config) {
  return config.output_path.empty() ? config.command + ".csv" : config.output_path;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || path.find('/', dot) != std::string::npos)
    return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

std::string cells(std::initializer_list<std::string> vals) {
  std::string row;
  bool first = true;
  for (const auto& v : vals) {
    if (!first) row += ",";
    row += v;
    first = false;
  }
  row += "\n";
  return row;
}

std::string g(double v) { return format_g17(v); }

FixedPointOptions fp_options(const RunConfig& config) {
  FixedPointOptions opts;
  opts.damping = config.damping;
  opts.tol = config.fp_tol;
  opts.max_iter = config.max_iter;
  return opts;
}

RunOutcome run_replica(const RunConfig& config) {
  const Prior prior = prior_from_config(config);
  const QuadratureRule quad = QuadratureRule::gauss_hermite(config.quad_order);
  const Spectrum spec_T = spectrum_from_config(config);
  const Formulation chosen = formulation_from_string(config.formulation);
  const FixedPointOptions opts = fp_options(config);

  std::string csv = header_block(config);
  csv += cells({"lambda", "E_star", "r_star", "i_rs_value", "n_fixed_points",
                "boundary_flag", "formulation_spread"});
  for (double lambda : config.lambda_grid) {
    PotentialResult picked;
    double vmin = 0.0, vmax = 0.0;
    bool first = true;
    for (Formulation f : {Formulation::kInfSup, Formulation::kInfESupR,
                          Formulation::kInfOverGamma}) {
      const PotentialResult r = extremize(prior, quad, spec_T, lambda, f, opts);
      if (first || r.value < vmin) vmin = first ? r.value : std::min(vmin, r.value);
      vmax = first ? r.value : std::max(vmax, r.value);
      if (f == chosen) picked = r;
      first = false;
    }
    int n_converged = 0;
    for (const auto& fp : picked.fixed_points)
      if (fp.converged) ++n_converged;
    csv += cells({g(lambda), g(picked.E_star), g(picked.r_star), g(picked.value),
                  std::to_string(n_converged), picked.boundary ? "1" : "0",
                  g(vmax - vmin)});
  }
  RunOutcome out;
  out.artifacts.push_back({default_output(config), std::move(csv)});
  out.console = "replica sweep: " + std::to_string(config.lambda_grid.size()) + " rows\n";
  return out;
}

RunOutcome run_spectrum(const RunConfig& config) {
  const Spectrum spec = spectrum_from_config(config);
  std::string csv = header_block(config);
  csv += cells({"eigenvalue", "weight"});
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i)
    csv += cells({g(spec.eigenvalues[i]), g(spec.weights[i])});

  std::string transform_csv = header_block(config);
  transform_csv += cells({"u", "r_transform_minus_u", "shannon_g"});
  const int pts = 101;
  for (int i = 0; i < pts; ++i) {
    const double u = config.spectrum_u_max * i / (pts - 1);
    transform_csv += cells({g(u), g(r_transform(spec, u)), g(shannon_g(spec, u))});
  }

  RunOutcome out;
  const std::string base = default_output(config);
  out.artifacts.push_back({base, std::move(csv)});
  out.artifacts.push_back({with_suffix(base, "_transform"), std::move(transform_csv)});
  out.console = "spectrum: " + std::to_string(spec.eigenvalues.size()) + " atoms\n";
  return out;
}

RunOutcome run_oracle(const RunConfig& config) {
  const Prior prior = prior_from_config(config);
  const QuadratureRule quad = QuadratureRule::gauss_hermite(config.quad_order);
  const Ensemble ens = ensemble_from_config(config);
  const Spectrum spec_T = spectrum_from_config(config);
  const Formulation chosen = formulation_from_string(config.formulation);
  const FixedPointOptions opts = fp_options(config);

  std::string csv = header_block(config);
  csv += cells({"n", "m", "lambda", "i_n_hat", "std_err", "replica_value", "gap",
                "gap_over_se"});
  for (double lambda : config.lambda_grid) {
    MiEstimate est;
    if (prior.kind == PriorKind::kGaussian) {
      est = exact_mi_gaussian(ens, prior.rho, lambda, config.n, config.m,
                              config.trials, config.master_seed, config.threads);
    } else {
      est = exact_mi(prior, ens, lambda, config.n, config.m, config.trials,
                     config.master_seed, config.threads);
    }
    const double rs = extremize(prior, quad, spec_T, lambda, chosen, opts).value;
    const double gap = est.value - rs;
    const double z = est.std_err > 0.0 ? gap / est.std_err
                                       : std::numeric_limits<double>::quiet_NaN();
    csv += cells({std::to_string(config.n), std::to_string(config.m), g(lambda),
                  g(est.value), g(est.std_err), g(rs), g(gap), g(z)});
  }
  RunOutcome out;
  out.artifacts.push_back({default_output(config), std::move(csv)});
  out.console = "oracle sweep: " + std::to_string(config.lambda_grid.size()) + " rows\n";
  return out;
}

RunOutcome run_interp(const RunConfig& config) {
  const Prior prior = prior_from_config(config);
  const Ensemble ens = ensemble_from_config(config);
  const InterpPath path =
      config.interp_path_file.empty()
          ? InterpPath::constant(config.interp_rbar, config.interp_ebar,
                                 config.interp_eps1, config.interp_eps2)
          : InterpPath::from_file(config.interp_path_file, config.interp_eps1,
                                  config.interp_eps2);

  std::string csv = header_block(config);
  if (config.interp_check == "none") {
    const MiEstimate est = interp_mi(prior, ens, path, config.interp_t, config.n,
                                     config.m, config.trials, config.master_seed,
                                     config.threads);
    csv += cells({"t", "value", "std_err", "trials"});
    csv += cells({g(config.interp_t), g(est.value), g(est.std_err),
                  std::to_string(est.trials)});
  } else if (config.interp_check == "boundary") {
    const Spectrum ref = spectrum_from_config(config);
    const BoundaryReport rep =
        boundary_check(prior, ens, path, config.n, config.m, config.trials,
                       config.master_seed, ref, config.threads);
    csv += cells({"lhs", "rhs", "gap", "gap_se", "z_score", "identity_computed",
                  "spectrum_gap", "spectrum_gap_se", "trials"});
    csv += cells({g(rep.lhs), g(rep.rhs), g(rep.gap), g(rep.gap_se), g(rep.z_score),
                  rep.identity_computed ? "1" : "0", g(rep.spectrum_gap),
                  g(rep.spectrum_gap_se), std::to_string(rep.trials)});
  } else {
    const DerivativeReport rep = derivative_check(
        prior, ens, path, config.interp_t, config.interp_fd_step, config.n, config.m,
        config.trials, config.master_seed, config.threads);
    csv += cells({"t", "derivative", "rhs_exact", "rhs_lemma", "gap", "gap_se",
                  "z_score", "bias_bound", "term_scalar", "term_matrix", "remainder",
                  "conclusive", "trials"});
    csv += cells({g(config.interp_t), g(rep.derivative), g(rep.rhs_exact),
                  g(rep.rhs_lemma), g(rep.gap), g(rep.gap_se), g(rep.z_score),
                  g(rep.bias_bound), g(rep.term_scalar), g(rep.term_matrix),
                  g(rep.remainder), rep.conclusive ? "1" : "0",
                  std::to_string(rep.trials)});
  }
  RunOutcome out;
  out.artifacts.push_back({default_output(config), std::move(csv)});
  out.console = "interp " + config.interp_check + " done\n";
  return out;
}

RunOutcome run_selftest(const RunConfig& config) {
  const auto results = run_acceptance(config.threads);
  std::string csv = header_block(config);
  csv += cells({"id", "name", "status", "observed", "threshold"});
  RunOutcome out;
  std::ostringstream console;
  for (const auto& r : results) {
    csv += cells({std::to_string(r.id), r.name, r.pass ? "PASS" : "FAIL",
                  g(r.observed), g(r.threshold)});
    console << (r.pass ? "PASS" : "FAIL") << "  " << r.id << " " << r.name
            << "  observed=" << r.observed << " threshold=" << r.threshold << "  ("
            << r.seconds << " s)\n";
    if (!r.note.empty()) console << "      " << r.note << "\n";
    if (!r.pass) out.exit_code = 1;
  }
  out.artifacts.push_back({default_output(config), std::move(csv)});
  out.console = console.str();
  return out;
}

}  // namespace

RunOutcome run_config(const RunConfig& config) {
  if (config.command == "replica") return run_replica(config);
  if (config.command == "spectrum") return run_spectrum(config);
  if (config.command == "oracle") return run_oracle(config);
  if (config.command == "interp") return run_interp(config);
  if (config.command == "selftest") return run_selftest(config);
  throw std::invalid_argument("run_config: unknown command '" + config.command + "'");
}

int run(const RunConfig& config) {
  const RunOutcome out = run_config(config);
  for (const auto& artifact : out.artifacts) {
    std::ofstream file(artifact.path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + artifact.path);
    file << artifact.content;
    std::cout << "wrote " << artifact.path << "\n";
  }
  std::cout << out.console;
  return out.exit_code;
}

}  // namespace rlest
