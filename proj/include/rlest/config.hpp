#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rlest/prior.hpp"
#include "rlest/spectra.hpp"

namespace rlest {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Flat key = value experiment description. Unknown keys are hard errors;
// every field has a default except `command`.
struct RunConfig {
  std::string command;  // replica | spectrum | oracle | interp | selftest

  std::string prior_kind = "gaussian";
  double prior_rho = 1.0;
  double prior_sparsity = 0.1;
  std::vector<double> prior_atoms;
  std::vector<double> prior_weights;

  std::string ensemble_kind = "identity_scaled";
  int ensemble_factors = 1;
  std::string ensemble_entries = "gaussian";  // gaussian | bounded
  std::string ensemble_spectrum_file;

  int n = 8;
  int m = 4;
  std::vector<double> lambda_grid = {1.0};
  int trials = 200;
  std::uint64_t master_seed = 1;
  int threads = 1;
  int quad_order = 61;

  std::string formulation = "inf_sup";
  double damping = 0.5;
  double fp_tol = 1e-10;
  int max_iter = 10000;
  int spectrum_size = 1000;    // sampling size for empirical T spectra
  int spectrum_averages = 1;   // realizations merged into the spectrum
  double spectrum_u_max = 5.0; // grid limit of the transform CSV

  double interp_t = 0.5;
  double interp_eps1 = 0.1;
  double interp_eps2 = 0.1;
  double interp_rbar = 0.5;
  double interp_ebar = 0.3;
  std::string interp_path_file;
  std::string interp_check = "none";  // none | boundary | derivative
  double interp_fd_step = 1e-3;

  std::string output_path;
  std::map<std::string, double> tolerances;

  bool operator==(const RunConfig&) const = default;
};

// Parses the documented key = value format; errors carry line numbers.
RunConfig parse_config(const std::string& text);

// Canonical serialization; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& config);

// Domain objects from a validated config.
Prior prior_from_config(const RunConfig& config);
Ensemble ensemble_from_config(const RunConfig& config);

// T spectrum used by the replica side: exact delta for identity_scaled,
// file contents for external ensembles, otherwise sampled at spectrum_size
// with the configured number of merged realizations.
Spectrum spectrum_from_config(const RunConfig& config);

}  // namespace rlest
