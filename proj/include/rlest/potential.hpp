#pragma once

#include <string>
#include <vector>

#include "rlest/prior.hpp"
#include "rlest/spectra.hpp"

namespace rlest {

struct PotentialPoint {
  double E = 0.0;       // scalar MSE proxy, in [0, rho]
  double r = 0.0;       // effective scalar snr
  double lambda = 1.0;  // snr
};

// How the extremal value is located. All three agree when the extremizers
// are interior.
enum class Formulation { kInfSup, kInfESupR, kInfOverGamma };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& name);

struct FixedPoint {
  double E = 0.0;
  double r = 0.0;
  double value = 0.0;   // i_rs at the point
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // |mmse(r) - E| at the last iterate
};

struct PotentialResult {
  double value = 0.0;
  double E_star = 0.0;
  double r_star = 0.0;
  std::vector<FixedPoint> fixed_points;
  Formulation formulation = Formulation::kInfSup;
  bool boundary = false;  // extremizer attained at E in {0, rho} or r = 0
  bool tie = false;       // several fixed points share the minimum value
};

struct FixedPointOptions {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 10000;
  std::vector<double> inits;  // empty -> {1e-6 rho, rho/2, rho}
};

// Replica potential I(r) + G_R(lambda E)/2 - r E / 2.
double i_rs(const Prior& prior, const QuadratureRule& quad, const Spectrum& spec_T,
            const PotentialPoint& p);

// One state-evolution update: r = lambda * R_R(-lambda E), E_next = mmse(r).
struct SeStep {
  double E_next;
  double r;
};
SeStep se_step(const Prior& prior, const QuadratureRule& quad, const Spectrum& spec_T,
               double E, double lambda);

// Damped fixed-point iteration from each init; converged points are
// deduplicated, non-converged runs are returned flagged rather than thrown.
std::vector<FixedPoint> fixed_points(const Prior& prior, const QuadratureRule& quad,
                                     const Spectrum& spec_T, double lambda,
                                     const FixedPointOptions& opts = {});

PotentialResult extremize(const Prior& prior, const QuadratureRule& quad,
                          const Spectrum& spec_T, double lambda,
                          Formulation formulation = Formulation::kInfSup,
                          const FixedPointOptions& fp_opts = {});

// The extremizing E, i.e. the replica prediction for the asymptotic MMSE.
// A conjecture for non-i.i.d. ensembles; proved only for Gaussian matrices.
double mmse_prediction(const PotentialResult& result);

}  // namespace rlest
