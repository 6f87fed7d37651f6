#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "rlest/prior.hpp"
#include "rlest/spectra.hpp"

namespace rlest {

// Hard cap on exact posterior enumeration: |atoms|^n configurations.
inline constexpr double kEnumerationBudget = 1048576.0;  // 2^20

bool enumerable(const Prior& prior, int n);

// One finite-size realization of y = sqrt(lambda/n) Phi' W x + z.
struct Instance {
  int n = 0;
  int m = 0;
  double lambda = 0.0;
  Eigen::MatrixXd phi_prime;  // m x m
  Eigen::MatrixXd w;          // m x n, i.i.d. N(0, 1/n)
  Eigen::MatrixXd phi;        // phi_prime * w
  Eigen::VectorXd x;          // n
  Eigen::VectorXd z;          // m
  Eigen::VectorXd y;          // m
  std::uint64_t seed = 0;
};

Instance generate_instance(const Prior& prior, const Ensemble& ens, double lambda,
                           int n, int m, std::uint64_t seed);

struct MiEstimate {
  double value = 0.0;
  double std_err = 0.0;
  int trials = 0;
};

// Normalized mutual information (1/n) I(X; Y | Phi) by exact enumeration of
// the posterior per instance and Monte-Carlo over `trials` instances.
MiEstimate exact_mi(const Prior& prior, const Ensemble& ens, double lambda, int n,
                    int m, int trials, std::uint64_t seed, int threads = 1);

// Gaussian-prior path: (1/2n) E log det(I + lambda rho (1/n) Phi Phi^T),
// exact per realization.
MiEstimate exact_mi_gaussian(const Ensemble& ens, double rho, double lambda, int n,
                             int m, int trials, std::uint64_t seed, int threads = 1);

// Exact posterior overlap statistics for one instance.
struct InstanceOverlap {
  double q_mean = 0.0;     // <Q>
  double q2_mean = 0.0;    // <Q^2>
  double q12 = 0.0;        // <q_12> = |<x>|^2 / n, the two-replica overlap
};

InstanceOverlap instance_overlap(const Instance& inst, const Prior& posterior_prior);

struct PosteriorStats {
  double mean_overlap = 0.0;       // estimate of E<Q>
  double overlap_variance = 0.0;   // estimate of E<(Q - E<Q>)^2>
  double replica_overlap = 0.0;    // estimate of E<q_12>
  double se_mean_overlap = 0.0;
  double se_overlap_variance = 0.0;
  double se_replica_overlap = 0.0;
  int trials = 0;
};

PosteriorStats posterior_stats(const Prior& prior, const Ensemble& ens, double lambda,
                               int n, int m, int trials, std::uint64_t seed,
                               int threads = 1);

struct NishimoriReport {
  double z_score = 0.0;   // |mean gap| / SE of <Q> - <q_12> across instances
  double gap = 0.0;
  double se = 0.0;
  double mean_overlap = 0.0;
  double mean_replica_overlap = 0.0;
  int trials = 0;
};

// z-score of the identity E<Q> = E<q_12>. Passing a posterior prior different
// from the true one breaks the identity (negative control).
NishimoriReport nishimori_residual(const Prior& true_prior, const Prior& posterior_prior,
                                   const Ensemble& ens, double lambda, int n, int m,
                                   int trials, std::uint64_t seed, int threads = 1);

}  // namespace rlest
