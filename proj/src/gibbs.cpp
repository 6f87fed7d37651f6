#include "rlest/gibbs.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "enumeration.hpp"
#include "rlest/common.hpp"
#include "rlest/rng.hpp"

namespace rlest {

namespace {

std::vector<double> atom_log_weights(const Prior& prior) {
  std::vector<double> lw(prior.weights.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = std::log(prior.weights[i]);
  return lw;
}

void check_enumerable(const Prior& prior, int n) {
  if (!prior.is_atomic())
    throw std::invalid_argument("exact enumeration needs an atomic prior");
  if (!enumerable(prior, n))
    throw std::invalid_argument("enumeration budget exceeded: |atoms|^n > 2^20");
}

void check_shapes(const Ensemble& ens, int n, int m) {
  if (ens.n != n || ens.m != m)
    throw std::invalid_argument("ensemble shape does not match requested (m, n)");
}

double jackknife_se_variance(std::span<const double> q_mean,
                             std::span<const double> q2_mean) {
  // SE of the plug-in estimator mean(<Q^2>) - mean(<Q>)^2 by leave-one-out.
  const std::size_t t = q_mean.size();
  if (t < 2) return 0.0;
  const double s1 = pairwise_sum(q_mean);
  const double s2 = pairwise_sum(q2_mean);
  std::vector<double> loo(t);
  for (std::size_t i = 0; i < t; ++i) {
    const double m1 = (s1 - q_mean[i]) / (t - 1);
    const double m2 = (s2 - q2_mean[i]) / (t - 1);
    loo[i] = m2 - m1 * m1;
  }
  const double loo_mean = mean(loo);
  double acc = 0.0;
  for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
  return std::sqrt(acc * (t - 1) / t);
}

}  // namespace

bool enumerable(const Prior& prior, int n) {
  if (!prior.is_atomic() || n < 1) return false;
  return std::pow(static_cast<double>(prior.atoms.size()), n) <= kEnumerationBudget;
}

Instance generate_instance(const Prior& prior, const Ensemble& ens, double lambda,
                           int n, int m, std::uint64_t seed) {
  prior.validate();
  check_shapes(ens, n, m);
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("generate_instance: lambda must be finite and >= 0");

  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.lambda = lambda;
  inst.seed = seed;
  inst.phi_prime = sample_phi_prime(ens, seed);

  RngStream rng_w(seed, stream::kMatrixW, 0);
  const double sd_w = 1.0 / std::sqrt(static_cast<double>(n));
  inst.w.resize(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) inst.w(i, j) = sd_w * rng_w.gaussian();
  inst.phi = inst.phi_prime * inst.w;

  RngStream rng_x(seed, stream::kSignal, 0);
  inst.x.resize(n);
  for (int i = 0; i < n; ++i) inst.x(i) = sample_one(prior, rng_x);

  RngStream rng_z(seed, stream::kNoise, 0);
  inst.z.resize(m);
  for (int i = 0; i < m; ++i) inst.z(i) = rng_z.gaussian();

  inst.y = std::sqrt(lambda / n) * (inst.phi * inst.x) + inst.z;
  return inst;
}

MiEstimate exact_mi(const Prior& prior, const Ensemble& ens, double lambda, int n,
                    int m, int trials, std::uint64_t seed, int threads) {
  check_enumerable(prior, n);
  check_shapes(ens, n, m);
  if (trials < 1) throw std::invalid_argument("exact_mi: trials must be >= 1");

  const std::vector<double> log_w = atom_log_weights(prior);
  std::vector<double> per_trial(trials);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Instance inst = generate_instance(
        prior, ens, lambda, n, m, derive_seed(seed, stream::kTrial, k));
    const Eigen::MatrixXd scaled = std::sqrt(lambda / n) * inst.phi;
    LogSumExp lse;
    detail::enumerate_configs(
        prior.atoms, log_w, n, scaled, inst.y, nullptr, nullptr, 0.0,
        [&](const detail::LeafState& leaf) {
          lse.add(leaf.log_prior - 0.5 * leaf.residual.squaredNorm());
        });
    const double log_z = lse.value();
    if (!std::isfinite(log_z))
      throw numerical_failure("exact_mi: partition function underflowed");
    per_trial[k] = -log_z / n;
  });

  MiEstimate est;
  est.trials = trials;
  est.value = mean(per_trial) - 0.5 * ens.alpha();
  est.std_err = std_error(per_trial);
  return est;
}

MiEstimate exact_mi_gaussian(const Ensemble& ens, double rho, double lambda, int n,
                             int m, int trials, std::uint64_t seed, int threads) {
  check_shapes(ens, n, m);
  if (!(rho >= 0.0)) throw std::invalid_argument("exact_mi_gaussian: rho must be >= 0");
  if (trials < 1) throw std::invalid_argument("exact_mi_gaussian: trials must be >= 1");

  std::vector<double> per_trial(trials);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Eigen::MatrixXd phi =
        sample_phi(ens, derive_seed(seed, stream::kTrial, k));
    Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(m, m);
    gram.noalias() += (lambda * rho / n) * (phi * phi.transpose());
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw numerical_failure("exact_mi_gaussian: Cholesky failed");
    double logdet = 0.0;
    for (int i = 0; i < m; ++i) logdet += std::log(llt.matrixL()(i, i));
    per_trial[k] = logdet / n;  // (1/2n) log det, the L factor gives half
  });

  MiEstimate est;
  est.trials = trials;
  est.value = mean(per_trial);
  est.std_err = std_error(per_trial);
  return est;
}

InstanceOverlap instance_overlap(const Instance& inst, const Prior& posterior_prior) {
  check_enumerable(posterior_prior, inst.n);
  const std::vector<double> log_w = atom_log_weights(posterior_prior);
  const Eigen::MatrixXd scaled = std::sqrt(inst.lambda / inst.n) * inst.phi;
  const int n = inst.n;

  // pass 1: top log-weight for stable normalization
  double lw_max = -std::numeric_limits<double>::infinity();
  detail::enumerate_configs(posterior_prior.atoms, log_w, n, scaled, inst.y,
                            inst.x.data(), nullptr, 0.0,
                            [&](const detail::LeafState& leaf) {
                              const double lw =
                                  leaf.log_prior - 0.5 * leaf.residual.squaredNorm();
                              lw_max = std::max(lw_max, lw);
                            });
  if (!std::isfinite(lw_max))
    throw numerical_failure("instance_overlap: posterior weights underflowed");

  // pass 2: weighted sums
  double s0 = 0.0, sq = 0.0, sq2 = 0.0;
  Eigen::VectorXd sx = Eigen::VectorXd::Zero(n);
  detail::enumerate_configs(
      posterior_prior.atoms, log_w, n, scaled, inst.y, inst.x.data(), nullptr, 0.0,
      [&](const detail::LeafState& leaf) {
        const double lw = leaf.log_prior - 0.5 * leaf.residual.squaredNorm();
        const double w = std::exp(lw - lw_max);
        const double q = leaf.dot_truth / n;
        s0 += w;
        sq += w * q;
        sq2 += w * q * q;
        for (int i = 0; i < n; ++i) sx(i) += w * leaf.x_values[i];
      });

  InstanceOverlap out;
  out.q_mean = sq / s0;
  out.q2_mean = sq2 / s0;
  out.q12 = (sx / s0).squaredNorm() / n;
  return out;
}

PosteriorStats posterior_stats(const Prior& prior, const Ensemble& ens, double lambda,
                               int n, int m, int trials, std::uint64_t seed,
                               int threads) {
  check_enumerable(prior, n);
  check_shapes(ens, n, m);
  if (trials < 2) throw std::invalid_argument("posterior_stats: trials must be >= 2");

  std::vector<double> q(trials), q2(trials), q12(trials);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Instance inst = generate_instance(
        prior, ens, lambda, n, m, derive_seed(seed, stream::kTrial, k));
    const InstanceOverlap ov = instance_overlap(inst, prior);
    q[k] = ov.q_mean;
    q2[k] = ov.q2_mean;
    q12[k] = ov.q12;
  });

  PosteriorStats stats;
  stats.trials = trials;
  stats.mean_overlap = mean(q);
  stats.se_mean_overlap = std_error(q);
  stats.replica_overlap = mean(q12);
  stats.se_replica_overlap = std_error(q12);
  stats.overlap_variance = mean(q2) - stats.mean_overlap * stats.mean_overlap;
  stats.se_overlap_variance = jackknife_se_variance(q, q2);
  return stats;
}

NishimoriReport nishimori_residual(const Prior& true_prior, const Prior& posterior_prior,
                                   const Ensemble& ens, double lambda, int n, int m,
                                   int trials, std::uint64_t seed, int threads) {
  check_enumerable(posterior_prior, n);
  check_shapes(ens, n, m);
  if (trials < 2) throw std::invalid_argument("nishimori_residual: trials must be >= 2");

  std::vector<double> gap(trials), q(trials), q12(trials);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Instance inst = generate_instance(
        true_prior, ens, lambda, n, m, derive_seed(seed, stream::kTrial, k));
    const InstanceOverlap ov = instance_overlap(inst, posterior_prior);
    q[k] = ov.q_mean;
    q12[k] = ov.q12;
    gap[k] = ov.q_mean - ov.q12;
  });

  NishimoriReport rep;
  rep.trials = trials;
  rep.mean_overlap = mean(q);
  rep.mean_replica_overlap = mean(q12);
  rep.gap = mean(gap);
  rep.se = std_error(gap);
  rep.z_score = (rep.se > 0.0) ? std::abs(rep.gap) / rep.se
                               : (rep.gap == 0.0 ? 0.0
                                                 : std::numeric_limits<double>::infinity());
  return rep;
}

}  // namespace rlest
