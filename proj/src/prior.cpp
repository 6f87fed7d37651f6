#include "rlest/prior.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rlest/common.hpp"
#include "rlest/rng.hpp"

namespace rlest {

namespace {

void check_r(double r) {
  if (!std::isfinite(r) || r < 0.0)
    throw std::invalid_argument("channel snr r must be finite and nonnegative");
}

void check_result(double v, const char* op) {
  if (!std::isfinite(v))
    throw numerical_failure(std::string(op) +
                            ": quadrature produced a non-finite value "
                            "(all posterior weights underflowed?)");
}

// log posterior weights over atoms b for observation y = z + sqrt(r)*a,
// shifted so the largest is zero; returns the shift.
double atom_log_weights(const Prior& p, double sqrt_r, double a, double z,
                        std::vector<double>& lw) {
  const std::size_t nb = p.atoms.size();
  lw.resize(nb);
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb; ++b) {
    const double d = z + sqrt_r * (a - p.atoms[b]);
    lw[b] = std::log(p.weights[b]) - 0.5 * d * d;
    lmax = std::max(lmax, lw[b]);
  }
  for (auto& v : lw) v -= lmax;
  return lmax;
}

}  // namespace

Prior Prior::gaussian(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("gaussian prior: rho must be finite and >= 0");
  Prior p;
  p.kind = PriorKind::kGaussian;
  p.rho = rho;
  p.support_bound = 8.0 * std::sqrt(std::max(rho, 1e-300));
  return p;
}

Prior Prior::rademacher() {
  Prior p;
  p.kind = PriorKind::kRademacher;
  p.rho = 1.0;
  p.atoms = {-1.0, 1.0};
  p.weights = {0.5, 0.5};
  p.support_bound = 1.0;
  return p;
}

Prior Prior::gauss_bernoulli(double rho, double sparsity) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("gauss_bernoulli prior: rho must be finite and > 0");
  if (!(sparsity > 0.0) || !(sparsity <= 1.0))
    throw std::invalid_argument("gauss_bernoulli prior: sparsity must be in (0, 1]");
  Prior p;
  p.kind = PriorKind::kGaussBernoulli;
  p.rho = rho;
  p.sparsity = sparsity;
  p.support_bound = 8.0 * std::sqrt(rho);
  return p;
}

Prior Prior::discrete(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw std::invalid_argument("discrete prior: atoms/weights size mismatch");
  Prior p;
  p.kind = PriorKind::kDiscrete;
  p.atoms = std::move(atoms);
  p.weights = std::move(weights);
  double wsum = 0.0, second = 0.0, bound = 0.0;
  for (std::size_t i = 0; i < p.atoms.size(); ++i) {
    if (!(p.weights[i] >= 0.0))
      throw std::invalid_argument("discrete prior: negative weight");
    wsum += p.weights[i];
    second += p.weights[i] * p.atoms[i] * p.atoms[i];
    bound = std::max(bound, std::abs(p.atoms[i]));
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("discrete prior: weights must sum to 1");
  p.rho = second;
  p.support_bound = bound;
  return p;
}

double Prior::mean() const {
  switch (kind) {
    case PriorKind::kGaussian:
    case PriorKind::kGaussBernoulli:
      return 0.0;
    default: {
      double m = 0.0;
      for (std::size_t i = 0; i < atoms.size(); ++i) m += weights[i] * atoms[i];
      return m;
    }
  }
}

void Prior::validate() const {
  if (!std::isfinite(rho) || rho < 0.0)
    throw std::invalid_argument("prior: rho must be finite and >= 0");
  if (!(support_bound > 0.0))
    throw std::invalid_argument("prior: support_bound must be > 0");
  if (is_atomic()) {
    double wsum = 0.0, second = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      wsum += weights[i];
      second += weights[i] * atoms[i] * atoms[i];
      if (std::abs(atoms[i]) > support_bound + 1e-12)
        throw std::invalid_argument("prior: atom outside support bound");
    }
    if (std::abs(wsum - 1.0) > 1e-12)
      throw std::invalid_argument("prior: weights must sum to 1");
    if (std::abs(second - rho) > 1e-10)
      throw std::invalid_argument("prior: rho inconsistent with atoms");
  }
  if (kind == PriorKind::kGaussBernoulli && !(sparsity > 0.0 && sparsity <= 1.0))
    throw std::invalid_argument("prior: sparsity must be in (0, 1]");
}

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  // Golub-Welsch on the Hermite Jacobi matrix; converted to the standard
  // normal weight (nodes scaled by sqrt(2), weights are squared first
  // eigenvector components, already summing to 1).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double beta = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw numerical_failure("gauss_hermite: eigensolver failed");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i) * std::sqrt(2.0);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

double mutual_info(const Prior& prior, double r, const QuadratureRule& quad) {
  check_r(r);
  prior.validate();
  if (r == 0.0) return 0.0;

  switch (prior.kind) {
    case PriorKind::kGaussian:
      return 0.5 * std::log1p(r * prior.rho);

    case PriorKind::kRademacher:
    case PriorKind::kDiscrete: {
      const double sqrt_r = std::sqrt(r);
      std::vector<double> lw;
      double acc = 0.0;
      for (std::size_t ai = 0; ai < prior.atoms.size(); ++ai) {
        const double a = prior.atoms[ai];
        double inner = 0.0;
        for (int k = 0; k < quad.order; ++k) {
          const double shift = atom_log_weights(prior, sqrt_r, a, quad.nodes[k], lw);
          double s = 0.0;
          for (double v : lw) s += std::exp(v);
          inner += quad.weights[k] * (shift + std::log(s));
        }
        acc += prior.weights[ai] * inner;
      }
      const double result = -0.5 - acc;
      check_result(result, "mutual_info");
      return result;
    }

    case PriorKind::kGaussBernoulli: {
      const double p = prior.sparsity;
      const double sigma2 = prior.rho / p;
      const double s2 = 1.0 + r * sigma2;
      const double sqrt_r = std::sqrt(r);
      const double sigma = std::sqrt(sigma2);
      const double l0_base = std::log1p(-p);  // -inf at p=1 is handled by logsumexp2
      const double l1_base = std::log(p) - 0.5 * std::log(s2);
      auto log_marginal = [&](double y) {
        const double l0 = (p < 1.0) ? l0_base - 0.5 * y * y
                                    : -std::numeric_limits<double>::infinity();
        const double l1 = l1_base - 0.5 * y * y / s2;
        return logsumexp2(l0, l1);
      };
      // spike branch: X = 0
      double spike = 0.0;
      for (int k = 0; k < quad.order; ++k)
        spike += quad.weights[k] * log_marginal(quad.nodes[k]);
      // slab branch: X = sigma * G
      double slab = 0.0;
      for (int g = 0; g < quad.order; ++g) {
        const double x = sigma * quad.nodes[g];
        double inner = 0.0;
        for (int k = 0; k < quad.order; ++k)
          inner += quad.weights[k] * log_marginal(sqrt_r * x + quad.nodes[k]);
        slab += quad.weights[g] * inner;
      }
      const double result = -0.5 - ((1.0 - p) * spike + p * slab);
      check_result(result, "mutual_info");
      return result;
    }
  }
  throw std::logic_error("mutual_info: unreachable");
}

double mmse(const Prior& prior, double r, const QuadratureRule& quad) {
  check_r(r);
  prior.validate();
  if (r == 0.0) return prior.rho;

  switch (prior.kind) {
    case PriorKind::kGaussian:
      return prior.rho / (1.0 + r * prior.rho);

    case PriorKind::kRademacher:
    case PriorKind::kDiscrete: {
      const double sqrt_r = std::sqrt(r);
      std::vector<double> lw;
      double acc = 0.0;
      for (std::size_t ai = 0; ai < prior.atoms.size(); ++ai) {
        const double a = prior.atoms[ai];
        double inner = 0.0;
        for (int k = 0; k < quad.order; ++k) {
          atom_log_weights(prior, sqrt_r, a, quad.nodes[k], lw);
          double norm = 0.0, num = 0.0;
          for (std::size_t b = 0; b < prior.atoms.size(); ++b) {
            const double w = std::exp(lw[b]);
            norm += w;
            num += w * prior.atoms[b];
          }
          const double post_mean = num / norm;
          inner += quad.weights[k] * (a - post_mean) * (a - post_mean);
        }
        acc += prior.weights[ai] * inner;
      }
      check_result(acc, "mmse");
      return acc;
    }

    case PriorKind::kGaussBernoulli: {
      const double p = prior.sparsity;
      const double sigma2 = prior.rho / p;
      const double s2 = 1.0 + r * sigma2;
      const double sqrt_r = std::sqrt(r);
      const double sigma = std::sqrt(sigma2);
      const double slab_gain = sqrt_r * sigma2 / s2;
      auto post_mean = [&](double y) {
        if (p >= 1.0) return slab_gain * y;
        // slab responsibility via the log-odds of the two mixture branches
        const double l0 = std::log1p(-p) - 0.5 * y * y;
        const double l1 = std::log(p) - 0.5 * std::log(s2) - 0.5 * y * y / s2;
        const double resp = 1.0 / (1.0 + std::exp(l0 - l1));
        return resp * slab_gain * y;
      };
      double spike = 0.0;
      for (int k = 0; k < quad.order; ++k) {
        const double m = post_mean(quad.nodes[k]);
        spike += quad.weights[k] * m * m;
      }
      double slab = 0.0;
      for (int g = 0; g < quad.order; ++g) {
        const double x = sigma * quad.nodes[g];
        double inner = 0.0;
        for (int k = 0; k < quad.order; ++k) {
          const double m = post_mean(sqrt_r * x + quad.nodes[k]);
          inner += quad.weights[k] * (x - m) * (x - m);
        }
        slab += quad.weights[g] * inner;
      }
      const double acc = (1.0 - p) * spike + p * slab;
      check_result(acc, "mmse");
      return acc;
    }
  }
  throw std::logic_error("mmse: unreachable");
}

double sample_one(const Prior& prior, RngStream& rng) {
  switch (prior.kind) {
    case PriorKind::kGaussian:
      return std::sqrt(prior.rho) * rng.gaussian();
    case PriorKind::kGaussBernoulli: {
      const double u = rng.uniform();
      return (u < prior.sparsity) ? std::sqrt(prior.rho / prior.sparsity) * rng.gaussian()
                                  : 0.0;
    }
    case PriorKind::kRademacher:
    case PriorKind::kDiscrete: {
      double u = rng.uniform();
      for (std::size_t i = 0; i + 1 < prior.atoms.size(); ++i) {
        if (u < prior.weights[i]) return prior.atoms[i];
        u -= prior.weights[i];
      }
      return prior.atoms.back();
    }
  }
  throw std::logic_error("sample_one: unreachable");
}

std::vector<double> sample_prior(const Prior& prior, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_prior: count must be >= 1");
  prior.validate();
  RngStream rng(seed, stream::kPriorSample, 0);
  std::vector<double> out(count);
  for (auto& v : out) v = sample_one(prior, rng);
  return out;
}

}  // namespace rlest
