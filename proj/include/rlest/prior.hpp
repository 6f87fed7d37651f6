#pragma once

#include <cstdint>
#include <vector>

namespace rlest {

enum class PriorKind { kGaussian, kRademacher, kGaussBernoulli, kDiscrete };

// Scalar signal law P0 with second moment rho. Discrete laws carry their
// atoms explicitly; gauss_bernoulli is the spike-and-slab mixture
// (1-p) delta_0 + p N(0, rho/p).
struct Prior {
  PriorKind kind = PriorKind::kGaussian;
  double rho = 1.0;
  double sparsity = 1.0;              // gauss_bernoulli only
  std::vector<double> atoms;          // discrete / rademacher
  std::vector<double> weights;
  double support_bound = 1.0;         // truncation radius for unbounded kinds

  static Prior gaussian(double rho);
  static Prior rademacher();
  static Prior gauss_bernoulli(double rho, double sparsity);
  static Prior discrete(std::vector<double> atoms, std::vector<double> weights);

  bool is_atomic() const {
    return kind == PriorKind::kRademacher || kind == PriorKind::kDiscrete;
  }
  double mean() const;

  // Checks the structural invariants (weights sum to one, rho consistent
  // with the stated law, atoms within the support bound).
  void validate() const;
};

// Nodes/weights integrating against the standard Gaussian weight:
// E[f(Z)] ~ sum_i weights[i] * f(nodes[i]), exact for polynomials of
// degree <= 2*order - 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  static QuadratureRule gauss_hermite(int order);
};

// I(r) = I(X; sqrt(r) X + Z) for X ~ prior, Z ~ N(0,1). Closed form for the
// Gaussian kind, nested quadrature / atom sums otherwise.
double mutual_info(const Prior& prior, double r, const QuadratureRule& quad);

// mmse(r) = E[(X - E[X | sqrt(r) X + Z])^2], in [0, rho].
double mmse(const Prior& prior, double r, const QuadratureRule& quad);

// i.i.d. draws from the prior; deterministic given seed.
std::vector<double> sample_prior(const Prior& prior, int count, std::uint64_t seed);

class RngStream;

// Single draw from an externally owned stream (instance generation).
double sample_one(const Prior& prior, RngStream& rng);

}  // namespace rlest
