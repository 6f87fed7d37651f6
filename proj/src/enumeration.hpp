// Internal: exact posterior enumeration over discrete signal configurations.
// Depth-first over coordinates with incremental residual / overlap / prior
// bookkeeping, so each leaf costs O(m) regardless of n.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "rlest/prior.hpp"

namespace rlest::detail {

struct LeafState {
  const double* x_values;   // candidate signal, length n
  double log_prior;         // sum of atom log-weights
  double tilde_sq;          // || y_tilde - sqrt(R1) x ||^2 (0 if no side channel)
  double dot_truth;         // sum_i X_i x_i
  const Eigen::VectorXd& residual;  // y - scaled_cols * x
};

// Enumerates all |atoms|^n configurations. `scaled_cols` holds the columns
// multiplying each coordinate (already scaled); `y0` seeds the residual.
// `x_true` may be null (dot_truth stays 0); the side channel is active when
// y_tilde != nullptr.
template <typename Visitor>
void enumerate_configs(const std::vector<double>& atoms,
                       const std::vector<double>& log_weights, int n,
                       const Eigen::MatrixXd& scaled_cols, const Eigen::VectorXd& y0,
                       const double* x_true, const double* y_tilde, double sqrt_r1,
                       Visitor&& visit) {
  const int q = static_cast<int>(atoms.size());
  std::vector<double> xvals(n, 0.0);
  Eigen::VectorXd residual = y0;

  struct Frame {
    double log_prior;
    double tilde_sq;
    double dot_truth;
  };
  std::vector<Frame> stack(n + 1);
  stack[0] = {0.0, 0.0, 0.0};

  // explicit digit odometer DFS
  std::vector<int> digit(n, 0);
  int depth = 0;
  auto apply = [&](int level, int d) {
    const double a = atoms[d];
    xvals[level] = a;
    residual.noalias() -= a * scaled_cols.col(level);
    Frame f = stack[level];
    f.log_prior += log_weights[d];
    if (y_tilde != nullptr) {
      const double dlt = y_tilde[level] - sqrt_r1 * a;
      f.tilde_sq += dlt * dlt;
    }
    if (x_true != nullptr) f.dot_truth += x_true[level] * a;
    stack[level + 1] = f;
  };
  auto undo = [&](int level, int d) {
    residual.noalias() += atoms[d] * scaled_cols.col(level);
  };

  while (true) {
    while (depth < n) {
      apply(depth, digit[depth]);
      ++depth;
    }
    visit(LeafState{xvals.data(), stack[n].log_prior, stack[n].tilde_sq,
                    stack[n].dot_truth, residual});
    // advance odometer
    int level = n - 1;
    while (level >= 0) {
      undo(level, digit[level]);
      if (++digit[level] < q) break;
      digit[level] = 0;
      --level;
    }
    if (level < 0) return;
    depth = level;
  }
}

}  // namespace rlest::detail
