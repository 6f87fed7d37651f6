#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rlest/common.hpp"
#include "rlest/interp.hpp"
#include "rlest/rng.hpp"

using namespace rlest;

namespace {

const Prior& rad() {
  static const Prior p = Prior::rademacher();
  return p;
}

// hand-built two-dimensional interpolation instance with explicit fields
InterpInstance tiny_instance(const InterpPath& path, double t, bool zero_noise) {
  InterpInstance inst;
  inst.base.n = 2;
  inst.base.m = 2;
  inst.base.lambda = 1.0;
  inst.base.phi_prime.resize(2, 2);
  inst.base.phi_prime << 1.3, -0.2, 0.4, 0.9;
  inst.base.w.resize(2, 2);
  inst.base.w << 0.5, -0.7, 0.1, 1.1;
  inst.base.phi = inst.base.phi_prime * inst.base.w;
  inst.base.x.resize(2);
  inst.base.x << 1.0, -1.0;
  inst.base.z.resize(2);
  inst.v.resize(2);
  inst.z_tilde.resize(2);
  if (zero_noise) {
    inst.base.z.setZero();
    inst.z_tilde.setZero();
  } else {
    inst.base.z << 0.3, -1.2;
    inst.z_tilde << 0.8, 0.05;
  }
  inst.v << -0.6, 1.4;
  inst.t = t;
  const double c1 = std::sqrt((1.0 - t) / 2.0);
  const double c2 = std::sqrt(path.R2(t) / 2.0);
  inst.y_t = c1 * (inst.base.phi * inst.base.x) + c2 * (inst.base.phi_prime * inst.v) +
             inst.base.z;
  inst.y_tilde_t = std::sqrt(path.R1(t)) * inst.base.x + inst.z_tilde;
  return inst;
}

}  // namespace

TEST_SUITE("interp") {

TEST_CASE("paths: constant tables integrate exactly") {
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.2);
  for (double t : {0.0, 0.25, 0.7, 1.0}) {
    CHECK(p.R1(t) == doctest::Approx(0.1 + 0.5 * t).epsilon(1e-15));
    CHECK(p.R2(t) == doctest::Approx(0.2 + 0.3 * t).epsilon(1e-15));
    CHECK(p.r_at(t) == 0.5);
    CHECK(p.E_at(t) == 0.3);
  }
}

TEST_CASE("paths: piecewise tables, file parsing, monotone accumulation") {
  const std::string path = "interp_path_test.txt";
  {
    std::ofstream out(path);
    out << "# piecewise path\n[r]\n0 0\n0.5 1.0\n1 1.0\n[E]\n0 0.4\n1 0.0\n";
  }
  const InterpPath p = InterpPath::from_file(path, 0.0, 0.0);
  // integral of the ramp r(t): t^2 on [0, 0.5] via trapezoid of a linear ramp
  CHECK(p.R1(0.5) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.R1(1.0) == doctest::Approx(0.25 + 0.5).epsilon(1e-12));
  CHECK(p.R2(1.0) == doctest::Approx(0.2).epsilon(1e-12));
  double prev1 = -1.0, prev2 = -1.0;
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    CHECK(p.R1(t) >= prev1);
    CHECK(p.R2(t) >= prev2);
    prev1 = p.R1(t);
    prev2 = p.R2(t);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(InterpPath::from_file("missing_path.txt", 0, 0),
                  std::invalid_argument);
  InterpPath bad;
  bad.knots_r = {0.0, 1.0};
  bad.values_r = {0.5, 0.5};
  bad.knots_E = {0.0, 0.5};  // does not reach t = 1
  bad.values_E = {0.1, 0.1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("hamiltonian: perfect candidates give zero energy") {
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.2);
  const InterpInstance inst = tiny_instance(p, 0.4, /*zero_noise=*/true);
  CHECK(hamiltonian(inst, p, inst.base.x, inst.v) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("hamiltonian: the signal branch decouples at t = 1") {
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.2);
  const InterpInstance inst = tiny_instance(p, 1.0, false);
  Eigen::VectorXd x2(2), v(2);
  x2 << -1.0, -1.0;
  v << 0.2, 0.1;
  const double sqrt_r1 = std::sqrt(p.R1(1.0));
  const double tilde_a = (inst.y_tilde_t - sqrt_r1 * inst.base.x).squaredNorm();
  const double tilde_b = (inst.y_tilde_t - sqrt_r1 * x2).squaredNorm();
  const double ha = hamiltonian(inst, p, inst.base.x, v) - 0.5 * tilde_a;
  const double hb = hamiltonian(inst, p, x2, v) - 0.5 * tilde_b;
  CHECK(ha == doctest::Approx(hb).epsilon(1e-12));
}

TEST_CASE("hamiltonian vs explicit scalar expansion") {
  const InterpPath p = InterpPath::constant(0.7, 0.2, 0.05, 0.15);
  const double t = 0.35;
  const InterpInstance inst = tiny_instance(p, t, false);
  Eigen::VectorXd x(2), v(2);
  x << -1.0, 1.0;
  v << 0.9, -0.3;
  const double c1 = std::sqrt((1.0 - t) / 2.0);
  const double c2 = std::sqrt(p.R2(t) / 2.0);
  const double sr1 = std::sqrt(p.R1(t));
  double acc = 0.0;
  for (int mu = 0; mu < 2; ++mu) {
    double lin = inst.y_t(mu);
    for (int i = 0; i < 2; ++i) lin -= c1 * inst.base.phi(mu, i) * x(i);
    for (int i = 0; i < 2; ++i) lin -= c2 * inst.base.phi_prime(mu, i) * v(i);
    acc += 0.5 * lin * lin;
  }
  for (int i = 0; i < 2; ++i) {
    const double lin = inst.y_tilde_t(i) - sr1 * x(i);
    acc += 0.5 * lin * lin;
  }
  CHECK(hamiltonian(inst, p, x, v) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("the degenerate structureless model is t-independent") {
  InterpPath p = InterpPath::constant(0.0, 0.0, 0.3, 0.0);
  InterpInstance a = tiny_instance(p, 0.3, false);
  a.base.phi_prime.setZero();
  a.base.phi.setZero();
  a.y_t = a.base.z;  // with phi' = 0 and R2 = 0 the channel is pure noise
  InterpInstance b = a;
  b.t = 0.7;
  Eigen::VectorXd x(2), v(2);
  x << 1.0, -1.0;
  v << 0.4, 0.2;
  CHECK(hamiltonian(a, p, x, v) == doctest::Approx(hamiltonian(b, p, x, v)).epsilon(1e-15));
}

TEST_CASE("interp_mi at t = 0 with zero offsets equals the plain oracle") {
  const Ensemble ens = Ensemble::identity_scaled(4, 8);
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.0, 0.0);
  const int trials = 1200;
  const MiEstimate via_interp = interp_mi(rad(), ens, p, 0.0, 8, 4, trials, 53, 2);
  const MiEstimate via_gibbs = exact_mi(rad(), ens, 1.0, 8, 4, trials, 53, 2);
  const double pooled = std::sqrt(via_interp.std_err * via_interp.std_err +
                                  via_gibbs.std_err * via_gibbs.std_err);
  CHECK(std::abs(via_interp.value - via_gibbs.value) <= 3.0 * pooled);
}

TEST_CASE("side observations only add information") {
  const Ensemble ens = Ensemble::identity_scaled(3, 6);
  const MiEstimate bare =
      interp_mi(rad(), ens, InterpPath::constant(0.5, 0.3, 0.0, 0.0), 0.0, 6, 3, 800, 59, 2);
  const MiEstimate boosted =
      interp_mi(rad(), ens, InterpPath::constant(0.5, 0.3, 1.0, 1.0), 0.0, 6, 3, 800, 59, 2);
  const double pooled = std::sqrt(bare.std_err * bare.std_err +
                                  boosted.std_err * boosted.std_err);
  CHECK(boosted.value > bare.value - 3.0 * pooled);
  CHECK(boosted.value > bare.value);  // paired seeds: strictly more information
}

TEST_CASE("interp_mi is continuous in t") {
  const Ensemble ens = Ensemble::gaussian_product(3, 6, 1);
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  const double h = 0.05;
  const MiEstimate at_t = interp_mi(rad(), ens, p, 0.4, 6, 3, 400, 61, 2);
  const MiEstimate at_th = interp_mi(rad(), ens, p, 0.4 + h, 6, 3, 400, 61, 2);
  // slope bound calibrated at ~|i'| <= 0.5 on this configuration
  CHECK(std::abs(at_th.value - at_t.value) <= 1.0 * h);
}

TEST_CASE("boundary identity at t = 1") {
  const Ensemble ens = Ensemble::identity_scaled(4, 8);
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  const BoundaryReport rep =
      boundary_check(rad(), ens, p, 8, 4, 1500, 67, Spectrum::delta(1.0, 0.5), 2);
  CHECK(rep.identity_computed);
  CHECK(rep.z_score <= 4.0);
  // unit-mass spectrum: the empirical and asymptotic transform forms coincide
  CHECK(rep.spectrum_gap < 1e-12);
}

TEST_CASE("boundary spectrum gap shrinks with n for sampled ensembles") {
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  const Spectrum ref =
      esd_T(sample_phi_prime(Ensemble::gaussian_product(1000, 1000, 1), 9001), 1000);
  double gaps[2];
  int idx = 0;
  for (int n : {100, 400}) {
    const Ensemble ens = Ensemble::gaussian_product(n, n, 1);
    // rademacher at n = 100 is far beyond the enumeration budget: only the
    // determinant side of the report is available
    const BoundaryReport rep = boundary_check(rad(), ens, p, n, n, 48, 71, ref, 2);
    CHECK_FALSE(rep.identity_computed);
    gaps[idx++] = rep.spectrum_gap;
  }
  CHECK(gaps[1] < gaps[0]);
}

TEST_CASE("derivative identity closes with the exact remainder") {
  const Ensemble ens = Ensemble::gaussian_product(3, 6, 1);
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  const DerivativeReport rep = derivative_check(rad(), ens, p, 0.5, 1e-3, 6, 3, 3000, 73, 2);
  CHECK(std::abs(rep.gap) <= 3.0 * rep.gap_se + rep.bias_bound);
  CHECK(rep.remainder == 0.0);  // rademacher signals have |x| = 1 exactly
}

TEST_CASE("derivative identity with a nonzero remainder prior") {
  const Prior tri = Prior::discrete({0.0, 3.0}, {2.0 / 3.0, 1.0 / 3.0});
  const Ensemble ens = Ensemble::gaussian_product(3, 6, 1);
  InterpPath p = InterpPath::constant(0.5, 1.2, 0.1, 0.1);
  const DerivativeReport rep = derivative_check(tri, ens, p, 0.5, 1e-3, 6, 3, 4000, 79, 2);
  CHECK(std::abs(rep.gap) <= 3.0 * rep.gap_se + rep.bias_bound);
  CHECK(std::abs(rep.remainder) > 0.0);
  // dropping the remainder leaves a visibly different right-hand side
  CHECK(std::abs(rep.rhs_exact - rep.rhs_lemma) == std::abs(rep.remainder));
}

TEST_CASE("matched interpolation path suppresses the matrix term") {
  const Ensemble ens = Ensemble::gaussian_product(3, 6, 1);
  const double rbar = 0.5;
  // first pass with a deliberately mismatched E(t)
  const DerivativeReport off = derivative_check(
      rad(), ens, InterpPath::constant(rbar, 0.95, 0.1, 0.1), 0.5, 1e-3, 6, 3, 2500, 83, 2);
  // E<Q> from the scalar term, then rerun with E(t) = rho - E<Q>
  const double q_mean = 1.0 - 2.0 * off.term_scalar / rbar;
  const double matched_e = std::clamp(1.0 - q_mean, 0.0, 1.0);
  const DerivativeReport matched = derivative_check(
      rad(), ens, InterpPath::constant(rbar, matched_e, 0.1, 0.1), 0.5, 1e-3, 6, 3, 2500,
      83, 2);
  CHECK(std::abs(matched.term_matrix) < std::abs(off.term_matrix));
  CHECK(std::abs(matched.derivative - matched.term_scalar) <=
        3.0 * matched.gap_se + matched.bias_bound + std::abs(matched.term_matrix));
}

TEST_CASE("error paths") {
  const Ensemble ens = Ensemble::identity_scaled(3, 6);
  const InterpPath p = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  CHECK_THROWS_AS(interp_mi(Prior::gaussian(1.0), ens, p, 0.5, 6, 3, 10, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(interp_mi(rad(), ens, p, 1.5, 6, 3, 10, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(derivative_check(rad(), ens, p, 0.95, 1e-3, 6, 3, 10, 1, 1),
                  std::invalid_argument);
  // E(t) exceeding rho is rejected against the prior
  CHECK_THROWS_AS(interp_mi(rad(), ens, InterpPath::constant(0.5, 1.4, 0.1, 0.1), 0.5,
                            6, 3, 10, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(InterpPath::constant(0.5, 0.3, -0.1, 0.0), std::invalid_argument);
}

}  // TEST_SUITE
