#include "rlest/interp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "enumeration.hpp"
#include "rlest/common.hpp"
#include "rlest/rng.hpp"

namespace rlest {

namespace {

double pw_value(const std::vector<double>& kt, const std::vector<double>& kv, double t) {
  if (t <= kt.front()) return kv.front();
  if (t >= kt.back()) return kv.back();
  const auto it = std::upper_bound(kt.begin(), kt.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - kt.begin());
  const double w = (t - kt[j - 1]) / (kt[j] - kt[j - 1]);
  return kv[j - 1] + w * (kv[j] - kv[j - 1]);
}

// exact integral of the piecewise-linear interpolant on [0, t]
double pw_integral(const std::vector<double>& kt, const std::vector<double>& kv,
                   double t) {
  double acc = 0.0;
  for (std::size_t j = 1; j < kt.size(); ++j) {
    if (t <= kt[j - 1]) break;
    const double hi = std::min(t, kt[j]);
    const double v_hi = pw_value(kt, kv, hi);
    acc += 0.5 * (kv[j - 1] + v_hi) * (hi - kt[j - 1]);
    if (t <= kt[j]) break;
  }
  return acc;
}

void validate_table(const std::vector<double>& kt, const std::vector<double>& kv,
                    const char* name) {
  if (kt.size() < 2 || kt.size() != kv.size())
    throw std::invalid_argument(std::string("interp path: table ") + name +
                                " needs >= 2 (t, value) rows");
  if (std::abs(kt.front()) > 1e-12 || std::abs(kt.back() - 1.0) > 1e-12)
    throw std::invalid_argument(std::string("interp path: table ") + name +
                                " must cover t in [0, 1]");
  for (std::size_t j = 0; j < kt.size(); ++j) {
    if (j > 0 && !(kt[j] > kt[j - 1]))
      throw std::invalid_argument(std::string("interp path: table ") + name +
                                  " knots must increase");
    if (!std::isfinite(kv[j]) || kv[j] < 0.0)
      throw std::invalid_argument(std::string("interp path: table ") + name +
                                  " values must be finite and >= 0");
  }
}

struct Quenched {
  Instance base;
  Eigen::VectorXd v, z_tilde;
  Eigen::VectorXd phi_x;        // phi * x
  Eigen::VectorXd phi_prime_v;  // phi' * v
};

Quenched draw_quenched(const Prior& prior, const Ensemble& ens, int n, int m,
                       std::uint64_t seed) {
  Quenched qd;
  qd.base = generate_instance(prior, ens, 1.0, n, m, seed);
  RngStream rng_v(seed, stream::kAuxV, 0);
  qd.v.resize(m);
  for (int i = 0; i < m; ++i) qd.v(i) = rng_v.gaussian();
  RngStream rng_zt(seed, stream::kNoiseTilde, 0);
  qd.z_tilde.resize(n);
  for (int i = 0; i < n; ++i) qd.z_tilde(i) = rng_zt.gaussian();
  qd.phi_x = qd.base.phi * qd.base.x;
  qd.phi_prime_v = qd.base.phi_prime * qd.v;
  return qd;
}

struct ChannelCoefs {
  double c1;        // sqrt((1-t)/n)
  double c2;        // sqrt(R2(t)/n)
  double sqrt_r1;   // sqrt(R1(t))
  double logdet_c;  // log det(I + B B^T)
};

// Gaussian marginalization of v: factorize C = I + B B^T once per (trial, t).
struct VMarginal {
  Eigen::LLT<Eigen::MatrixXd> llt;
  ChannelCoefs coefs;
  Eigen::VectorXd y_t;
  Eigen::VectorXd y_tilde;
};

VMarginal assemble(const Quenched& qd, const InterpPath& path, double t) {
  const int n = qd.base.n;
  const int m = qd.base.m;
  const double r1 = path.R1(t);
  const double r2 = path.R2(t);
  VMarginal vm;
  vm.coefs.c1 = std::sqrt(std::max(0.0, 1.0 - t) / n);
  vm.coefs.c2 = std::sqrt(r2 / n);
  vm.coefs.sqrt_r1 = std::sqrt(r1);
  vm.y_t = vm.coefs.c1 * qd.phi_x + vm.coefs.c2 * qd.phi_prime_v + qd.base.z;
  vm.y_tilde = vm.coefs.sqrt_r1 * qd.base.x + qd.z_tilde;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(m, m);
  c.noalias() += (vm.coefs.c2 * vm.coefs.c2) *
                 (qd.base.phi_prime * qd.base.phi_prime.transpose());
  vm.llt.compute(c);
  if (vm.llt.info() != Eigen::Success)
    throw numerical_failure("interp: Cholesky of I + B B^T failed");
  vm.coefs.logdet_c = 0.0;
  for (int i = 0; i < m; ++i) vm.coefs.logdet_c += 2.0 * std::log(vm.llt.matrixL()(i, i));
  return vm;
}

// log of int dP0(x) Dv exp(-H) via x-enumeration; the v-integral per
// configuration is det(C)^{-1/2} exp(-a^T C^{-1} a / 2) with a the residual.
double log_partition(const Quenched& qd, const Prior& prior,
                     const std::vector<double>& log_w, const InterpPath& path,
                     double t) {
  const VMarginal vm = assemble(qd, path, t);
  const Eigen::MatrixXd scaled = vm.coefs.c1 * qd.base.phi;
  LogSumExp lse;
  detail::enumerate_configs(
      prior.atoms, log_w, qd.base.n, scaled, vm.y_t, nullptr, vm.y_tilde.data(),
      vm.coefs.sqrt_r1, [&](const detail::LeafState& leaf) {
        const double quad = leaf.residual.dot(vm.llt.solve(leaf.residual));
        lse.add(leaf.log_prior - 0.5 * leaf.tilde_sq - 0.5 * quad);
      });
  const double log_z = lse.value() - 0.5 * vm.coefs.logdet_c;
  if (!std::isfinite(log_z))
    throw numerical_failure("interp: partition function underflowed");
  return log_z;
}

std::vector<double> atom_log_weights(const Prior& prior) {
  std::vector<double> lw(prior.weights.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = std::log(prior.weights[i]);
  return lw;
}

void check_path_against_prior(const InterpPath& path, const Prior& prior) {
  for (double v : path.values_E)
    if (v > prior.rho * (1.0 + 1e-9) + 1e-12)
      throw std::invalid_argument("interp path: E(t) exceeds rho");
}

}  // namespace

InterpPath InterpPath::constant(double rbar, double ebar, double eps1, double eps2) {
  InterpPath p;
  p.eps1 = eps1;
  p.eps2 = eps2;
  p.knots_r = {0.0, 1.0};
  p.values_r = {rbar, rbar};
  p.knots_E = {0.0, 1.0};
  p.values_E = {ebar, ebar};
  p.validate();
  return p;
}

InterpPath InterpPath::from_file(const std::string& path, double eps1, double eps2) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("interp path: cannot open " + path);
  InterpPath p;
  p.eps1 = eps1;
  p.eps2 = eps2;
  std::string line;
  int section = 0;  // 0 none, 1 r, 2 E
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (first == "[r]") {
      section = 1;
      continue;
    }
    if (first == "[E]") {
      section = 2;
      continue;
    }
    double t = 0.0, v = 0.0;
    try {
      t = std::stod(first);
    } catch (const std::exception&) {
      throw std::invalid_argument("interp path: line " + std::to_string(lineno) +
                                  ": expected a number or section header");
    }
    if (!(ss >> v))
      throw std::invalid_argument("interp path: line " + std::to_string(lineno) +
                                  ": expected 't value'");
    if (section == 1) {
      p.knots_r.push_back(t);
      p.values_r.push_back(v);
    } else if (section == 2) {
      p.knots_E.push_back(t);
      p.values_E.push_back(v);
    } else {
      throw std::invalid_argument("interp path: line " + std::to_string(lineno) +
                                  ": data before any [r]/[E] section");
    }
  }
  p.validate();
  return p;
}

double InterpPath::r_at(double t) const { return pw_value(knots_r, values_r, t); }
double InterpPath::E_at(double t) const { return pw_value(knots_E, values_E, t); }
double InterpPath::R1(double t) const { return eps1 + pw_integral(knots_r, values_r, t); }
double InterpPath::R2(double t) const { return eps2 + pw_integral(knots_E, values_E, t); }

void InterpPath::validate() const {
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0))
    throw std::invalid_argument("interp path: eps must be >= 0");
  validate_table(knots_r, values_r, "r");
  validate_table(knots_E, values_E, "E");
}

InterpInstance make_interp_instance(const Prior& prior, const Ensemble& ens,
                                    const InterpPath& path, double t, int n, int m,
                                    std::uint64_t seed) {
  path.validate();
  check_path_against_prior(path, prior);
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("make_interp_instance: t must lie in [0, 1]");
  const Quenched qd = draw_quenched(prior, ens, n, m, seed);
  InterpInstance inst;
  inst.base = qd.base;
  inst.v = qd.v;
  inst.z_tilde = qd.z_tilde;
  inst.t = t;
  const double c1 = std::sqrt((1.0 - t) / n);
  const double c2 = std::sqrt(path.R2(t) / n);
  inst.y_t = c1 * qd.phi_x + c2 * qd.phi_prime_v + qd.base.z;
  inst.y_tilde_t = std::sqrt(path.R1(t)) * qd.base.x + qd.z_tilde;
  return inst;
}

double hamiltonian(const InterpInstance& inst, const InterpPath& path,
                   const Eigen::VectorXd& x_cand, const Eigen::VectorXd& v_cand) {
  const int n = inst.base.n;
  if (x_cand.size() != n || v_cand.size() != inst.base.m)
    throw std::invalid_argument("hamiltonian: candidate shape mismatch");
  const double c1 = std::sqrt((1.0 - inst.t) / n);
  const double c2 = std::sqrt(path.R2(inst.t) / n);
  const double sq1 =
      (inst.y_t - c1 * (inst.base.phi * x_cand) - c2 * (inst.base.phi_prime * v_cand))
          .squaredNorm();
  const double sq2 =
      (inst.y_tilde_t - std::sqrt(path.R1(inst.t)) * x_cand).squaredNorm();
  return 0.5 * sq1 + 0.5 * sq2;
}

MiEstimate interp_mi(const Prior& prior, const Ensemble& ens, const InterpPath& path,
                     double t, int n, int m, int trials, std::uint64_t seed,
                     int threads) {
  path.validate();
  check_path_against_prior(path, prior);
  if (!prior.is_atomic() || !enumerable(prior, n))
    throw std::invalid_argument("interp_mi: prior not exactly enumerable at this n");
  if (trials < 1) throw std::invalid_argument("interp_mi: trials must be >= 1");
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("interp_mi: t must lie in [0, 1]");

  const std::vector<double> log_w = atom_log_weights(prior);
  std::vector<double> per_trial(trials);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Quenched qd =
        draw_quenched(prior, ens, n, m, derive_seed(seed, stream::kTrial, k));
    per_trial[k] = -log_partition(qd, prior, log_w, path, t) / n;
  });

  MiEstimate est;
  est.trials = trials;
  est.value = mean(per_trial) - 0.5 * (ens.alpha() + 1.0);
  est.std_err = std_error(per_trial);
  return est;
}

BoundaryReport boundary_check(const Prior& prior, const Ensemble& ens,
                              const InterpPath& path, int n, int m, int trials,
                              std::uint64_t seed, const Spectrum& spec_T_ref,
                              int threads) {
  path.validate();
  check_path_against_prior(path, prior);
  if (trials < 2) throw std::invalid_argument("boundary_check: trials must be >= 2");
  const bool with_identity = prior.is_atomic() && enumerable(prior, n);
  const double r1_end = path.R1(1.0);
  const double r2_end = path.R2(1.0);
  const QuadratureRule quad = QuadratureRule::gauss_hermite(61);
  const double scalar_side = mutual_info(prior, r1_end, quad);
  const std::vector<double> log_w =
      with_identity ? atom_log_weights(prior) : std::vector<double>{};

  std::vector<double> lhs(trials, 0.0), logdet_side(trials, 0.0), gap(trials, 0.0);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Quenched qd =
        draw_quenched(prior, ens, n, m, derive_seed(seed, stream::kTrial, k));
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(m, m);
    c.noalias() += (r2_end / n) * (qd.base.phi_prime * qd.base.phi_prime.transpose());
    const Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
      throw numerical_failure("boundary_check: Cholesky failed");
    double logdet = 0.0;
    for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    logdet_side[k] = logdet / (2.0 * n);
    if (with_identity) {
      lhs[k] = -log_partition(qd, prior, log_w, path, 1.0) / n -
               0.5 * (ens.alpha() + 1.0);
      gap[k] = lhs[k] - (scalar_side + logdet_side[k]);
    }
  });

  BoundaryReport rep;
  rep.trials = trials;
  rep.identity_computed = with_identity;
  const double det_mean = mean(logdet_side);
  rep.spectrum_gap = std::abs(det_mean - 0.5 * shannon_g(spec_T_ref, r2_end));
  rep.spectrum_gap_se = std_error(logdet_side);
  if (with_identity) {
    rep.lhs = mean(lhs);
    rep.rhs = scalar_side + det_mean;
    rep.gap = mean(gap);
    rep.gap_se = std_error(gap);
    rep.z_score = (rep.gap_se > 0.0) ? std::abs(rep.gap) / rep.gap_se : 0.0;
  }
  return rep;
}

DerivativeReport derivative_check(const Prior& prior, const Ensemble& ens,
                                  const InterpPath& path, double t0, double h, int n,
                                  int m, int trials, std::uint64_t seed, int threads) {
  path.validate();
  check_path_against_prior(path, prior);
  if (!prior.is_atomic() || !enumerable(prior, n))
    throw std::invalid_argument("derivative_check: prior not exactly enumerable");
  if (!(t0 > 0.1 && t0 < 0.9))
    throw std::invalid_argument("derivative_check: t0 must be interior (0.1, 0.9)");
  if (!(h > 0.0) || t0 - h <= 0.0 || t0 + h >= 1.0)
    throw std::invalid_argument("derivative_check: bad finite-difference step");
  if (trials < 2) throw std::invalid_argument("derivative_check: trials must be >= 2");

  const std::vector<double> log_w = atom_log_weights(prior);
  const double rho = prior.rho;
  const double rbar = path.r_at(t0);
  const double ebar = path.E_at(t0);

  std::vector<double> d_coarse(trials), d_fine(trials), rich(trials), rhs_ex(trials),
      rhs_lm(trials), gapv(trials), t_scalar(trials), t_matrix(trials);
  parallel_for(trials, threads, [&](std::size_t k) {
    const Quenched qd =
        draw_quenched(prior, ens, n, m, derive_seed(seed, stream::kTrial, k));
    auto f = [&](double t) { return -log_partition(qd, prior, log_w, path, t) / n; };
    const double d1 = (f(t0 + h) - f(t0 - h)) / (2.0 * h);
    const double d2 = (f(t0 + 0.5 * h) - f(t0 - 0.5 * h)) / h;
    d_coarse[k] = d1;
    d_fine[k] = d2;
    rich[k] = (4.0 * d2 - d1) / 3.0;

    // posterior expectations at t0: <Q>, <u>, <u Q>; the conditional mean of
    // u given x collapses to C^{-1} residual (push-through identity)
    const VMarginal vm = assemble(qd, path, t0);
    const Eigen::MatrixXd scaled = vm.coefs.c1 * qd.base.phi;
    double lw_max = -std::numeric_limits<double>::infinity();
    detail::enumerate_configs(prior.atoms, log_w, n, scaled, vm.y_t,
                              qd.base.x.data(), vm.y_tilde.data(), vm.coefs.sqrt_r1,
                              [&](const detail::LeafState& leaf) {
                                const double quad =
                                    leaf.residual.dot(vm.llt.solve(leaf.residual));
                                lw_max = std::max(lw_max, leaf.log_prior -
                                                              0.5 * leaf.tilde_sq -
                                                              0.5 * quad);
                              });
    if (!std::isfinite(lw_max))
      throw numerical_failure("derivative_check: posterior underflowed");
    double s0 = 0.0, sq = 0.0;
    Eigen::VectorXd su = Eigen::VectorXd::Zero(m), suq = Eigen::VectorXd::Zero(m);
    detail::enumerate_configs(
        prior.atoms, log_w, n, scaled, vm.y_t, qd.base.x.data(), vm.y_tilde.data(),
        vm.coefs.sqrt_r1, [&](const detail::LeafState& leaf) {
          const Eigen::VectorXd u_mean = vm.llt.solve(leaf.residual);
          const double quad = leaf.residual.dot(u_mean);
          const double w =
              std::exp(leaf.log_prior - 0.5 * leaf.tilde_sq - 0.5 * quad - lw_max);
          const double q = leaf.dot_truth / n;
          s0 += w;
          sq += w * q;
          su.noalias() += w * u_mean;
          suq.noalias() += (w * q) * u_mean;
        });
    const double q_mean = sq / s0;
    const Eigen::VectorXd u_mean = su / s0;
    const Eigen::VectorXd uq_mean = suq / s0;
    const double rho_hat = qd.base.x.squaredNorm() / n;
    const Eigen::VectorXd zrow =
        qd.base.phi_prime * (qd.base.phi_prime.transpose() * qd.base.z);

    t_scalar[k] = 0.5 * rbar * (rho - q_mean);
    const double coef = 0.5 / (static_cast<double>(n) * n);
    t_matrix[k] = coef * zrow.dot((ebar - rho_hat) * u_mean + uq_mean);
    const double t_matrix_lemma = coef * zrow.dot((ebar - rho) * u_mean + uq_mean);
    rhs_ex[k] = t_scalar[k] + t_matrix[k];
    rhs_lm[k] = t_scalar[k] + t_matrix_lemma;
    gapv[k] = rich[k] - rhs_ex[k];
  });

  DerivativeReport rep;
  rep.trials = trials;
  rep.derivative = mean(rich);
  rep.rhs_exact = mean(rhs_ex);
  rep.rhs_lemma = mean(rhs_lm);
  rep.gap = mean(gapv);
  rep.gap_se = std_error(gapv);
  rep.z_score = (rep.gap_se > 0.0) ? std::abs(rep.gap) / rep.gap_se : 0.0;
  rep.bias_bound = std::abs(mean(d_fine) - mean(d_coarse)) / 3.0;
  rep.term_scalar = mean(t_scalar);
  rep.term_matrix = mean(t_matrix);
  rep.remainder = rep.rhs_exact - rep.rhs_lemma;
  rep.conclusive =
      3.0 * rep.gap_se + rep.bias_bound <= std::max(0.5 * std::abs(rep.rhs_exact), 1e-2);
  return rep;
}

}  // namespace rlest
