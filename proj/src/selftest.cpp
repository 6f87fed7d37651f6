#include "rlest/selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "rlest/common.hpp"
#include "rlest/config.hpp"
#include "rlest/gibbs.hpp"
#include "rlest/interp.hpp"
#include "rlest/potential.hpp"
#include "rlest/prior.hpp"
#include "rlest/rng.hpp"
#include "rlest/runner.hpp"
#include "rlest/spectra.hpp"

namespace rlest {

namespace {

constexpr std::uint64_t kSeedBase = 20260801;
constexpr double kGoldenRatioConj = 0.61803398874989485;  // (sqrt(5)-1)/2

double empirical_log_moment(const Spectrum& spec, double scale) {
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i)
    acc += spec.weights[i] * std::log1p(scale * spec.eigenvalues[i]);
  return acc;
}

CriterionResult gaussian_prior_asymptotics(int threads) {
  (void)threads;
  CriterionResult res;
  res.id = 1;
  res.name = "gaussian_prior_log_det_agreement";
  res.threshold = 2e-2;
  const int n = 1000;
  const Prior prior = Prior::gaussian(1.0);
  const QuadratureRule quad = QuadratureRule::gauss_hermite(61);
  const Ensemble ens = Ensemble::identity_scaled(n, n);
  const Spectrum delta = Spectrum::delta(1.0, 1.0);
  const Spectrum spec_R = esd_R(sample_phi(ens, kSeedBase + 1), n);
  double worst = 0.0;
  std::ostringstream note;
  for (double lambda : {0.5, 1.0, 2.0}) {
    const PotentialResult rs =
        extremize(prior, quad, delta, lambda, Formulation::kInfSup);
    const double logdet_side = 0.5 * empirical_log_moment(spec_R, lambda * prior.rho);
    const double dev = std::abs(rs.value - logdet_side);
    worst = std::max(worst, dev);
    note << "lambda=" << lambda << " |replica-logdet|=" << dev << "  ";
  }
  res.observed = worst;
  res.pass = worst <= res.threshold;
  res.note = note.str();
  return res;
}

CriterionResult iid_fixed_point(int threads) {
  (void)threads;
  CriterionResult res;
  res.id = 2;
  res.name = "iid_reduction_golden_fixed_point";
  res.threshold = 1e-8;
  const Prior prior = Prior::gaussian(1.0);
  const QuadratureRule quad = QuadratureRule::gauss_hermite(61);
  const Spectrum delta = Spectrum::delta(1.0, 1.0);
  const Formulation forms[] = {Formulation::kInfSup, Formulation::kInfESupR,
                               Formulation::kInfOverGamma};
  double worst = 0.0;
  double values[3];
  for (int i = 0; i < 3; ++i) {
    const PotentialResult r = extremize(prior, quad, delta, 1.0, forms[i]);
    values[i] = r.value;
    worst = std::max(worst, std::abs(r.E_star - kGoldenRatioConj));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      worst = std::max(worst, std::abs(values[i] - values[j]));
  res.observed = worst;
  res.pass = worst <= res.threshold;
  res.note = "max deviation over {E*, pairwise value spread}";
  return res;
}

CriterionResult oracle_convergence(int threads) {
  CriterionResult res;
  res.id = 3;
  res.name = "finite_n_oracle_convergence";
  res.threshold = 0.05;
  const Prior prior = Prior::rademacher();
  const QuadratureRule quad = QuadratureRule::gauss_hermite(61);
  const double lambda = 1.0;
  const Spectrum delta = Spectrum::delta(1.0, 0.5);
  const double rs = extremize(prior, quad, delta, lambda, Formulation::kInfSup).value;

  const MiEstimate mi12 = exact_mi(prior, Ensemble::identity_scaled(6, 12), lambda, 12,
                                   6, 2000, kSeedBase + 3, threads);
  const MiEstimate mi6 = exact_mi(prior, Ensemble::identity_scaled(3, 6), lambda, 6, 3,
                                  2000, kSeedBase + 4, threads);
  const double gap12 = std::abs(mi12.value - rs);
  const double gap6 = std::abs(mi6.value - rs);
  const double pooled = std::sqrt(mi12.std_err * mi12.std_err + mi6.std_err * mi6.std_err);
  res.observed = gap12;
  res.pass = gap12 <= res.threshold && gap12 <= gap6 + 3.0 * pooled;
  std::ostringstream note;
  note << "i_12=" << mi12.value << " i_6=" << mi6.value << " replica=" << rs
       << " gap6=" << gap6 << " pooled_se=" << pooled;
  res.note = note.str();
  return res;
}

CriterionResult i_mmse_suite(int threads) {
  (void)threads;
  CriterionResult res;
  res.id = 4;
  res.name = "i_mmse_identity_all_priors";
  res.threshold = 1e-5;
  // order 201: the soft-max integrands of well-separated discrete atoms need
  // finer resolution than the order-61 default at r ~ 5
  const QuadratureRule quad = QuadratureRule::gauss_hermite(201);
  const std::vector<Prior> priors = {
      Prior::gaussian(1.0), Prior::rademacher(), Prior::gauss_bernoulli(1.0, 0.25),
      Prior::discrete({0.0, 3.0}, {2.0 / 3.0, 1.0 / 3.0})};
  const double grid[] = {0.1, 0.25, 0.5, 1.0, 2.0, 3.5, 5.0};
  double worst = 0.0;
  for (const Prior& prior : priors) {
    for (double r : grid) {
      const double h = 1e-3;
      // Richardson-refined central difference of I at r
      const double d1 =
          (mutual_info(prior, r + h, quad) - mutual_info(prior, r - h, quad)) / (2 * h);
      const double d2 = (mutual_info(prior, r + 0.5 * h, quad) -
                         mutual_info(prior, r - 0.5 * h, quad)) /
                        h;
      const double deriv = (4.0 * d2 - d1) / 3.0;
      worst = std::max(worst, std::abs(deriv - 0.5 * mmse(prior, r, quad)));
    }
  }
  res.observed = worst;
  res.pass = worst <= res.threshold;
  res.note = "max |I'(r) - mmse(r)/2| over priors x r-grid";
  return res;
}

CriterionResult mp_identity(int threads) {
  CriterionResult res;
  res.id = 5;
  res.name = "marcenko_pastur_identity";
  res.threshold = 0.05;
  constexpr int kReps = 3;  // realization-averaged: a single draw is seed noise
  const double zs[] = {-0.5, -1.0, -2.0};
  const int sizes[] = {1000, 2000};

  // task grid (K, size, rep) -> worst-over-z residual, filled in parallel
  struct Task {
    int k, size, rep;
  };
  std::vector<Task> tasks;
  for (int k = 1; k <= 2; ++k)
    for (int size : sizes)
      for (int rep = 0; rep < kReps; ++rep) tasks.push_back({k, size, rep});
  std::vector<double> worst(tasks.size(), 0.0);
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Ensemble ens = Ensemble::gaussian_product(t.size, t.size, t.k);
    const std::uint64_t seed = kSeedBase + 50 + 1000 * t.k + 10 * t.size + t.rep;
    const Spectrum spec_T = esd_T(sample_phi_prime(ens, seed), t.size);
    const Spectrum spec_R = esd_R(sample_phi(ens, seed), t.size);
    double w = 0.0;
    for (double z : zs) w = std::max(w, mp_identity_residual(spec_R, spec_T, z));
    worst[i] = w;
  });

  double worst_small = 0.0;
  bool shrink_ok = true;
  std::ostringstream note;
  for (int k = 1; k <= 2; ++k) {
    double avg[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].k != k) continue;
      const int si = tasks[i].size == sizes[0] ? 0 : 1;
      avg[si] += worst[i] / kReps;
      if (si == 0) worst_small = std::max(worst_small, worst[i]);
    }
    shrink_ok = shrink_ok && avg[1] < avg[0];
    note << "K=" << k << " avg_res(1000)=" << avg[0] << " avg_res(2000)=" << avg[1]
         << "  ";
  }
  res.observed = worst_small;
  res.pass = worst_small <= res.threshold && shrink_ok;
  res.note = note.str();
  return res;
}

CriterionResult r_transform_crosscheck(int threads) {
  (void)threads;
  CriterionResult res;
  res.id = 6;
  res.name = "r_transform_vs_stieltjes_inversion";
  res.threshold = 1e-2;
  const int size = 1000;
  const Ensemble ens = Ensemble::gaussian_product(size, size, 1);
  const std::uint64_t seed = kSeedBase + 6;
  const Spectrum spec_T = esd_T(sample_phi_prime(ens, seed), size);
  const Spectrum spec_R = esd_R(sample_phi(ens, seed), size);
  double worst = 0.0;
  for (double u : {0.3, 0.7, 1.5})
    worst = std::max(worst, std::abs(r_transform(spec_T, u) -
                                     r_transform_from_stieltjes(spec_R, u)));
  res.observed = worst;
  res.pass = worst <= res.threshold;
  res.note = "max over u in {0.3, 0.7, 1.5}";
  return res;
}

CriterionResult boundary_identity(int threads) {
  CriterionResult res;
  res.id = 7;
  res.name = "interpolation_t1_boundary_identity";
  res.threshold = 4.0;
  const Prior prior = Prior::rademacher();
  const Ensemble ens = Ensemble::identity_scaled(4, 8);
  const InterpPath path = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  const BoundaryReport rep = boundary_check(prior, ens, path, 8, 4, 5000,
                                            kSeedBase + 7, Spectrum::delta(1.0, 0.5),
                                            threads);
  res.observed = rep.z_score;
  res.pass = rep.identity_computed && rep.z_score <= res.threshold;
  std::ostringstream note;
  note << "lhs=" << rep.lhs << " rhs=" << rep.rhs << " gap=" << rep.gap
       << " se=" << rep.gap_se << " spectrum_gap=" << rep.spectrum_gap;
  res.note = note.str();
  return res;
}

CriterionResult derivative_identity(int threads) {
  CriterionResult res;
  res.id = 8;
  res.name = "t_derivative_identity_with_remainder";
  const Prior prior = Prior::rademacher();
  const Ensemble ens = Ensemble::gaussian_product(3, 6, 1);
  const InterpPath path = InterpPath::constant(0.5, 0.3, 0.1, 0.1);
  const DerivativeReport rep =
      derivative_check(prior, ens, path, 0.5, 1e-3, 6, 3, 10000, kSeedBase + 8, threads);
  res.observed = std::abs(rep.gap);
  res.threshold = 3.0 * rep.gap_se + rep.bias_bound;
  res.pass = res.observed <= res.threshold;
  std::ostringstream note;
  note << "fd=" << rep.derivative << " rhs=" << rep.rhs_exact << " se=" << rep.gap_se
       << " bias=" << rep.bias_bound << " z=" << rep.z_score
       << (rep.conclusive ? "" : " (inconclusive)");
  res.note = note.str();
  return res;
}

CriterionResult nishimori_grid(int threads) {
  CriterionResult res;
  res.id = 9;
  res.name = "nishimori_identity_grid";
  res.threshold = 4.0;
  const std::vector<Prior> priors = {
      Prior::rademacher(), Prior::discrete({0.0, 3.0}, {2.0 / 3.0, 1.0 / 3.0}),
      Prior::discrete({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25})};
  const std::vector<Ensemble> ensembles = {Ensemble::identity_scaled(4, 8),
                                           Ensemble::gaussian_product(4, 8, 1)};
  double worst = 0.0;
  std::uint64_t seed = kSeedBase + 900;
  for (const Prior& prior : priors)
    for (const Ensemble& ens : ensembles)
      for (double lambda : {0.5, 1.0, 2.0}) {
        const NishimoriReport rep =
            nishimori_residual(prior, prior, ens, lambda, 8, 4, 800, ++seed, threads);
        worst = std::max(worst, rep.z_score);
      }
  // negative control: a posterior biased away from the true prior
  const NishimoriReport control = nishimori_residual(
      Prior::rademacher(), Prior::discrete({-1.0, 1.0}, {0.15, 0.85}),
      Ensemble::identity_scaled(4, 8), 0.5, 8, 4, 800, kSeedBase + 999, threads);
  res.observed = worst;
  res.pass = worst <= res.threshold && control.z_score > 4.0;
  std::ostringstream note;
  note << "max matched z=" << worst << ", mismatched control z=" << control.z_score;
  res.note = note.str();
  return res;
}

CriterionResult overlap_concentration(int threads) {
  CriterionResult res;
  res.id = 10;
  res.name = "overlap_concentration_trend";
  res.threshold = 0.0;
  const Prior prior = Prior::rademacher();
  const double lambda = 1.0;
  double var[3];
  const int ns[3] = {6, 10, 14};
  for (int i = 0; i < 3; ++i) {
    const int n = ns[i];
    const int m = n / 2;
    const PosteriorStats st = posterior_stats(prior, Ensemble::identity_scaled(m, n),
                                              lambda, n, m, 1200, kSeedBase + 10,
                                              threads);
    var[i] = st.overlap_variance;
  }
  res.observed = std::max(var[1] - var[0], var[2] - var[1]);
  res.pass = var[1] < var[0] && var[2] < var[1];
  std::ostringstream note;
  note << "var(6)=" << var[0] << " var(10)=" << var[1] << " var(14)=" << var[2];
  res.note = note.str();
  return res;
}

std::string csv_body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, body;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') {
      body += line;
      body += '\n';
    }
  return body;
}

CriterionResult determinism(int threads) {
  (void)threads;
  CriterionResult res;
  res.id = 11;
  res.name = "seeded_determinism_across_threads";
  res.threshold = 1.0;

  std::vector<std::string> configs;
  configs.push_back(
      "command = replica\nprior.kind = gaussian\nprior.rho = 1\n"
      "ensemble.kind = identity_scaled\nn = 8\nm = 4\nlambda_grid = [0, 0.5, 1]\n"
      "master_seed = 7\ntrials = 16\n");
  configs.push_back(
      "command = oracle\nprior.kind = rademacher\nensemble.kind = identity_scaled\n"
      "n = 8\nm = 4\nlambda_grid = [0.5, 1]\ntrials = 64\nmaster_seed = 11\n");
  configs.push_back(
      "command = interp\nprior.kind = rademacher\nensemble.kind = gaussian_product\n"
      "ensemble.factors = 1\nn = 6\nm = 3\ntrials = 48\nmaster_seed = 13\n"
      "interp.check = derivative\ninterp.t = 0.5\n");
  configs.push_back(
      "command = spectrum\nensemble.kind = gaussian_product\nensemble.factors = 1\n"
      "n = 120\nm = 120\nspectrum_size = 120\nmaster_seed = 17\n");

  bool all_equal = true;
  for (const std::string& text : configs) {
    RunConfig base = parse_config(text);
    std::vector<std::string> bodies;
    for (int threads_case : {1, 8, 1}) {
      RunConfig c = base;
      c.threads = threads_case;
      const RunOutcome out = run_config(c);
      std::string joined;
      for (const auto& art : out.artifacts) joined += csv_body(art.content);
      bodies.push_back(joined);
    }
    all_equal = all_equal && bodies[0] == bodies[1] && bodies[0] == bodies[2];
  }
  res.observed = all_equal ? 1.0 : 0.0;
  res.pass = all_equal;
  res.note = "CSV bodies at 1 and 8 threads, repeated runs";
  return res;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(int threads) {
  using Runner = std::function<CriterionResult(int)>;
  const Runner runners[] = {
      gaussian_prior_asymptotics, iid_fixed_point, oracle_convergence, i_mmse_suite,
      mp_identity, r_transform_crosscheck, boundary_identity, derivative_identity,
      nishimori_grid, overlap_concentration, determinism};
  std::vector<CriterionResult> results;
  for (const Runner& runner : runners) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = runner(threads);
    } catch (const std::exception& e) {
      r.id = static_cast<int>(results.size()) + 1;
      r.name = "criterion_threw";
      r.pass = false;
      r.note = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace rlest
