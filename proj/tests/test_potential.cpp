#include <doctest.h>

#include <cmath>

#include "rlest/common.hpp"
#include "rlest/potential.hpp"

using namespace rlest;

namespace {

constexpr double kGolden = 0.6180339887498949;  // root of E^2 + E - 1

const QuadratureRule& q61() {
  static const QuadratureRule q = QuadratureRule::gauss_hermite(61);
  return q;
}

// the frozen bistable configuration: sparse spike-slab against the unit-mass
// spectrum develops two stable state-evolution branches
const Prior& bistable_prior() {
  static const Prior p = Prior::gauss_bernoulli(1.0, 0.05);
  return p;
}
constexpr double kBistableLambda = 512.0;
const Spectrum& bistable_spec() {
  static const Spectrum s = Spectrum::delta(1.0, 0.1);
  return s;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("i_rs special slices") {
  const Prior rad = Prior::rademacher();
  const Spectrum spec = Spectrum::delta(1.0, 0.5);
  // E = rho, r = 0: only the integrated transform survives
  CHECK(i_rs(rad, q61(), spec, {1.0, 0.0, 2.0}) ==
        doctest::Approx(0.5 * shannon_g(spec, 2.0)).epsilon(1e-14));
  // lambda = 0: I(r) - rE/2
  const double i1 = mutual_info(rad, 0.8, q61());
  CHECK(i_rs(rad, q61(), spec, {0.4, 0.8, 0.0}) ==
        doctest::Approx(i1 - 0.5 * 0.8 * 0.4).epsilon(1e-14));
  // the golden-ratio saddle of the unit gaussian problem
  const Prior gauss = Prior::gaussian(1.0);
  const double expect =
      0.5 * std::log1p(kGolden) + 0.5 * std::log1p(kGolden) - 0.5 * kGolden * kGolden;
  CHECK(i_rs(gauss, q61(), Spectrum::delta(1.0, 1.0), {kGolden, kGolden, 1.0}) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("se_step basics") {
  const Prior gauss = Prior::gaussian(1.0);
  const Spectrum spec = Spectrum::delta(1.0, 1.0);
  const SeStep zero = se_step(gauss, q61(), spec, 0.3, 0.0);
  CHECK(zero.r == 0.0);
  CHECK(zero.E_next == doctest::Approx(1.0));

  const SeStep golden = se_step(gauss, q61(), spec, kGolden, 1.0);
  CHECK(golden.r == doctest::Approx(kGolden).epsilon(1e-12));
  CHECK(golden.E_next == doctest::Approx(kGolden).epsilon(1e-12));

  // strong snr drives the iteration toward exact recovery
  const SeStep strong = se_step(Prior::rademacher(), q61(), spec, 0.0, 400.0);
  CHECK(strong.E_next < 1e-8);
}

TEST_CASE("se_step reduces to the iid kernel for the unit-mass spectrum") {
  const Prior rad = Prior::rademacher();
  for (double alpha : {0.5, 1.0, 2.0})
    for (double lambda : {0.3, 1.0, 4.0})
      for (double E : {0.0, 0.25, 0.9}) {
        const SeStep s = se_step(rad, q61(), Spectrum::delta(1.0, alpha), E, lambda);
        CHECK(s.r == doctest::Approx(alpha * lambda / (1.0 + lambda * E)).epsilon(1e-15));
      }
}

TEST_CASE("fixed_points finds the golden point and the trivial point") {
  const Prior gauss = Prior::gaussian(1.0);
  const Spectrum spec = Spectrum::delta(1.0, 1.0);
  const auto fps = fixed_points(gauss, q61(), spec, 1.0);
  int converged = 0;
  for (const auto& fp : fps) {
    if (!fp.converged) continue;
    ++converged;
    CHECK(fp.E == doctest::Approx(kGolden).epsilon(1e-9));
    CHECK(fp.r == doctest::Approx(kGolden).epsilon(1e-9));
  }
  CHECK(converged == 1);

  const auto zero = fixed_points(gauss, q61(), spec, 0.0);
  CHECK(zero.size() == 1);
  CHECK(zero[0].E == doctest::Approx(1.0));
  CHECK(zero[0].r == 0.0);
}

TEST_CASE("bistable window: two branches, confirmed by potential stationarity") {
  // sign changes of the state-evolution residual along a dense E grid are
  // the stationary points of E -> i_rs(E, lambda R(-lambda E))
  int flips = 0;
  double prev = 0.0;
  bool first = true;
  for (int i = 1; i <= 1200; ++i) {
    const double E = i / 1200.0;
    const double s =
        se_step(bistable_prior(), q61(), bistable_spec(), E, kBistableLambda).E_next - E;
    if (!first && s * prev < 0.0) ++flips;
    if (s != 0.0) {
      prev = s;
      first = false;
    }
  }
  CHECK(flips >= 3);

  FixedPointOptions opts;
  opts.inits = {1e-6, 1.0};
  const auto fps =
      fixed_points(bistable_prior(), q61(), bistable_spec(), kBistableLambda, opts);
  int converged = 0;
  for (const auto& fp : fps)
    if (fp.converged) ++converged;
  REQUIRE(converged >= 2);
  CHECK(std::abs(fps[0].E - fps[1].E) > 1e-3);
}

TEST_CASE("every converged fixed point satisfies the stationarity equations") {
  struct Case {
    Prior prior;
    Spectrum spec;
    double lambda;
    FixedPointOptions opts;
  };
  std::vector<Case> cases;
  cases.push_back({Prior::gaussian(1.0), Spectrum::delta(1.0, 1.0), 1.0, {}});
  cases.push_back({Prior::rademacher(), Spectrum::delta(1.0, 0.5), 2.0, {}});
  FixedPointOptions bi;
  bi.inits = {1e-6, 1.0};
  cases.push_back({bistable_prior(), bistable_spec(), kBistableLambda, bi});
  for (const auto& c : cases) {
    for (const auto& fp : fixed_points(c.prior, q61(), c.spec, c.lambda, c.opts)) {
      if (!fp.converged) continue;
      CHECK(std::abs(fp.r - c.lambda * r_transform(c.spec, c.lambda * fp.E)) < 1e-9);
      CHECK(std::abs(fp.E - mmse(c.prior, fp.r, q61())) < 1e-9);
      // finite-difference gradients of the potential vanish; the E step
      // shrinks with lambda because the curvature in E scales like lambda^2
      const double hE = 1e-5 / (1.0 + c.lambda / 10.0), hr = 1e-5;
      const double dE = (i_rs(c.prior, q61(), c.spec, {fp.E + hE, fp.r, c.lambda}) -
                         i_rs(c.prior, q61(), c.spec, {fp.E - hE, fp.r, c.lambda})) /
                        (2 * hE);
      const double dr = (i_rs(c.prior, q61(), c.spec, {fp.E, fp.r + hr, c.lambda}) -
                         i_rs(c.prior, q61(), c.spec, {fp.E, fp.r - hr, c.lambda})) /
                        (2 * hr);
      CHECK(std::abs(dE) < 1e-5);
      CHECK(std::abs(dr) < 1e-5);
    }
  }
}

TEST_CASE("non-convergence is reported, not thrown") {
  FixedPointOptions opts;
  opts.max_iter = 2;
  opts.inits = {0.5};
  const auto fps = fixed_points(Prior::gaussian(1.0), q61(), Spectrum::delta(1.0, 1.0),
                                1.0, opts);
  REQUIRE(fps.size() == 1);
  CHECK_FALSE(fps[0].converged);
  CHECK(fps[0].iterations == 2);
  CHECK(std::isfinite(fps[0].E));
}

TEST_CASE("extremize on the golden configuration, all formulations") {
  const Prior gauss = Prior::gaussian(1.0);
  const Spectrum spec = Spectrum::delta(1.0, 1.0);
  const double expect_value =
      0.5 * std::log1p(kGolden) + 0.5 * std::log1p(kGolden) - 0.5 * kGolden * kGolden;
  for (Formulation f : {Formulation::kInfSup, Formulation::kInfESupR,
                        Formulation::kInfOverGamma}) {
    const PotentialResult r = extremize(gauss, q61(), spec, 1.0, f);
    CHECK(r.value == doctest::Approx(expect_value).epsilon(1e-10));
    CHECK(r.E_star == doctest::Approx(kGolden).epsilon(1e-9));
    CHECK(r.r_star == doctest::Approx(kGolden).epsilon(1e-9));
    CHECK_FALSE(r.boundary);
    CHECK(mmse_prediction(r) == r.E_star);
  }
}

TEST_CASE("extremize at lambda = 0 returns the no-information point") {
  const PotentialResult r = extremize(Prior::gaussian(1.0), q61(),
                                      Spectrum::delta(1.0, 1.0), 0.0);
  CHECK(r.value == 0.0);
  CHECK(r.E_star == doctest::Approx(1.0));
  CHECK(r.r_star == 0.0);
  CHECK(mmse_prediction(r) == doctest::Approx(1.0));
}

TEST_CASE("extremize against the sampled-spectrum gaussian log-det limit") {
  const int size = 1000;
  const Ensemble ens = Ensemble::gaussian_product(size, size, 1);
  const Spectrum spec_T = esd_T(sample_phi_prime(ens, 42), size);
  const Spectrum spec_R = esd_R(sample_phi(ens, 42), size);
  const Prior gauss = Prior::gaussian(1.0);
  const PotentialResult rs = extremize(gauss, q61(), spec_T, 1.0, Formulation::kInfSup);
  double logdet = 0.0;
  for (std::size_t i = 0; i < spec_R.eigenvalues.size(); ++i)
    logdet += spec_R.weights[i] * std::log1p(spec_R.eigenvalues[i]);
  CHECK(std::abs(rs.value - 0.5 * logdet) < 1e-2);
}

TEST_CASE("formulation equivalence") {
  struct Case {
    Prior prior;
    Spectrum spec;
    double lambda;
    double tol;
  };
  const int size = 600;
  const Ensemble ens = Ensemble::gaussian_product(size, size, 1);
  std::vector<Case> cases;
  cases.push_back({Prior::gaussian(1.0), Spectrum::delta(1.0, 1.0), 1.0, 1e-6});
  cases.push_back({Prior::rademacher(), Spectrum::delta(1.0, 0.5), 2.0, 1e-6});
  cases.push_back({bistable_prior(), bistable_spec(), kBistableLambda, 1e-6});
  cases.push_back({Prior::gaussian(1.0), esd_T(sample_phi_prime(ens, 2), size), 1.0, 1e-3});
  for (const auto& c : cases) {
    const double v1 = extremize(c.prior, q61(), c.spec, c.lambda,
                                Formulation::kInfSup).value;
    const double v2 = extremize(c.prior, q61(), c.spec, c.lambda,
                                Formulation::kInfESupR).value;
    const double v3 = extremize(c.prior, q61(), c.spec, c.lambda,
                                Formulation::kInfOverGamma).value;
    CHECK(std::abs(v1 - v2) < c.tol);
    CHECK(std::abs(v1 - v3) < c.tol);
  }
}

TEST_CASE("monotone sweeps in lambda") {
  const Prior rad = Prior::rademacher();
  const Spectrum spec = Spectrum::delta(1.0, 0.5);
  double prev_value = -1.0, prev_e = 2.0;
  for (double lambda : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const PotentialResult r = extremize(rad, q61(), spec, lambda, Formulation::kInfSup);
    CHECK(r.value >= prev_value - 1e-10);
    CHECK(r.E_star <= prev_e + 1e-10);
    prev_value = r.value;
    prev_e = r.E_star;
  }
  // mmse prediction decays to zero for an atomic prior at strong snr
  const PotentialResult strong = extremize(rad, q61(), spec, 64.0, Formulation::kInfSup);
  CHECK(mmse_prediction(strong) < 1e-3);
}

TEST_CASE("error paths") {
  const Spectrum spec = Spectrum::delta(1.0, 1.0);
  CHECK_THROWS_AS(se_step(Prior::gaussian(1.0), q61(), spec, -0.1, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(se_step(Prior::gaussian(1.0), q61(), spec, 1.5, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(i_rs(Prior::gaussian(1.0), q61(), spec, {0.5, -1.0, 1.0}),
                  std::invalid_argument);
  FixedPointOptions opts;
  opts.max_iter = 1;
  CHECK_THROWS_AS(extremize(Prior::gaussian(1.0), q61(), spec, 1.0,
                            Formulation::kInfOverGamma, opts),
                  numerical_failure);
  CHECK_THROWS_AS(formulation_from_string("nonsense"), std::invalid_argument);
}

}  // TEST_SUITE
