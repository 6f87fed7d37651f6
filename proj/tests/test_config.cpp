#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rlest/common.hpp"
#include "rlest/config.hpp"
#include "rlest/rng.hpp"
#include "rlest/runner.hpp"

using namespace rlest;

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string body_of(const std::string& content) {
  std::istringstream in(content);
  std::string line, body;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') body += line + "\n";
  return body;
}

// randomized-but-valid config generator for the round-trip property
RunConfig random_config(RngStream& rng) {
  RunConfig c;
  const char* commands[] = {"replica", "spectrum", "oracle", "interp", "selftest"};
  c.command = commands[rng.next_u64() % 5];
  const char* priors[] = {"gaussian", "rademacher", "gauss_bernoulli", "discrete"};
  c.prior_kind = priors[rng.next_u64() % 4];
  c.prior_rho = 0.5 + rng.uniform();
  c.prior_sparsity = 0.05 + 0.9 * rng.uniform();
  if (c.prior_kind == "discrete") {
    c.prior_atoms = {-1.0 + rng.uniform(), 2.0 * rng.uniform() + 1.5};
    const double w = 0.2 + 0.6 * rng.uniform();
    c.prior_weights = {w, 1.0 - w};
  }
  const char* kinds[] = {"identity_scaled", "gaussian_product"};
  c.ensemble_kind = kinds[rng.next_u64() % 2];
  c.ensemble_factors = 1 + int(rng.next_u64() % 3);
  c.ensemble_entries = (rng.next_u64() % 2) ? "gaussian" : "bounded";
  c.n = 2 + int(rng.next_u64() % 12);
  c.m = 1 + int(rng.next_u64() % 8);
  c.lambda_grid.clear();
  double lam = 0.0;
  for (int i = 0, k = 1 + int(rng.next_u64() % 4); i < k; ++i) {
    lam += rng.uniform();
    c.lambda_grid.push_back(lam);
  }
  c.trials = 1 + int(rng.next_u64() % 500);
  c.master_seed = rng.next_u64();
  c.threads = 1 + int(rng.next_u64() % 8);
  c.quad_order = 11 + int(rng.next_u64() % 100);
  const char* forms[] = {"inf_sup", "sup_inf_over_E", "inf_over_gamma"};
  c.formulation = forms[rng.next_u64() % 3];
  c.damping = 0.1 + 0.9 * rng.uniform();
  c.fp_tol = std::pow(10.0, -6.0 - 6.0 * rng.uniform());
  c.max_iter = 100 + int(rng.next_u64() % 10000);
  c.spectrum_size = 50 + int(rng.next_u64() % 1000);
  c.spectrum_averages = 1 + int(rng.next_u64() % 4);
  c.spectrum_u_max = 1.0 + 5.0 * rng.uniform();
  c.interp_t = rng.uniform();
  c.interp_eps1 = 0.2 * rng.uniform();
  c.interp_eps2 = 0.2 * rng.uniform();
  c.interp_rbar = rng.uniform();
  c.interp_ebar = 0.4 * rng.uniform();
  const char* checks[] = {"none", "boundary", "derivative"};
  c.interp_check = checks[rng.next_u64() % 3];
  c.interp_fd_step = 1e-4 + 1e-3 * rng.uniform();
  if (rng.next_u64() % 2) c.output_path = "out_" + std::to_string(rng.next_u64() % 100);
  if (rng.next_u64() % 2) c.tolerances["spread"] = 1e-6 + rng.uniform();
  if (rng.next_u64() % 3 == 0) c.tolerances["z_max"] = 4.0;
  return c;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config gets defaults") {
  const RunConfig c = parse_config("command = replica\n");
  CHECK(c.command == "replica");
  CHECK(c.prior_kind == "gaussian");
  CHECK(c.trials == 200);
  CHECK(c.quad_order == 61);
  CHECK(c.master_seed == 1);
  CHECK(c.lambda_grid == std::vector<double>{1.0});
}

TEST_CASE("comments, whitespace, lists and tolerances parse") {
  const RunConfig c = parse_config(
      "# experiment\ncommand = oracle   # inline comment\n"
      "prior.kind = discrete\nprior.atoms = [0, 3]\n"
      "prior.weights = [0.6666666666666666, 0.3333333333333334]\n"
      "lambda_grid = [0.5, 1, 2]\n tol.z_max = 4 \n");
  CHECK(c.prior_atoms == std::vector<double>{0.0, 3.0});
  CHECK(c.lambda_grid.size() == 3);
  CHECK(c.tolerances.at("z_max") == 4.0);
}

TEST_CASE("rejections carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_config("command = replica\nlambda_grid = [2, 1]\n"),
                       doctest::Contains("sorted ascending"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("command = replica\n\nwhatever = 3\n"),
                       doctest::Contains("line 3"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("command = replica\nn = abc\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("prior.rho = 1\n"), std::invalid_argument);  // no command
  CHECK_THROWS_AS(parse_config("command = replica\ntol.spread = -1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config("command = replica\ndamping = 1.5\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config("command = fly\n"), std::invalid_argument);
}

TEST_CASE("round trip: parse(serialize(c)) == c on randomized configs") {
  RngStream rng(2024, 1, 0);
  for (int rep = 0; rep < 60; ++rep) {
    const RunConfig c = random_config(rng);
    const RunConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(parse_config(serialize_config(back)) == back);
  }
}

TEST_CASE("builders produce the described domain objects") {
  RunConfig c = parse_config(
      "command = replica\nprior.kind = gauss_bernoulli\nprior.rho = 2\n"
      "prior.sparsity = 0.25\nensemble.kind = gaussian_product\n"
      "ensemble.factors = 2\nensemble.entries = bounded\nn = 10\nm = 5\n");
  const Prior p = prior_from_config(c);
  CHECK(p.kind == PriorKind::kGaussBernoulli);
  CHECK(p.rho == 2.0);
  const Ensemble e = ensemble_from_config(c);
  CHECK(e.kind == EnsembleKind::kGaussianProduct);
  CHECK(e.factors == 2);
  CHECK(e.entries == FactorEntries::kBounded);
  CHECK(e.alpha() == doctest::Approx(0.5));

  c.ensemble_kind = "identity_scaled";
  const Spectrum s = spectrum_from_config(c);
  CHECK(s.source == SpectrumSource::kAnalyticDelta);
  CHECK(s.alpha == doctest::Approx(0.5));
}

TEST_CASE("replica run at lambda 0 emits the no-information row") {
  const RunConfig c = parse_config(
      "command = replica\nprior.kind = gaussian\nprior.rho = 1\n"
      "ensemble.kind = identity_scaled\nn = 8\nm = 8\nlambda_grid = [0]\n");
  const RunOutcome out = run_config(c);
  REQUIRE(out.artifacts.size() == 1);
  const auto rows = csv_rows(out.artifacts[0].content);
  REQUIRE(rows.size() == 2);  // header + one row
  CHECK(rows[0][0] == "lambda");
  CHECK(std::stod(rows[1][3]) == 0.0);    // value
  CHECK(std::stod(rows[1][1]) == 1.0);    // E_star = rho
}

TEST_CASE("identical configs give byte-identical artifacts") {
  const std::string text =
      "command = oracle\nprior.kind = rademacher\nensemble.kind = identity_scaled\n"
      "n = 8\nm = 4\nlambda_grid = [0.5, 1]\ntrials = 40\nmaster_seed = 5\n";
  const RunOutcome a = run_config(parse_config(text));
  const RunOutcome b = run_config(parse_config(text));
  REQUIRE(a.artifacts.size() == b.artifacts.size());
  CHECK(a.artifacts[0].content == b.artifacts[0].content);

  // thread count changes scheduling only, never the body
  RunConfig threaded = parse_config(text);
  threaded.threads = 8;
  const RunOutcome c = run_config(threaded);
  CHECK(body_of(c.artifacts[0].content) == body_of(a.artifacts[0].content));
}

TEST_CASE("csv artifacts are schema-parseable numbers") {
  const RunConfig c = parse_config(
      "command = replica\nprior.kind = rademacher\nensemble.kind = identity_scaled\n"
      "n = 8\nm = 4\nlambda_grid = [0.25, 0.5, 1]\n");
  const RunOutcome out = run_config(c);
  const auto rows = csv_rows(out.artifacts[0].content);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].size() == 7);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == rows[0].size());
    for (const auto& cell : rows[i]) {
      std::size_t pos = 0;
      const double v = std::stod(cell, &pos);
      CHECK(pos == cell.size());
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("spectrum command writes the atom and transform artifacts") {
  const RunConfig c = parse_config(
      "command = spectrum\nensemble.kind = gaussian_product\nensemble.factors = 1\n"
      "n = 64\nm = 64\nspectrum_size = 64\noutput_path = spec_artifact.csv\n");
  const RunOutcome out = run_config(c);
  REQUIRE(out.artifacts.size() == 2);
  CHECK(out.artifacts[0].path == "spec_artifact.csv");
  CHECK(out.artifacts[1].path == "spec_artifact_transform.csv");
  const auto atoms = csv_rows(out.artifacts[0].content);
  CHECK(atoms.size() == 64 + 1);
  const auto transforms = csv_rows(out.artifacts[1].content);
  REQUIRE(transforms.size() == 101 + 1);
  // G accumulates the transform: both columns nonnegative, G nondecreasing
  double prev_g = -1.0;
  for (std::size_t i = 1; i < transforms.size(); ++i) {
    CHECK(std::stod(transforms[i][1]) >= 0.0);
    const double g = std::stod(transforms[i][2]);
    CHECK(g >= prev_g);
    prev_g = g;
  }
}

TEST_CASE("interp dispatch honors the check selector") {
  const std::string base =
      "command = interp\nprior.kind = rademacher\nensemble.kind = identity_scaled\n"
      "n = 6\nm = 3\ntrials = 30\nmaster_seed = 3\n";
  const RunOutcome none = run_config(parse_config(base + "interp.check = none\n"));
  CHECK(csv_rows(none.artifacts[0].content)[0][0] == "t");
  const RunOutcome boundary =
      run_config(parse_config(base + "interp.check = boundary\n"));
  CHECK(csv_rows(boundary.artifacts[0].content)[0][0] == "lhs");
  const RunOutcome deriv = run_config(parse_config(base + "interp.check = derivative\n"));
  CHECK(csv_rows(deriv.artifacts[0].content)[0][1] == "derivative");
}

}  // TEST_SUITE
