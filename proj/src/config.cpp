#include "rlest/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "rlest/common.hpp"
#include "rlest/potential.hpp"
#include "rlest/rng.hpp"

namespace rlest {

namespace {

[[noreturn]] void fail(int lineno, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, int lineno) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) fail(lineno, "trailing characters after number '" + v + "'");
    return x;
  } catch (const std::invalid_argument&) {
    fail(lineno, "malformed number '" + v + "'");
  } catch (const std::out_of_range&) {
    fail(lineno, "number out of range '" + v + "'");
  }
}

long long parse_int(const std::string& v, int lineno) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) fail(lineno, "trailing characters after integer '" + v + "'");
    return x;
  } catch (const std::exception&) {
    fail(lineno, "malformed integer '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, int lineno) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) fail(lineno, "trailing characters after integer '" + v + "'");
    return x;
  } catch (const std::exception&) {
    fail(lineno, "malformed unsigned integer '" + v + "'");
  }
}

std::vector<double> parse_list(const std::string& v, int lineno) {
  const std::string t = trim(v);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    fail(lineno, "expected a bracketed list like [1, 2.5]");
  std::vector<double> out;
  std::string body = t.substr(1, t.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string it = trim(item);
    if (it.empty()) fail(lineno, "empty list element");
    out.push_back(parse_double(it, lineno));
  }
  return out;
}

std::string list_to_string(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_g17(v[i]);
  }
  return out + "]";
}

void validate(const RunConfig& c) {
  static const char* kCommands[] = {"replica", "spectrum", "oracle", "interp",
                                    "selftest"};
  if (std::find(std::begin(kCommands), std::end(kCommands), c.command) ==
      std::end(kCommands))
    throw std::invalid_argument("config: unknown command '" + c.command + "'");
  static const char* kPriors[] = {"gaussian", "rademacher", "gauss_bernoulli",
                                  "discrete"};
  if (std::find(std::begin(kPriors), std::end(kPriors), c.prior_kind) ==
      std::end(kPriors))
    throw std::invalid_argument("config: unknown prior.kind '" + c.prior_kind + "'");
  static const char* kEnsembles[] = {"identity_scaled", "gaussian_product",
                                     "external_spectrum"};
  if (std::find(std::begin(kEnsembles), std::end(kEnsembles), c.ensemble_kind) ==
      std::end(kEnsembles))
    throw std::invalid_argument("config: unknown ensemble.kind '" + c.ensemble_kind +
                                "'");
  if (c.ensemble_entries != "gaussian" && c.ensemble_entries != "bounded")
    throw std::invalid_argument("config: ensemble.entries must be gaussian|bounded");
  if (c.interp_check != "none" && c.interp_check != "boundary" &&
      c.interp_check != "derivative")
    throw std::invalid_argument("config: interp.check must be none|boundary|derivative");
  if (c.n < 1 || c.m < 1) throw std::invalid_argument("config: n, m must be >= 1");
  if (c.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (c.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (c.quad_order < 1) throw std::invalid_argument("config: quad_order must be >= 1");
  if (c.max_iter < 1) throw std::invalid_argument("config: max_iter must be >= 1");
  if (c.spectrum_size < 1 || c.spectrum_averages < 1)
    throw std::invalid_argument("config: spectrum_size/averages must be >= 1");
  if (!(c.spectrum_u_max > 0.0))
    throw std::invalid_argument("config: spectrum_u_max must be > 0");
  if (!(c.damping > 0.0 && c.damping <= 1.0))
    throw std::invalid_argument("config: damping must be in (0, 1]");
  if (!(c.fp_tol > 0.0)) throw std::invalid_argument("config: fp_tol must be > 0");
  if (!(c.interp_fd_step > 0.0))
    throw std::invalid_argument("config: interp.fd_step must be > 0");
  if (c.lambda_grid.empty())
    throw std::invalid_argument("config: lambda_grid must be non-empty");
  for (std::size_t i = 0; i < c.lambda_grid.size(); ++i) {
    if (!(c.lambda_grid[i] >= 0.0))
      throw std::invalid_argument("config: lambda values must be >= 0");
    if (i > 0 && c.lambda_grid[i] < c.lambda_grid[i - 1])
      throw std::invalid_argument("config: lambda_grid must be sorted ascending");
  }
  formulation_from_string(c.formulation);  // throws on unknown names
  for (const auto& [name, tol] : c.tolerances)
    if (!(tol > 0.0))
      throw std::invalid_argument("config: tolerance '" + name + "' must be > 0");
  if (c.prior_kind == "discrete") {
    if (c.prior_atoms.empty() || c.prior_atoms.size() != c.prior_weights.size())
      throw std::invalid_argument(
          "config: discrete prior needs matching prior.atoms / prior.weights");
  }
  if (c.ensemble_kind == "external_spectrum" && c.ensemble_spectrum_file.empty())
    throw std::invalid_argument(
        "config: external_spectrum needs ensemble.spectrum_file");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  bool have_command = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> setters = {
      {"command", [&](const std::string& v, int) { c.command = v; have_command = true; }},
      {"prior.kind", [&](const std::string& v, int) { c.prior_kind = v; }},
      {"prior.rho", [&](const std::string& v, int l) { c.prior_rho = parse_double(v, l); }},
      {"prior.sparsity",
       [&](const std::string& v, int l) { c.prior_sparsity = parse_double(v, l); }},
      {"prior.atoms", [&](const std::string& v, int l) { c.prior_atoms = parse_list(v, l); }},
      {"prior.weights",
       [&](const std::string& v, int l) { c.prior_weights = parse_list(v, l); }},
      {"ensemble.kind", [&](const std::string& v, int) { c.ensemble_kind = v; }},
      {"ensemble.factors",
       [&](const std::string& v, int l) { c.ensemble_factors = (int)parse_int(v, l); }},
      {"ensemble.entries", [&](const std::string& v, int) { c.ensemble_entries = v; }},
      {"ensemble.spectrum_file",
       [&](const std::string& v, int) { c.ensemble_spectrum_file = v; }},
      {"n", [&](const std::string& v, int l) { c.n = (int)parse_int(v, l); }},
      {"m", [&](const std::string& v, int l) { c.m = (int)parse_int(v, l); }},
      {"lambda_grid",
       [&](const std::string& v, int l) { c.lambda_grid = parse_list(v, l); }},
      {"trials", [&](const std::string& v, int l) { c.trials = (int)parse_int(v, l); }},
      {"master_seed", [&](const std::string& v, int l) { c.master_seed = parse_u64(v, l); }},
      {"threads", [&](const std::string& v, int l) { c.threads = (int)parse_int(v, l); }},
      {"quad_order",
       [&](const std::string& v, int l) { c.quad_order = (int)parse_int(v, l); }},
      {"formulation", [&](const std::string& v, int) { c.formulation = v; }},
      {"damping", [&](const std::string& v, int l) { c.damping = parse_double(v, l); }},
      {"fp_tol", [&](const std::string& v, int l) { c.fp_tol = parse_double(v, l); }},
      {"max_iter", [&](const std::string& v, int l) { c.max_iter = (int)parse_int(v, l); }},
      {"spectrum_size",
       [&](const std::string& v, int l) { c.spectrum_size = (int)parse_int(v, l); }},
      {"spectrum_averages",
       [&](const std::string& v, int l) { c.spectrum_averages = (int)parse_int(v, l); }},
      {"spectrum_u_max",
       [&](const std::string& v, int l) { c.spectrum_u_max = parse_double(v, l); }},
      {"interp.t", [&](const std::string& v, int l) { c.interp_t = parse_double(v, l); }},
      {"interp.eps1",
       [&](const std::string& v, int l) { c.interp_eps1 = parse_double(v, l); }},
      {"interp.eps2",
       [&](const std::string& v, int l) { c.interp_eps2 = parse_double(v, l); }},
      {"interp.rbar",
       [&](const std::string& v, int l) { c.interp_rbar = parse_double(v, l); }},
      {"interp.ebar",
       [&](const std::string& v, int l) { c.interp_ebar = parse_double(v, l); }},
      {"interp.path_file", [&](const std::string& v, int) { c.interp_path_file = v; }},
      {"interp.check", [&](const std::string& v, int) { c.interp_check = v; }},
      {"interp.fd_step",
       [&](const std::string& v, int l) { c.interp_fd_step = parse_double(v, l); }},
      {"output_path", [&](const std::string& v, int) { c.output_path = v; }},
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    if (key.rfind("tol.", 0) == 0) {
      const std::string name = key.substr(4);
      if (name.empty()) fail(lineno, "empty tolerance name");
      c.tolerances[name] = parse_double(value, lineno);
      continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end()) fail(lineno, "unknown key '" + key + "'");
    if (value.empty() && key != "output_path" && key != "ensemble.spectrum_file" &&
        key != "interp.path_file")
      fail(lineno, "missing value for '" + key + "'");
    it->second(value, lineno);
  }
  if (!have_command) throw std::invalid_argument("config: missing required key 'command'");
  validate(c);
  return c;
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  };
  kv("command", c.command);
  kv("prior.kind", c.prior_kind);
  kv("prior.rho", format_g17(c.prior_rho));
  kv("prior.sparsity", format_g17(c.prior_sparsity));
  if (!c.prior_atoms.empty()) kv("prior.atoms", list_to_string(c.prior_atoms));
  if (!c.prior_weights.empty()) kv("prior.weights", list_to_string(c.prior_weights));
  kv("ensemble.kind", c.ensemble_kind);
  kv("ensemble.factors", std::to_string(c.ensemble_factors));
  kv("ensemble.entries", c.ensemble_entries);
  if (!c.ensemble_spectrum_file.empty())
    kv("ensemble.spectrum_file", c.ensemble_spectrum_file);
  kv("n", std::to_string(c.n));
  kv("m", std::to_string(c.m));
  kv("lambda_grid", list_to_string(c.lambda_grid));
  kv("trials", std::to_string(c.trials));
  kv("master_seed", std::to_string(c.master_seed));
  kv("threads", std::to_string(c.threads));
  kv("quad_order", std::to_string(c.quad_order));
  kv("formulation", c.formulation);
  kv("damping", format_g17(c.damping));
  kv("fp_tol", format_g17(c.fp_tol));
  kv("max_iter", std::to_string(c.max_iter));
  kv("spectrum_size", std::to_string(c.spectrum_size));
  kv("spectrum_averages", std::to_string(c.spectrum_averages));
  kv("spectrum_u_max", format_g17(c.spectrum_u_max));
  kv("interp.t", format_g17(c.interp_t));
  kv("interp.eps1", format_g17(c.interp_eps1));
  kv("interp.eps2", format_g17(c.interp_eps2));
  kv("interp.rbar", format_g17(c.interp_rbar));
  kv("interp.ebar", format_g17(c.interp_ebar));
  if (!c.interp_path_file.empty()) kv("interp.path_file", c.interp_path_file);
  kv("interp.check", c.interp_check);
  kv("interp.fd_step", format_g17(c.interp_fd_step));
  if (!c.output_path.empty()) kv("output_path", c.output_path);
  for (const auto& [name, tol] : c.tolerances) kv("tol." + name, format_g17(tol));
  return out;
}

Prior prior_from_config(const RunConfig& c) {
  if (c.prior_kind == "gaussian") return Prior::gaussian(c.prior_rho);
  if (c.prior_kind == "rademacher") return Prior::rademacher();
  if (c.prior_kind == "gauss_bernoulli")
    return Prior::gauss_bernoulli(c.prior_rho, c.prior_sparsity);
  return Prior::discrete(c.prior_atoms, c.prior_weights);
}

Ensemble ensemble_from_config(const RunConfig& c) {
  if (c.ensemble_kind == "identity_scaled") return Ensemble::identity_scaled(c.m, c.n);
  if (c.ensemble_kind == "gaussian_product")
    return Ensemble::gaussian_product(c.m, c.n, c.ensemble_factors,
                                      c.ensemble_entries == "bounded"
                                          ? FactorEntries::kBounded
                                          : FactorEntries::kGaussian);
  return Ensemble::external_spectrum(c.ensemble_spectrum_file, c.m, c.n);
}

Spectrum spectrum_from_config(const RunConfig& c) {
  if (c.ensemble_kind == "identity_scaled")
    return Spectrum::delta(1.0, static_cast<double>(c.m) / c.n);
  if (c.ensemble_kind == "external_spectrum")
    return load_spectrum(c.ensemble_spectrum_file, static_cast<double>(c.m) / c.n);
  // sample a larger proxy of the same ensemble at the configured ratio
  const double alpha = static_cast<double>(c.m) / c.n;
  const int ns = c.spectrum_size;
  const int ms = std::max(1, static_cast<int>(std::lround(alpha * ns)));
  const Ensemble proxy = Ensemble::gaussian_product(
      ms, ns, c.ensemble_factors,
      c.ensemble_entries == "bounded" ? FactorEntries::kBounded
                                      : FactorEntries::kGaussian);
  return spectrum_of_T(proxy, derive_seed(c.master_seed, stream::kSpectrum, 0),
                       c.spectrum_averages);
}

}  // namespace rlest
