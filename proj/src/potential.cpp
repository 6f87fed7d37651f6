#include "rlest/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rlest/common.hpp"

namespace rlest {

namespace {

constexpr double kGolden = 0.6180339887498949;  // (sqrt(5)-1)/2

struct InnerPoint {
  double arg = 0.0;     // the inner extremizer (E or r)
  double value = 0.0;   // potential value at the joint point
  bool boundary = false;
};

// sup over E in [0, rho] at fixed r. Concave in E, so bisection on the
// stationarity condition lambda*R(-lambda E) = r.
InnerPoint sup_over_E(double rho, const Spectrum& spec_T, double lambda, double r,
                      double mutual_info_r) {
  InnerPoint out;
  const double d0 = 0.5 * (lambda * r_transform(spec_T, 0.0) - r);
  if (d0 <= 0.0) {
    out.arg = 0.0;
    out.boundary = true;
  } else if (0.5 * (lambda * r_transform(spec_T, lambda * rho) - r) >= 0.0) {
    out.arg = rho;
    out.boundary = true;
  } else {
    double lo = 0.0, hi = rho;
    for (int it = 0; it < 100 && (hi - lo) > 1e-15 * std::max(1.0, rho); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (lambda * r_transform(spec_T, lambda * mid) - r > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    out.arg = 0.5 * (lo + hi);
  }
  out.value = mutual_info_r + 0.5 * shannon_g(spec_T, lambda * out.arg) -
              0.5 * r * out.arg;
  return out;
}

// sup over r >= 0 at fixed E. Concave in r (I is concave), stationarity is
// mmse(r) = E; the bracket is expanded until mmse drops below E.
InnerPoint sup_over_r(const Prior& prior, const QuadratureRule& quad,
                      const Spectrum& spec_T, double lambda, double E) {
  constexpr double kRCap = 1e8;
  const double rho = prior.rho;
  InnerPoint out;
  if (E >= rho) {
    out.arg = 0.0;
    out.boundary = true;
  } else {
    double hi = 1.0;
    while (mmse(prior, hi, quad) > E && hi < kRCap) hi *= 2.0;
    if (hi >= kRCap) {
      out.arg = kRCap;
      out.boundary = true;
    } else {
      double lo = 0.0;
      for (int it = 0; it < 100 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mmse(prior, mid, quad) > E)
          lo = mid;
        else
          hi = mid;
      }
      out.arg = 0.5 * (lo + hi);
    }
  }
  out.value = mutual_info(prior, out.arg, quad) +
              0.5 * shannon_g(spec_T, lambda * E) - 0.5 * out.arg * E;
  return out;
}

// Golden-section minimization of f on [a, b] down to absolute width tol.
template <typename F>
double golden_min(F&& f, double a, double b, double tol) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Minimize f over candidate grid points, then golden-section refine around
// every strict local minimum (captures multi-valley outer problems near
// first-order transitions).
template <typename F>
double grid_then_golden(F&& f, const std::vector<double>& grid, double tol) {
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid[i]);
  double best_arg = grid[0], best_val = vals[0];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool left_ok = (i == 0) || vals[i] <= vals[i - 1];
    const bool right_ok = (i + 1 == grid.size()) || vals[i] <= vals[i + 1];
    if (!(left_ok && right_ok)) continue;
    const double a = (i == 0) ? grid[0] : grid[i - 1];
    const double b = (i + 1 == grid.size()) ? grid.back() : grid[i + 1];
    const double arg = (b > a) ? golden_min(f, a, b, tol) : grid[i];
    const double val = f(arg);
    if (val < best_val) {
      best_val = val;
      best_arg = arg;
    }
  }
  return best_arg;
}

void validate_inputs(const Prior& prior, const Spectrum& spec_T, double lambda) {
  prior.validate();
  spec_T.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("potential: lambda must be finite and >= 0");
}

// Value comparisons localize a smooth minimum only to ~sqrt(eps); polish the
// outer argument by bisecting the first-order condition, which increases
// through zero at a strict interior minimum. Falls back to x0 when no sign
// change brackets the root.
template <typename G>
double refine_stationary(G&& grad, double x0, double lo_cap, double hi_cap) {
  double delta = std::max(1e-6 * std::max(1.0, std::abs(x0)), 1e-9);
  double lo = x0, hi = x0;
  double glo = 0.0, ghi = 0.0;
  bool bracketed = false;
  for (int it = 0; it < 40; ++it) {
    lo = std::max(lo_cap, x0 - delta);
    hi = std::min(hi_cap, x0 + delta);
    glo = grad(lo);
    ghi = grad(hi);
    if (glo <= 0.0 && ghi >= 0.0) {
      bracketed = true;
      break;
    }
    if (lo <= lo_cap && hi >= hi_cap) break;
    delta *= 4.0;
  }
  if (!bracketed) return x0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (grad(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::kInfSup:
      return "inf_sup";
    case Formulation::kInfESupR:
      return "sup_inf_over_E";
    case Formulation::kInfOverGamma:
      return "inf_over_gamma";
  }
  return "?";
}

Formulation formulation_from_string(const std::string& name) {
  if (name == "inf_sup") return Formulation::kInfSup;
  if (name == "sup_inf_over_E" || name == "inf_E_sup_r") return Formulation::kInfESupR;
  if (name == "inf_over_gamma") return Formulation::kInfOverGamma;
  throw std::invalid_argument("unknown formulation: " + name);
}

double i_rs(const Prior& prior, const QuadratureRule& quad, const Spectrum& spec_T,
            const PotentialPoint& p) {
  validate_inputs(prior, spec_T, p.lambda);
  if (!(p.E >= -1e-12) || p.E > prior.rho * (1.0 + 1e-9) + 1e-12)
    throw std::invalid_argument("i_rs: E must lie in [0, rho]");
  if (!(p.r >= 0.0)) throw std::invalid_argument("i_rs: r must be >= 0");
  return mutual_info(prior, p.r, quad) +
         0.5 * shannon_g(spec_T, p.lambda * std::max(p.E, 0.0)) - 0.5 * p.r * p.E;
}

SeStep se_step(const Prior& prior, const QuadratureRule& quad, const Spectrum& spec_T,
               double E, double lambda) {
  validate_inputs(prior, spec_T, lambda);
  if (!(E >= 0.0) || E > prior.rho * (1.0 + 1e-9) + 1e-12)
    throw std::invalid_argument("se_step: E must lie in [0, rho]");
  const double r = lambda * r_transform(spec_T, lambda * E);
  const double e_next = std::clamp(mmse(prior, r, quad), 0.0, prior.rho);
  return {e_next, r};
}

std::vector<FixedPoint> fixed_points(const Prior& prior, const QuadratureRule& quad,
                                     const Spectrum& spec_T, double lambda,
                                     const FixedPointOptions& opts) {
  validate_inputs(prior, spec_T, lambda);
  if (!(opts.damping > 0.0) || opts.damping > 1.0)
    throw std::invalid_argument("fixed_points: damping must be in (0, 1]");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("fixed_points: tol must be > 0");
  const double rho = prior.rho;
  std::vector<double> inits = opts.inits;
  if (inits.empty()) inits = {1e-6 * rho, 0.5 * rho, rho};

  std::vector<FixedPoint> runs;
  for (double e0 : inits) {
    if (e0 < 0.0 || e0 > rho * (1.0 + 1e-9))
      throw std::invalid_argument("fixed_points: init outside [0, rho]");
    FixedPoint fp;
    double E = std::clamp(e0, 0.0, rho);
    double r = 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
      const SeStep step = se_step(prior, quad, spec_T, E, lambda);
      r = step.r;
      fp.iterations = it + 1;
      fp.residual = std::abs(step.E_next - E);
      if (fp.residual < opts.tol) {
        fp.converged = true;
        break;
      }
      E = (1.0 - opts.damping) * E + opts.damping * step.E_next;
    }
    if (fp.converged) {
      // polish by bisection on E_next(E) - E, locally decreasing at a stable
      // point; leaves distinct basins more than the dedup radius apart
      auto resid = [&](double e) {
        return se_step(prior, quad, spec_T, e, lambda).E_next - e;
      };
      double lo = std::max(0.0, E - 16.0 * opts.tol);
      double hi = std::min(rho, E + 16.0 * opts.tol);
      if (resid(lo) > 0.0 && resid(hi) < 0.0) {
        for (int it = 0; it < 100 && hi - lo > 1e-16 * std::max(1.0, rho); ++it) {
          const double mid = 0.5 * (lo + hi);
          if (resid(mid) > 0.0)
            lo = mid;
          else
            hi = mid;
        }
        E = 0.5 * (lo + hi);
      }
      const SeStep fin = se_step(prior, quad, spec_T, E, lambda);
      r = fin.r;
      fp.residual = std::abs(fin.E_next - E);
    }
    fp.E = E;
    fp.r = r;
    fp.value = i_rs(prior, quad, spec_T, {E, r, lambda});
    runs.push_back(fp);
  }

  // deduplicate converged points (iteration noise radius 10*tol)
  std::vector<FixedPoint> out;
  for (const auto& fp : runs) {
    if (fp.converged) {
      bool dup = false;
      for (const auto& kept : out)
        if (kept.converged && std::abs(kept.E - fp.E) <= 10.0 * opts.tol) dup = true;
      if (dup) continue;
    }
    out.push_back(fp);
  }
  return out;
}

PotentialResult extremize(const Prior& prior, const QuadratureRule& quad,
                          const Spectrum& spec_T, double lambda,
                          Formulation formulation, const FixedPointOptions& fp_opts) {
  validate_inputs(prior, spec_T, lambda);
  const double rho = prior.rho;
  PotentialResult res;
  res.formulation = formulation;
  res.fixed_points = fixed_points(prior, quad, spec_T, lambda, fp_opts);

  const double r_scale = lambda * r_transform(spec_T, 0.0);
  if (r_scale <= 0.0) {
    // Degenerate potential (lambda = 0 or massless spectrum): the value is 0
    // and every E attains the flat inner sup; report the state-evolution
    // point (rho, 0).
    res.value = 0.0;
    res.E_star = rho;
    res.r_star = 0.0;
    res.boundary = true;
    return res;
  }

  switch (formulation) {
    case Formulation::kInfSup: {
      auto outer = [&](double r) {
        return sup_over_E(rho, spec_T, lambda, r, mutual_info(prior, r, quad)).value;
      };
      double r_hi = 1.5 * r_scale;
      double r_star = 0.0;
      for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<double> grid;
        grid.push_back(0.0);
        const double lo = 1e-6;
        const int npts = 96;
        for (int i = 0; i < npts; ++i)
          grid.push_back(lo * std::pow(r_hi / lo, i / double(npts - 1)));
        r_star = grid_then_golden(outer, grid, 1e-11 * std::max(1.0, r_hi));
        if (r_star < 0.999 * r_hi) break;
        r_hi *= 4.0;  // argmin pushed against the bracket; widen it
      }
      if (!sup_over_E(rho, spec_T, lambda, r_star, 0.0).boundary) {
        // along the inner-argmax path dF/dr = (mmse(r) - E*(r)) / 2
        auto grad = [&](double r) {
          return mmse(prior, r, quad) - sup_over_E(rho, spec_T, lambda, r, 0.0).arg;
        };
        r_star = refine_stationary(grad, r_star, 0.0, r_hi);
      }
      const InnerPoint inner =
          sup_over_E(rho, spec_T, lambda, r_star, mutual_info(prior, r_star, quad));
      res.value = inner.value;
      res.E_star = inner.arg;
      res.r_star = r_star;
      res.boundary = inner.boundary || r_star <= 0.0;
      break;
    }
    case Formulation::kInfESupR: {
      auto outer = [&](double E) {
        return sup_over_r(prior, quad, spec_T, lambda, E).value;
      };
      std::vector<double> grid;
      const int npts = 97;
      for (int i = 0; i < npts; ++i) grid.push_back(rho * i / double(npts - 1));
      double e_star = grid_then_golden(outer, grid, 1e-11 * std::max(1.0, rho));
      if (!sup_over_r(prior, quad, spec_T, lambda, e_star).boundary &&
          e_star > 1e-9 * rho && e_star < rho * (1.0 - 1e-9)) {
        // along the inner-argmax path dF/dE = (lambda R(-lambda E) - r*(E)) / 2
        auto grad = [&](double E) {
          return lambda * r_transform(spec_T, lambda * E) -
                 sup_over_r(prior, quad, spec_T, lambda, E).arg;
        };
        e_star = refine_stationary(grad, e_star, 0.0, rho);
      }
      const InnerPoint inner = sup_over_r(prior, quad, spec_T, lambda, e_star);
      res.value = inner.value;
      res.E_star = e_star;
      res.r_star = inner.arg;
      res.boundary =
          inner.boundary || e_star <= 1e-12 * rho || e_star >= rho * (1.0 - 1e-12);
      break;
    }
    case Formulation::kInfOverGamma: {
      const FixedPoint* best = nullptr;
      for (const auto& fp : res.fixed_points)
        if (fp.converged && (best == nullptr || fp.value < best->value)) best = &fp;
      if (best == nullptr)
        throw numerical_failure("extremize: no converged state-evolution fixed point");
      res.value = best->value;
      res.E_star = best->E;
      res.r_star = best->r;
      for (const auto& fp : res.fixed_points)
        if (fp.converged && &fp != best &&
            std::abs(fp.value - best->value) <= 1e-10 * std::max(1.0, std::abs(best->value)))
          res.tie = true;
      res.boundary = res.E_star <= 1e-9 * rho || res.E_star >= rho * (1.0 - 1e-9);
      break;
    }
  }
  return res;
}

double mmse_prediction(const PotentialResult& result) { return result.E_star; }

}  // namespace rlest
