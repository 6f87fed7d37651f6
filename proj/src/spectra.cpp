#include "rlest/spectra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rlest/common.hpp"
#include "rlest/rng.hpp"

namespace rlest {

namespace {

constexpr double kClampTol = 1e-10;  // |negative eigenvalue| clamped below this

Eigen::MatrixXd sample_factor(int m, FactorEntries entries, RngStream& rng) {
  Eigen::MatrixXd f(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      f(i, j) = (entries == FactorEntries::kGaussian)
                    ? rng.gaussian()
                    : (rng.uniform() < 0.5 ? -1.0 : 1.0);
  return f;
}

Spectrum spectrum_from_gram(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver,
                            double alpha) {
  if (solver.info() != Eigen::Success)
    throw numerical_failure("esd: symmetric eigensolver did not converge");
  const auto& ev = solver.eigenvalues();
  Spectrum spec;
  spec.alpha = alpha;
  spec.source = SpectrumSource::kEmpirical;
  spec.eigenvalues.resize(ev.size());
  spec.weights.assign(ev.size(), 1.0 / static_cast<double>(ev.size()));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double x = ev(i);
    if (x < 0.0) {
      if (x < -kClampTol)
        throw numerical_failure("esd: Gram matrix eigenvalue " + format_g17(x) +
                                " below the clamping tolerance");
      x = 0.0;
    }
    spec.eigenvalues[i] = x;
  }
  std::sort(spec.eigenvalues.begin(), spec.eigenvalues.end());
  return spec;
}

}  // namespace

Ensemble Ensemble::identity_scaled(int m, int n) {
  Ensemble e;
  e.kind = EnsembleKind::kIdentityScaled;
  e.m = m;
  e.n = n;
  e.validate();
  return e;
}

Ensemble Ensemble::gaussian_product(int m, int n, int factors, FactorEntries entries) {
  Ensemble e;
  e.kind = EnsembleKind::kGaussianProduct;
  e.m = m;
  e.n = n;
  e.factors = factors;
  e.entries = entries;
  e.validate();
  return e;
}

Ensemble Ensemble::external_spectrum(std::string file, int m, int n) {
  Ensemble e;
  e.kind = EnsembleKind::kExternalSpectrum;
  e.spectrum_file = std::move(file);
  e.m = m;
  e.n = n;
  e.validate();
  return e;
}

void Ensemble::validate() const {
  if (m < 1 || n < 1) throw std::invalid_argument("ensemble: m, n must be >= 1");
  if (kind == EnsembleKind::kGaussianProduct && factors < 1)
    throw std::invalid_argument("ensemble: gaussian_product needs K >= 1 factors");
  if (kind == EnsembleKind::kExternalSpectrum && spectrum_file.empty())
    throw std::invalid_argument("ensemble: external_spectrum needs a file");
}

Spectrum Spectrum::delta(double eigenvalue, double alpha) {
  if (eigenvalue < 0.0) throw std::invalid_argument("spectrum: negative delta mass");
  Spectrum s;
  s.eigenvalues = {eigenvalue};
  s.weights = {1.0};
  s.alpha = alpha;
  s.source = SpectrumSource::kAnalyticDelta;
  return s;
}

double Spectrum::moment(int k) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    acc += weights[i] * std::pow(eigenvalues[i], k);
  return acc;
}

void Spectrum::validate() const {
  if (eigenvalues.empty() || eigenvalues.size() != weights.size())
    throw std::invalid_argument("spectrum: empty or mismatched atom list");
  if (!(alpha > 0.0)) throw std::invalid_argument("spectrum: alpha must be > 0");
  double wsum = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] < 0.0)
      throw std::invalid_argument("spectrum: negative eigenvalue");
    if (i + 1 < eigenvalues.size() && eigenvalues[i] > eigenvalues[i + 1])
      throw std::invalid_argument("spectrum: eigenvalues must be sorted");
    wsum += weights[i];
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("spectrum: weights must sum to 1");
}

Eigen::MatrixXd sample_phi_prime(const Ensemble& ens, std::uint64_t seed) {
  ens.validate();
  switch (ens.kind) {
    case EnsembleKind::kIdentityScaled:
      return std::sqrt(static_cast<double>(ens.n)) *
             Eigen::MatrixXd::Identity(ens.m, ens.m);
    case EnsembleKind::kGaussianProduct: {
      RngStream rng(seed, stream::kPhiPrime, 0);
      Eigen::MatrixXd prod = sample_factor(ens.m, ens.entries, rng);
      for (int k = 1; k < ens.factors; ++k)
        prod = (prod * sample_factor(ens.m, ens.entries, rng)).eval();
      const double scale =
          std::pow(static_cast<double>(ens.n), -0.5 * (ens.factors - 1));
      return scale * prod;
    }
    case EnsembleKind::kExternalSpectrum:
      throw unsupported_operation(
          "sample_phi_prime: external_spectrum ensembles have no sampler");
  }
  throw std::logic_error("sample_phi_prime: unreachable");
}

Eigen::MatrixXd sample_phi(const Ensemble& ens, std::uint64_t seed) {
  const Eigen::MatrixXd phi_prime = sample_phi_prime(ens, seed);
  RngStream rng(seed, stream::kMatrixW, 0);
  const double sd = 1.0 / std::sqrt(static_cast<double>(ens.n));
  Eigen::MatrixXd w(ens.m, ens.n);
  for (int j = 0; j < ens.n; ++j)
    for (int i = 0; i < ens.m; ++i) w(i, j) = sd * rng.gaussian();
  return phi_prime * w;
}

Spectrum esd_T(const Eigen::MatrixXd& phi_prime, int n) {
  if (phi_prime.rows() != phi_prime.cols())
    throw std::invalid_argument("esd_T: phi_prime must be square");
  const int m = static_cast<int>(phi_prime.rows());
  const Eigen::MatrixXd gram =
      (phi_prime.transpose() * phi_prime) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return spectrum_from_gram(solver, static_cast<double>(m) / n);
}

Spectrum esd_R(const Eigen::MatrixXd& phi, int n) {
  if (phi.cols() != n) throw std::invalid_argument("esd_R: phi must be m x n");
  const Eigen::MatrixXd gram = (phi.transpose() * phi) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return spectrum_from_gram(solver, static_cast<double>(phi.rows()) / n);
}

Spectrum spectrum_of_T(const Ensemble& ens, std::uint64_t seed, int reps) {
  ens.validate();
  if (reps < 1) throw std::invalid_argument("spectrum_of_T: reps must be >= 1");
  switch (ens.kind) {
    case EnsembleKind::kIdentityScaled:
      return Spectrum::delta(1.0, ens.alpha());
    case EnsembleKind::kExternalSpectrum:
      return load_spectrum(ens.spectrum_file, ens.alpha());
    case EnsembleKind::kGaussianProduct: {
      Spectrum merged;
      merged.alpha = ens.alpha();
      merged.source = SpectrumSource::kEmpirical;
      for (int rep = 0; rep < reps; ++rep) {
        const auto phi_prime =
            sample_phi_prime(ens, derive_seed(seed, stream::kSpectrum, rep));
        const Spectrum one = esd_T(phi_prime, ens.n);
        merged.eigenvalues.insert(merged.eigenvalues.end(), one.eigenvalues.begin(),
                                  one.eigenvalues.end());
        for (double w : one.weights) merged.weights.push_back(w / reps);
      }
      // keep atoms sorted; weights are uniform so sorting eigenvalues suffices
      std::sort(merged.eigenvalues.begin(), merged.eigenvalues.end());
      return merged;
    }
  }
  throw std::logic_error("spectrum_of_T: unreachable");
}

double r_transform(const Spectrum& spec_T, double u) {
  if (!(u >= 0.0) || !std::isfinite(u))
    throw std::invalid_argument("r_transform: u must be finite and >= 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < spec_T.eigenvalues.size(); ++i) {
    const double denom = 1.0 + u * spec_T.eigenvalues[i];
    if (denom <= 0.0)
      throw std::domain_error("r_transform: 1 + u*x <= 0 at an atom");
    acc += spec_T.weights[i] * spec_T.eigenvalues[i] / denom;
  }
  return spec_T.alpha * acc;
}

double shannon_g(const Spectrum& spec_T, double x) {
  if (!(x >= 0.0) || !std::isfinite(x))
    throw std::invalid_argument("shannon_g: x must be finite and >= 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < spec_T.eigenvalues.size(); ++i)
    acc += spec_T.weights[i] * std::log1p(x * spec_T.eigenvalues[i]);
  return spec_T.alpha * acc;
}

std::complex<double> stieltjes(const Spectrum& spec, std::complex<double> z) {
  double min_dist = std::numeric_limits<double>::infinity();
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    const std::complex<double> d = spec.eigenvalues[i] - z;
    min_dist = std::min(min_dist, std::abs(d));
    acc += spec.weights[i] / d;
  }
  if (!(min_dist > 0.0))
    throw std::domain_error("stieltjes: z lies on the spectrum support");
  return acc;
}

double stieltjes_real(const Spectrum& spec, double z) {
  return stieltjes(spec, std::complex<double>(z, 0.0)).real();
}

double r_transform_from_stieltjes(const Spectrum& spec_R, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("r_transform_from_stieltjes: u must be > 0");
  // g is strictly increasing on (-inf, min eigenvalue), with range (0, +inf)
  // when the support touches its left edge; find w with g(w) = u by
  // bracketed bisection.
  const double edge = spec_R.min_eigenvalue();
  double hi = edge - 1e-14 * std::max(1.0, std::abs(edge)) - 1e-300;
  double lo = std::min(hi - 1.0, -1.0);
  while (stieltjes_real(spec_R, lo) > u) {
    lo = lo * 2.0 - 1.0;
    if (lo < -1e12)
      throw numerical_failure("r_transform_from_stieltjes: bracketing failed");
  }
  // ensure g(hi) >= u; near an atom edge g blows up so expansion is cheap
  double ghi = stieltjes_real(spec_R, hi);
  int guard = 0;
  while (ghi < u) {
    hi = edge - (edge - hi) * 0.5;
    ghi = stieltjes_real(spec_R, hi);
    if (++guard > 2000)
      throw numerical_failure("r_transform_from_stieltjes: edge bracketing failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (stieltjes_real(spec_R, mid) < u)
      lo = mid;
    else
      hi = mid;
    if (std::abs(hi - lo) < 1e-15 * std::max(1.0, std::abs(lo))) break;
  }
  const double w = 0.5 * (lo + hi);
  if (std::abs(stieltjes_real(spec_R, w) - u) > 1e-10 * std::max(1.0, u))
    throw numerical_failure("r_transform_from_stieltjes: inversion residual too large");
  return w + 1.0 / u;
}

double mp_identity_residual(const Spectrum& spec_R, const Spectrum& spec_T, double z) {
  if (!(z < 0.0)) throw std::invalid_argument("mp_identity_residual: z must be < 0");
  const double g_r = stieltjes_real(spec_R, z);
  if (g_r == 0.0) throw std::domain_error("mp_identity_residual: g_R(z) vanishes");
  const double alpha = spec_T.alpha;
  const double g_t = stieltjes_real(spec_T, -1.0 / g_r);
  return std::abs(z * g_r * g_r + alpha * g_t + (1.0 - alpha) * g_r);
}

Spectrum load_spectrum(const std::string& path, double alpha) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_spectrum: cannot open " + path);
  Spectrum spec;
  spec.alpha = alpha;
  spec.source = SpectrumSource::kExternal;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double x = 0.0, w = 0.0;
    if (!(ss >> x)) continue;  // blank line
    if (!(ss >> w)) throw std::invalid_argument("load_spectrum: malformed pair in " + path);
    if (x < 0.0 && x > -kClampTol) x = 0.0;
    spec.eigenvalues.push_back(x);
    spec.weights.push_back(w);
  }
  if (spec.eigenvalues.empty())
    throw std::invalid_argument("load_spectrum: no atoms in " + path);
  const double wsum =
      pairwise_sum(std::span<const double>(spec.weights.data(), spec.weights.size()));
  if (std::abs(wsum - 1.0) > 1e-6)
    throw std::invalid_argument("load_spectrum: weights sum to " + format_g17(wsum));
  for (auto& wi : spec.weights) wi /= wsum;
  // sort atoms by eigenvalue, carrying weights along
  std::vector<std::size_t> idx(spec.eigenvalues.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return spec.eigenvalues[a] < spec.eigenvalues[b];
  });
  Spectrum sorted;
  sorted.alpha = alpha;
  sorted.source = SpectrumSource::kExternal;
  for (std::size_t i : idx) {
    sorted.eigenvalues.push_back(spec.eigenvalues[i]);
    sorted.weights.push_back(spec.weights[i]);
  }
  sorted.validate();
  return sorted;
}

}  // namespace rlest
