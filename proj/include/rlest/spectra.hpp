#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace rlest {

enum class EnsembleKind { kIdentityScaled, kGaussianProduct, kExternalSpectrum };
enum class FactorEntries { kGaussian, kBounded };  // bounded = +-1 entries

// Generative description of the m x m structure matrix and the m x n
// i.i.d. N(0, 1/n) mixing matrix it multiplies.
struct Ensemble {
  EnsembleKind kind = EnsembleKind::kIdentityScaled;
  int m = 1;
  int n = 1;
  int factors = 1;                         // gaussian_product: number K of factors
  FactorEntries entries = FactorEntries::kGaussian;
  std::string spectrum_file;               // external_spectrum only

  double alpha() const { return static_cast<double>(m) / static_cast<double>(n); }

  static Ensemble identity_scaled(int m, int n);
  static Ensemble gaussian_product(int m, int n, int factors,
                                   FactorEntries entries = FactorEntries::kGaussian);
  static Ensemble external_spectrum(std::string file, int m, int n);

  void validate() const;
};

enum class SpectrumSource { kAnalyticDelta, kEmpirical, kExternal };

// Weighted nonnegative eigenvalue distribution, sorted ascending.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<double> weights;
  double alpha = 1.0;
  SpectrumSource source = SpectrumSource::kEmpirical;

  static Spectrum delta(double eigenvalue, double alpha);

  double min_eigenvalue() const { return eigenvalues.front(); }
  double max_eigenvalue() const { return eigenvalues.back(); }
  double moment(int k) const;

  void validate() const;
};

// One draw of the structure matrix. gaussian_product returns the ordered
// product of K independent factors, scaled by n^{-(K-1)/2} so that
// (1/n) Phi'^T Phi' keeps an order-one spectrum for every K.
Eigen::MatrixXd sample_phi_prime(const Ensemble& ens, std::uint64_t seed);

// Full measurement matrix Phi = Phi' W with W i.i.d. N(0, 1/n), m x n.
Eigen::MatrixXd sample_phi(const Ensemble& ens, std::uint64_t seed);

// Empirical spectral distribution of T = (1/n) Phi'^T Phi' (uniform weights).
Spectrum esd_T(const Eigen::MatrixXd& phi_prime, int n);

// Empirical spectral distribution of R = (1/n) Phi^T Phi (n x n Gram).
Spectrum esd_R(const Eigen::MatrixXd& phi, int n);

// T spectrum for an ensemble: exact delta for identity_scaled, file contents
// for external, otherwise `reps` sampled realizations merged into one
// atom list.
Spectrum spectrum_of_T(const Ensemble& ens, std::uint64_t seed, int reps = 1);

// R-transform of R = (1/n) Phi^T Phi evaluated at -u, via the spectrum of T:
// alpha * E[X' / (1 + u X')].
double r_transform(const Spectrum& spec_T, double u);

// Integrated R-transform G_R(x) = alpha * E[log(1 + x X')].
double shannon_g(const Spectrum& spec_T, double x);

// g(z) = E[1 / (X - z)] for z outside the support.
std::complex<double> stieltjes(const Spectrum& spec, std::complex<double> z);
double stieltjes_real(const Spectrum& spec, double z);

// R-transform of the spectrum itself at -u, obtained by numerically
// inverting its Stieltjes transform below the support. Used as the
// independent route to cross-check r_transform.
double r_transform_from_stieltjes(const Spectrum& spec_R, double u);

// | z g_R(z)^2 + alpha g_T(-1/g_R(z)) + (1-alpha) g_R(z) | at real z < 0.
double mp_identity_residual(const Spectrum& spec_R, const Spectrum& spec_T, double z);

// Whitespace-separated "eigenvalue weight" pairs.
Spectrum load_spectrum(const std::string& path, double alpha);

}  // namespace rlest
