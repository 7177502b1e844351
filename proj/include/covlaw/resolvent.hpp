#pragma once

// Empirical resolvents of K = Y Y^T and K~ = Y^T Y, Y = G / sqrt(N), all
// obtained from one thin SVD, and the local-law error functionals measured
// against the deterministic equivalents.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covlaw/equilibrium.hpp"

namespace covlaw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin SVD Y = U diag(s) V^T with r = min(n, N) singular values, descending.
struct SpectralSample {
  Vector s;
  Matrix U;  // n x r
  Matrix V;  // N x r
  std::size_t n = 0;
  std::size_t N = 0;

  std::size_t r() const { return static_cast<std::size_t>(s.size()); }
  /// Nonzero-mode eigenvalues s^2 of K and K~, descending.
  std::vector<double> eigenvalues() const;
};

/// Thin SVD of G / sqrt(N) (LAPACK divide and conquer).
SpectralSample decompose(const Matrix& G);

struct StieltjesPair {
  cplx m;        // n^{-1} Tr R
  cplx m_tilde;  // N^{-1} Tr R~
};

/// Spectral sums; z may be real when it avoids the spectrum and 0.
StieltjesPair stieltjes(const SpectralSample& sample, cplx z);

/// gamma m - m~ - (gamma - 1)(-1/z).
cplx companion_residual(const SpectralSample& sample, cplx z);

/// Test vectors for [u1* v1*] Pi(z) [u2; v2]; absent parts count as zero.
struct BilinearVectors {
  std::optional<Vector> u1, u2;  // population side, length n
  std::optional<Vector> v1, v2;  // sample side, length N
};

/// Bilinear form of the linearized resolvent
///   Pi(z) = [[-z I_n, Y], [Y^T, -I_N]]^{-1} = [[R, Y R~], [R~ Y^T, z R~]].
cplx linearized_bilinear(const SpectralSample& sample, cplx z, const BilinearVectors& q);

/// Entries R~_ij(z) for the given index pairs.
std::vector<cplx> sample_resolvent_entries(const SpectralSample& sample, cplx z,
                                           const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// Diagonal of R~(z).
std::vector<cplx> sample_resolvent_diagonal(const SpectralSample& sample, cplx z);

/// |Tr R R* - Im Tr R / eta| / Tr R R*, with Tr R R* from the spectral sum and
/// Tr R from the diagonal assembled out of U.
double ward_residual(const SpectralSample& sample, cplx z);

/// max over `pairs` random (v1, v2) of |v1^T z R~ v2 - v1^T (Y^T R Y - I) v2|
/// relative to max(1, |value|). The right side multiplies by G directly.
double schur_block_residual(const Matrix& G, const SpectralSample& sample, cplx z,
                            std::size_t pairs, std::uint64_t seed);

/// Leave-one-column-out rank-one update check on `probes` random bilinear
/// forms: max relative deviation between u^T R u' and the Sherman-Morrison
/// update of R^{(i)}.
double sherman_morrison_residual(const Matrix& G, const SpectralSample& sample, cplx z,
                                 std::size_t column, std::size_t probes, std::uint64_t seed);

/// Population eigenbasis, columns aligned with SpectrumModel::sigma().
struct PopulationBasis {
  std::vector<double> sigma;  // descending
  Matrix O;                   // n x n orthogonal
};
PopulationBasis population_basis(const Matrix& covariance);
/// Sigma = scale * I: identity basis.
PopulationBasis identity_basis(std::size_t n, double scale = 1.0);

/// Pi_hat(z) bilinear: blocks (-z - z m~0 Sigma)^{-1} and z m~0 I.
cplx deterministic_bilinear(const DeterministicEquivalent& de, const PopulationBasis& basis,
                            const BilinearVectors& q);

struct LocalLawRecord {
  SpectralPoint point;
  cplx m_tilde;
  cplx m_tilde0;
  double kappa = 0.0;
  double psi = 0.0;
  double averaged_error = 0.0;
  double averaged_bound = 0.0;
  double entrywise_error = 0.0;
  std::vector<double> anisotropic_errors;  // one per query
  double anisotropic_error = 0.0;          // max of the above
  double ratio_averaged = 0.0;
  double ratio_entrywise = 0.0;
  double ratio_anisotropic = 0.0;
  double self_consistency_residual = 0.0;
  double ward_residual = 0.0;
  double companion_residual = 0.0;
};

/// Errors at one bulk or edge point. Entrywise error is the max over the full
/// diagonal plus `entrywise_probe_count` random off-diagonal pairs.
LocalLawRecord local_law_record(const SpectralSample& sample, SpectralPoint point,
                                const EquilibriumSolution& solution, const SpectrumModel& model,
                                const SupportProfile& profile, const PopulationBasis& basis,
                                const std::vector<BilinearVectors>& queries,
                                std::size_t entrywise_probe_count, std::uint64_t seed);

struct OutsideRecord {
  SpectralPoint point;
  double distance = 0.0;
  double population_error = 0.0;  // |m - m0|
  double sample_error = 0.0;      // |m~ - m~0|
  std::vector<double> bilinear_errors;
  double bilinear_error = 0.0;
  double ratio_averaged = 0.0;   // population_error * N
  double ratio_bilinear = 0.0;   // bilinear_error * sqrt(N)
  double companion_residual = 0.0;
};

/// Errors at a point away from the support; eta may be 0. Throws
/// InsideSpectrum unless dist(z, support) >= delta and |z| >= delta.
OutsideRecord outside_spectrum_record(const SpectralSample& sample, SpectralPoint point,
                                      const SpectrumModel& model, const SupportProfile& profile,
                                      const PopulationBasis& basis,
                                      const std::vector<BilinearVectors>& queries, double delta);

struct RigidityStats {
  std::vector<std::size_t> index;   // 1-based
  std::vector<double> deviation;    // |lambda_i - theta(i)|
  std::vector<double> edge_scaled;  // deviation / (k^{-1/3} N^{-2/3}), k = index distance to the edge
  std::vector<double> bulk_scaled;  // deviation * N
};

/// Throws IndexMismatch when the sample and model disagree on min(n, N).
RigidityStats rigidity_stats(const SpectralSample& sample, const SupportProfile& profile,
                             const SpectrumModel& model, const QuantileTable& table);

struct DelocalizationStats {
  std::vector<double> eigenvalues;     // selected, descending
  std::vector<double> sup_norm;        // sqrt(N) |x~_i|_inf
  std::vector<double> sample_overlap;  // max_v sqrt(N) |<v, x~_i>|
  std::vector<double> population_overlap;  // max_u sqrt(n) |<u, x_i>|
  double max_sup_norm = 0.0;
  double median_sup_norm = 0.0;
  double max_sample_overlap = 0.0;
  double max_population_overlap = 0.0;
  bool degenerate = false;  // repeated eigenvalues in the window
};

/// Eigenvectors with eigenvalue in [lo, hi]. Throws EmptyWindow.
DelocalizationStats delocalization_stats(const SpectralSample& sample, double lo, double hi,
                                         const std::vector<Vector>& sample_vectors,
                                         const std::vector<Vector>& population_vectors);

}  // namespace covlaw
