#pragma once

// Samplers for the covariance ensembles, each paired with its population
// covariance (exact, by quadrature, or estimated).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "covlaw/kernels.hpp"
#include "covlaw/rng.hpp"

namespace covlaw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class EntryLaw { Gaussian, Rademacher, StudentT };

/// Mean-zero, unit-variance scalar law for independent entries.
struct EntryDistribution {
  EntryLaw law = EntryLaw::Gaussian;
  int df = 0;  // StudentT only; integer and >= 9

  double draw(Stream& s) const;
  /// E w^k; throws UnsupportedAnalytic when it does not exist.
  double raw_moment(int k) const;
  void validate() const;
};

/// Univariate polynomial in the monomial or probabilists' Hermite basis.
struct Polynomial {
  enum class Basis { Power, Hermite };
  Basis basis = Basis::Power;
  std::vector<double> coeffs;

  double operator()(double x) const;
  /// Coefficients in the monomial basis.
  std::vector<double> power_coefficients() const;
  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Smooth scalar function for the Gibbs tilt: a power-basis polynomial or
/// scale * tanh(x).
struct ScalarFunction {
  enum class Kind { Polynomial, Tanh };
  Kind kind = Kind::Tanh;
  std::vector<double> coeffs;  // Polynomial
  double scale = 1.0;          // Tanh

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
};

struct Separable {
  Matrix factor;  // n x d
  EntryDistribution entry;
};

struct Sphere {
  std::size_t d = 0;
};

/// w | lambda ~ N(0, (1 + c lambda) I_d), lambda = +-1 equally likely.
struct Mixture {
  std::size_t d = 0;
  double c = 0.0;
};

struct RandomFeatures {
  Matrix X;  // n x d
  /// One polynomial shared by every row, or one per row.
  std::vector<Polynomial> activation;
  EntryDistribution entry;
  bool centered = true;

  const Polynomial& activation_for(std::size_t row) const {
    return activation.size() == 1 ? activation.front() : activation[row];
  }
};

struct McmcOptions {
  double step = 0.1;          // initial MALA step, adapted during burn-in
  std::size_t burn_in = 10000;
  std::size_t thin = 0;       // 0: chosen from the autocorrelation of |w|^2
  std::size_t chains = 4;
  std::size_t mean_run = 20000;  // per-chain steps used for the long-run mean
};

/// Density proportional to exp(-|w|^2/2 - lambda sum_i sigma_i(x_i . w)).
struct GibbsTilt {
  Matrix X;  // d x n, rows x_i
  std::vector<ScalarFunction> sigma;  // shared (size 1) or per row
  double lambda = 0.0;
  McmcOptions mcmc;
  std::size_t probe_points = 16;

  const ScalarFunction& sigma_for(std::size_t row) const {
    return sigma.size() == 1 ? sigma.front() : sigma[row];
  }
};

/// g = (x_i x_j) over pairs i < j <= min(i + M, d), x ~ N(0, I_d).
struct ChaosPairs {
  std::size_t d = 0;
  std::size_t M = 0;
};

using EnsembleSpec = std::variant<Separable, Sphere, Mixture, RandomFeatures, GibbsTilt, ChaosPairs>;

std::string family_name(const EnsembleSpec& spec);
std::size_t dimension(const EnsembleSpec& spec);
void validate(const EnsembleSpec& spec);

/// Ordered index pairs of the chaos construction.
std::vector<std::pair<std::size_t, std::size_t>> chaos_pairs(std::size_t d, std::size_t M);

enum class Provenance { Exact, Quadrature, McmcEstimate, SampleEstimate };
std::string to_string(Provenance p);

struct PopulationCovariance {
  Matrix matrix;
  Provenance provenance = Provenance::Exact;
  std::optional<double> estimate_error;  // operator norm

  /// Eigenvalues in descending order.
  std::vector<double> eigenvalues() const;
};

/// n x N matrix of i.i.d. columns; a pure function of (spec, N, seed).
/// Column j draws from substream (seed, j); the result does not depend on
/// `exec`.
Matrix sample(const EnsembleSpec& spec, std::size_t N, std::uint64_t seed,
              Execution exec = Execution::Parallel);

/// Exact or quadrature covariance. GibbsTilt and RandomFeatures with
/// non-Gaussian w throw UnsupportedAnalytic; use estimate_covariance.
PopulationCovariance population_covariance(const EnsembleSpec& spec);

/// Monte Carlo covariance with a jackknife operator-norm error over 20 blocks.
PopulationCovariance estimate_covariance(const EnsembleSpec& spec, std::size_t reps, std::uint64_t seed);

/// E sigma_i(x_i . w) for RandomFeatures, exact for any supported entry law.
Vector random_features_mean(const RandomFeatures& rf);

struct QuadraticFormStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double p05 = 0.0, p50 = 0.0, p95 = 0.0;
};

/// Statistics of (g* A g - Tr Sigma A) / |A|_F over `reps` fresh draws.
QuadraticFormStats quadratic_form_stats(const EnsembleSpec& spec, const Matrix& A, std::size_t reps,
                                        std::uint64_t seed,
                                        const PopulationCovariance* sigma = nullptr);

struct HessianBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Extreme eigenvalues of I + lambda X^T diag(sigma''(X w)) X over w = 0 and
/// `probe_points` standard Gaussian probes. Throws NotLogConcave when the lower
/// bound is <= 0.05.
HessianBounds gibbs_hessian_bounds(const GibbsTilt& spec, std::uint64_t seed = 0);

struct McmcDiagnostics {
  double step = 0.0;
  double acceptance = 0.0;
  std::size_t thin = 0;
};

/// GibbsTilt sampling with its diagnostics.
Matrix sample_gibbs(const GibbsTilt& spec, std::size_t N, std::uint64_t seed,
                    McmcDiagnostics* diagnostics = nullptr);

}  // namespace covlaw
