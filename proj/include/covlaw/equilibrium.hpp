#pragma once

// Deterministic equivalents for sample covariance matrices: the deformed
// Marchenko-Pastur equation, its support structure, and the reference
// quantities the resolvent measurements are compared against.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace covlaw {

using cplx = std::complex<double>;

/// A population spectrum together with the data dimensions (n, N).
class SpectrumModel {
 public:
  struct Atom {
    double value;
    double weight;  // multiplicity
  };

  /// `sigma` may be unsorted; it is stored in descending order. Its size is n.
  SpectrumModel(std::vector<double> sigma, std::size_t N);

  static SpectrumModel identity(std::size_t n, std::size_t N, double scale = 1.0);
  /// (value, multiplicity) pairs; n is the total multiplicity.
  static SpectrumModel from_atoms(const std::vector<std::pair<double, std::size_t>>& atoms,
                                  std::size_t N);

  std::span<const double> sigma() const { return sigma_; }
  std::size_t n() const { return sigma_.size(); }
  std::size_t N() const { return N_; }
  double gamma() const { return static_cast<double>(n()) / static_cast<double>(N_); }
  double max_sigma() const { return sigma_.empty() ? 0.0 : sigma_.front(); }
  /// Number of strictly positive population eigenvalues.
  std::size_t rank() const { return rank_; }
  /// Distinct nonzero eigenvalues in descending order with multiplicities.
  /// Values within a relative 1e-12 of each other are merged.
  std::span<const Atom> atoms() const { return atoms_; }

  /// c <= n/N <= C, max sigma <= C, and at most (1-c) n eigenvalues in [0, c].
  bool satisfies_basic_assumptions(double C, double c) const;

 private:
  std::vector<double> sigma_;
  std::size_t N_;
  std::size_t rank_ = 0;
  std::vector<Atom> atoms_;
};

struct SpectralPoint {
  double E = 0.0;
  double eta = 0.0;

  cplx z() const { return {E, eta}; }
};

struct EquilibriumSolution {
  cplx m_tilde0;
  cplx m0;
  double residual = 0.0;
  int iterations = 0;
  std::optional<double> kappa;  // filled when a SupportProfile is supplied
};

struct SolverOptions {
  double tolerance = 1e-12;  // relative to max(1, |z|)
  int max_iterations = 10000;  // per continuation step
  double damping = 0.5;
  double eta_ratio = 0.25;  // geometric continuation factor
};

struct Interval {
  double lo;
  double hi;
};

struct SupportProfile {
  /// m_1 > m_2 >= ... > m_{2p-1} on the negative axis, then m_{2p}
  /// (possibly +infinity).
  std::vector<double> critical_points;
  /// x_j = z0(m_j), ordered x_1 > x_2 >= x_3 > ... > x_{2p} >= 0.
  std::vector<double> edges;
  /// Bulk components [x_{2k}, x_{2k-1}], k = 1..p (right to left).
  std::vector<Interval> components;
  /// Zero-based k such that x_{2k+2} and x_{2k+3} (one-based) coincide.
  std::vector<std::size_t> cusps;
  std::size_t p = 0;
  /// N_j = N * (mass of the limiting Gram-side law to the right of x_j).
  std::vector<double> edge_counts;
  /// N * mass of each component.
  std::vector<double> component_counts;
  /// The Gram-side law has an atom at 0 (rank < N).
  bool zero_atom = false;

  bool contains(double E, double tolerance = 0.0) const;
  /// Distance of E to the nearest edge.
  double kappa(double E) const;
  /// Distance of z to the support (as a subset of the real line).
  double distance(cplx z) const;
};

struct ClassifyOptions {
  int scan_points = 2048;
  double bisection_tolerance = 1e-13;
  double cusp_tolerance = 1e-7;
  double integrality_tolerance = 1e-6;
  bool compute_edge_counts = true;
};

struct ErrorParameter {
  double psi = 0.0;
};

/// Deterministic equivalent of the linearized resolvent at a spectral point.
struct DeterministicEquivalent {
  /// (-z - z m_tilde0 sigma_alpha)^{-1}, aligned with SpectrumModel::sigma().
  std::vector<cplx> population_diagonal;
  /// z * m_tilde0, the sample-side block scalar.
  cplx sample_scalar;
  SpectralPoint point;

  /// sum_alpha conj(a[alpha]) b[alpha] d_alpha for coordinates in the
  /// population eigenbasis.
  cplx population_bilinear(std::span<const double> a, std::span<const double> b) const;
};

struct RegularityReport {
  double abs_z = 0.0;
  double abs_m_tilde0 = 0.0;
  double min_abs_one_plus_sigma_m = 0.0;
  double kappa = 0.0;
  double g = 0.0;
  double im_ratio = 0.0;  // Im m_tilde0 / g(z)
  bool inside_support = false;
};

// --- z0(m) ------------------------------------------------------------------

/// -1/m + N^{-1} sum_alpha sigma_alpha / (1 + sigma_alpha m).
cplx z0_eval(cplx m, const SpectrumModel& model);
/// 1/m^2 - N^{-1} sum_alpha sigma_alpha^2 / (1 + sigma_alpha m)^2.
cplx z0_prime(cplx m, const SpectrumModel& model);
/// z0 written in t = 1/m; finite at t = 0 (m = infinity).
double z0_inverse_variable(double t, const SpectrumModel& model);

// --- equation solving ---------------------------------------------------------

EquilibriumSolution solve_mp(SpectralPoint point, const SpectrumModel& model,
                             const SolverOptions& options = {});
EquilibriumSolution solve_mp(SpectralPoint point, const SpectrumModel& model,
                             const SupportProfile& profile,
                             const SolverOptions& options = {});

/// Extends solve_mp to eta <= 0 off the support: conjugate symmetry below the
/// axis, and a real branch solve on the axis. Throws InsideSpectrum when an
/// on-axis point has no real solution on the physical branch.
EquilibriumSolution solve_mp_extended(SpectralPoint point, const SpectrumModel& model);

/// Boundary value m_tilde0(E + i0) for E > 0.
cplx boundary_value(double E, const SpectrumModel& model);

SupportProfile classify_support(const SpectrumModel& model, const ClassifyOptions& options = {});

/// rho_0(E) = Im m_tilde0(E + i0) / pi for E > 0; zero outside the support.
double density(double E, const SpectrumModel& model, const SupportProfile& profile);
double density(double E, const SpectrumModel& model);

/// N * integral of rho_0 over [lo, hi] inside one component, by adaptive
/// Gauss-Kronrod with square-root substitution at both ends.
double component_count(const SpectrumModel& model, Interval component);

/// theta(i): N * integral_{theta}^{inf} rho_0 = i - 1/2. Adaptive quadrature
/// plus bisection; 1 <= i <= min(n, N).
double classical_location(const SpectrumModel& model, std::size_t i);
double classical_location(const SpectrumModel& model, const SupportProfile& profile,
                          std::size_t i);

/// All classical locations at once from per-component Chebyshev tables of
/// the upper-tail counting function.
class QuantileTable {
 public:
  QuantileTable(const SpectrumModel& model, const SupportProfile& profile, int nodes = 256);

  /// theta(i) for 1 <= i <= max_index().
  double location(std::size_t i) const;
  /// N * integral_E^inf rho_0.
  double count_above(double E) const;
  /// Largest i with i - 1/2 below the total positive mass.
  std::size_t max_index() const { return max_index_; }
  std::vector<double> all_locations() const;

 private:
  struct Table {
    Interval component;
    std::vector<double> antiderivative;  // Chebyshev coefficients in psi
    double count;  // N * component mass
    double count_above;  // N * mass of components to the right
  };
  double tail_in_component(const Table& t, double psi) const;

  std::vector<Table> tables_;
  std::size_t max_index_ = 0;
};

ErrorParameter error_parameter(SpectralPoint point, const EquilibriumSolution& solution,
                               std::size_t N);

DeterministicEquivalent deterministic_equivalent(SpectralPoint point,
                                                 const EquilibriumSolution& solution,
                                                 const SpectrumModel& model);

RegularityReport regularity_report(SpectralPoint point, const EquilibriumSolution& solution,
                                   const SpectrumModel& model, const SupportProfile& profile);

}  // namespace covlaw
