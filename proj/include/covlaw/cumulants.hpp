#pragma once

// Dense moment and cumulant tensors at small dimension, the U-norm over a
// direction set, and the cumulant-structure ratio sweep.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace covlaw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kTensorStorageGuard = 1e7;
inline constexpr int kMaxCumulantOrder = 6;
inline constexpr std::size_t kMinCumulantSamples = 1000;

/// Dense order-k tensor over R^n, row-major multi-index (last index fastest).
struct Tensor {
  int order = 0;
  std::size_t n = 0;
  std::vector<double> data;

  static Tensor zeros(int order, std::size_t n);
  std::size_t flat(std::span<const std::size_t> idx) const;
  double at(std::span<const std::size_t> idx) const { return data[flat(idx)]; }
  double max_abs() const;
  /// Contract the first axis with v.
  Tensor contract_first(const Vector& v) const;
  double dot(const Tensor& other) const;
};

struct CumulantTensor {
  enum class Source { Empirical, Analytic };
  Tensor tensor;
  Source source = Source::Analytic;
  std::size_t samples = 0;
  std::vector<double> stderr_;  // jackknife standard errors (empirical only)
};

/// kappa_1..kappa_{k_max} of the columns of `samples` (n x reps): moments by
/// averaging outer powers, cumulants by the Moebius sum over set partitions,
/// computed on sorted multi-indices and copied to every permutation. Standard
/// errors by a 20-block jackknife.
std::vector<CumulantTensor> empirical_cumulants(const Matrix& samples, int k_max);

/// Laws with independent coordinates and closed-form scalar moments.
enum class ScalarLaw { Gaussian, Rademacher, CenteredExponential };
double scalar_raw_moment(ScalarLaw law, int p);
double scalar_cumulant(ScalarLaw law, int j);
/// Diagonal order-k cumulant tensor of the i.i.d. law.
CumulantTensor analytic_cumulant(ScalarLaw law, std::size_t n, int k);

/// Joint moments and cumulants of g as functions of an index tuple.
struct TensorLaw {
  std::size_t n = 0;
  std::function<double(std::span<const std::size_t>)> moment;
  std::function<double(std::span<const std::size_t>)> cumulant;
};
/// Moments as products of scalar moments over distinct coordinates;
/// cumulants diagonal.
TensorLaw iid_law(ScalarLaw law, std::size_t n);

struct IdentityCheck {
  double residual = 0.0;     // max entry |LHS - RHS|
  double max_abs_lhs = 0.0;
  double max_z = 0.0;        // max |LHS - RHS| / stderr (empirical LHS only)
};

/// E[(g g* - Sigma)^{(x)k} (x) g^{(x)m}] from lhs.moment (Sigma = second
/// moment) against the sum of kappa_pi over the restricted partitions from
/// rhs.cumulant. Requires 2k + m <= 6.
IdentityCheck moment_tensor_identity_check(const TensorLaw& lhs, const TensorLaw& rhs, int k, int m);
/// Same with the left side estimated from samples (jackknife z-scores).
IdentityCheck moment_tensor_identity_check(const Matrix& samples, const TensorLaw& rhs, int k, int m);

/// Direction set U: contains e_1..e_n, every vector has norm <= bound.
class DirectionSet {
 public:
  /// Basis vectors are added automatically; `extra` vectors follow them.
  DirectionSet(std::size_t n, const std::vector<Vector>& extra, double bound, std::size_t cap = 4096);
  const std::vector<Vector>& vectors() const { return vectors_; }
  std::size_t n() const { return n_; }
  double bound() const { return bound_; }

 private:
  std::size_t n_;
  double bound_;
  std::vector<Vector> vectors_;
};

/// sup over q-tuples from U of |<x_1 (x) ... (x) x_q, T>|. Throws WorkCap when
/// |U|^q exceeds `work_cap`.
double u_norm(const Tensor& T, const DirectionSet& dirs, double work_cap = 1e8);

/// |<kappa_k, s_1 (x) ... (x) s_m (x) T>| / (sqrt(n)^{k-m-1} |T|_U prod |s_t|).
double assumption_ratio(const Tensor& kappa, const std::vector<Vector>& s, const Tensor& T,
                        const DirectionSet& dirs);

struct RatioSweep {
  double max_ratio = 0.0;
  int arg_m = 0;
  const char* arg_family = "";  // "random", "rank1" or "contraction"
};

/// Max of assumption_ratio over m = 1..k-1, `trials` seeded Gaussian s-tuples,
/// and T from three families: Gaussian random, rank one, and the contraction
/// T = kappa(s_1, ..., s_m, .).
RatioSweep assumption_ratio_sweep(const Tensor& kappa, const DirectionSet& dirs, std::size_t trials,
                                  std::uint64_t seed);

}  // namespace covlaw
