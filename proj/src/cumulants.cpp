#include "covlaw/cumulants.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "covlaw/error.hpp"
#include "covlaw/kernels.hpp"
#include "covlaw/partitions.hpp"
#include "covlaw/rng.hpp"

namespace covlaw {

namespace {

constexpr std::size_t kJackknifeBlocks = 20;

double ipow(std::size_t n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(n);
  return r;
}

void check_storage(std::size_t n, int k) {
  if (ipow(n, k) > kTensorStorageGuard)
    throw Error(ErrorCode::StorageGuard, "n^k = " + std::to_string(ipow(n, k)) + " exceeds the 1e7 storage guard");
}

// Advance a multi-index in row-major order; false after the last one.
bool next_index(std::vector<std::size_t>& idx, std::size_t n) {
  for (std::size_t p = idx.size(); p-- > 0;) {
    if (++idx[p] < n) return true;
    idx[p] = 0;
  }
  return false;
}

// Advance a non-decreasing multi-index; false after the last one.
bool next_sorted(std::vector<std::size_t>& idx, std::size_t n) {
  for (std::size_t p = idx.size(); p-- > 0;) {
    if (idx[p] + 1 < n) {
      ++idx[p];
      for (std::size_t q = p + 1; q < idx.size(); ++q) idx[q] = idx[p];
      return true;
    }
  }
  return false;
}

double mobius_coefficient(std::size_t blocks) {
  double f = 1.0;
  for (std::size_t j = 2; j < blocks; ++j) f *= static_cast<double>(j);
  return (blocks % 2 == 1) ? f : -f;
}

// Moment lookup on the sorted sub-tuple, so asymmetric round-off in the raw
// sums cannot leak into the cumulants.
struct MomentTable {
  std::size_t n;
  std::vector<std::vector<double>> m;  // m[k-1] has n^k entries

  double operator()(std::vector<std::size_t> sub) const {
    if (sub.empty()) return 1.0;
    std::sort(sub.begin(), sub.end());
    std::size_t f = 0;
    for (std::size_t i : sub) f = f * n + i;
    return m[sub.size() - 1][f];
  }
};

std::vector<Tensor> cumulants_from_moments(const MomentTable& mt, int k_max) {
  const std::size_t n = mt.n;
  std::vector<Tensor> out;
  for (int k = 1; k <= k_max; ++k) {
    Tensor T = Tensor::zeros(k, n);
    const auto& parts = set_partitions(k);
    std::vector<std::size_t> idx(k, 0);
    do {
      double kappa = 0.0;
      for (const auto& p : parts) {
        double prod = mobius_coefficient(p.size());
        for (const auto& block : p) {
          std::vector<std::size_t> sub;
          for (int pos : block) sub.push_back(idx[pos]);
          prod *= mt(sub);
        }
        kappa += prod;
      }
      std::vector<std::size_t> perm = idx;
      do {
        T.data[T.flat(perm)] = kappa;
      } while (std::next_permutation(perm.begin(), perm.end()));
    } while (next_sorted(idx, n));
    out.push_back(std::move(T));
  }
  return out;
}

struct BlockMoments {
  std::size_t n = 0;
  std::size_t total = 0;
  std::vector<std::size_t> counts;
  std::vector<std::vector<std::vector<double>>> sums;  // [block][order-1][entry]
  std::vector<std::vector<double>> full;

  MomentTable table(std::size_t skip = static_cast<std::size_t>(-1)) const {
    MomentTable mt{n, full};
    double count = static_cast<double>(total);
    if (skip < counts.size()) {
      count -= static_cast<double>(counts[skip]);
      for (std::size_t k = 0; k < mt.m.size(); ++k)
        for (std::size_t e = 0; e < mt.m[k].size(); ++e) mt.m[k][e] -= sums[skip][k][e];
    }
    for (auto& v : mt.m)
      for (double& x : v) x /= count;
    return mt;
  }
};

BlockMoments block_moments(const Matrix& X, int k_max) {
  BlockMoments bm;
  bm.n = X.rows();
  bm.total = X.cols();
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
    const std::size_t lo = b * bm.total / kJackknifeBlocks, hi = (b + 1) * bm.total / kJackknifeBlocks;
    const Matrix block = X.middleCols(lo, hi - lo);
    bm.counts.push_back(hi - lo);
    bm.sums.push_back(kernels::raw_moments_omp(block, k_max));
  }
  bm.full = bm.sums[0];
  for (std::size_t b = 1; b < kJackknifeBlocks; ++b)
    for (int k = 0; k < k_max; ++k)
      for (std::size_t e = 0; e < bm.full[k].size(); ++e) bm.full[k][e] += bm.sums[b][k][e];
  return bm;
}

void check_sample_input(const Matrix& samples, int k_max) {
  if (k_max < 1 || k_max > kMaxCumulantOrder)
    throw Error(ErrorCode::InvalidArgument, "cumulant order must lie in 1..6");
  check_storage(samples.rows(), k_max);
  if (static_cast<std::size_t>(samples.cols()) < kMinCumulantSamples)
    throw Error(ErrorCode::InsufficientSamples, "cumulant estimation needs at least 1000 samples");
}

std::vector<double> jackknife_stderr(const std::vector<std::vector<double>>& leave_out) {
  const std::size_t B = leave_out.size(), E = leave_out.front().size();
  std::vector<double> se(E, 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    double mean = 0.0;
    for (const auto& v : leave_out) mean += v[e];
    mean /= static_cast<double>(B);
    double ss = 0.0;
    for (const auto& v : leave_out) ss += (v[e] - mean) * (v[e] - mean);
    se[e] = std::sqrt((B - 1.0) / B * ss);
  }
  return se;
}

}  // namespace

// --- Tensor ------------------------------------------------------------------------

Tensor Tensor::zeros(int order, std::size_t n) {
  check_storage(n, order);
  Tensor t;
  t.order = order;
  t.n = n;
  t.data.assign(static_cast<std::size_t>(ipow(n, order)), 0.0);
  return t;
}

std::size_t Tensor::flat(std::span<const std::size_t> idx) const {
  std::size_t f = 0;
  for (std::size_t i : idx) f = f * n + i;
  return f;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : data) m = std::max(m, std::abs(x));
  return m;
}

Tensor Tensor::contract_first(const Vector& v) const {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "cannot contract an order-0 tensor");
  Tensor out = Tensor::zeros(order - 1, n);
  const std::size_t stride = out.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v(i);
    if (vi == 0.0) continue;
    const double* src = data.data() + i * stride;
    for (std::size_t e = 0; e < stride; ++e) out.data[e] += vi * src[e];
  }
  return out;
}

double Tensor::dot(const Tensor& other) const {
  if (other.data.size() != data.size()) throw Error(ErrorCode::InvalidArgument, "tensor shapes differ");
  return std::inner_product(data.begin(), data.end(), other.data.begin(), 0.0);
}

// --- empirical cumulants --------------------------------------------------------------

std::vector<CumulantTensor> empirical_cumulants(const Matrix& samples, int k_max) {
  check_sample_input(samples, k_max);
  const BlockMoments bm = block_moments(samples, k_max);
  const std::vector<Tensor> full = cumulants_from_moments(bm.table(), k_max);
  std::vector<std::vector<Tensor>> leave(kJackknifeBlocks);
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) leave[b] = cumulants_from_moments(bm.table(b), k_max);

  std::vector<CumulantTensor> out;
  for (int k = 0; k < k_max; ++k) {
    CumulantTensor c;
    c.tensor = full[k];
    c.source = CumulantTensor::Source::Empirical;
    c.samples = bm.total;
    std::vector<std::vector<double>> lo;
    for (const auto& l : leave) lo.push_back(l[k].data);
    c.stderr_ = jackknife_stderr(lo);
    out.push_back(std::move(c));
  }
  return out;
}

// --- analytic laws ---------------------------------------------------------------------

double scalar_raw_moment(ScalarLaw law, int p) {
  if (p < 0) throw Error(ErrorCode::InvalidArgument, "negative moment order");
  switch (law) {
    case ScalarLaw::Gaussian: {
      if (p % 2) return 0.0;
      double r = 1.0;
      for (int j = p - 1; j > 0; j -= 2) r *= j;
      return r;
    }
    case ScalarLaw::Rademacher: return p % 2 ? 0.0 : 1.0;
    case ScalarLaw::CenteredExponential: {
      // E(X - 1)^p for X ~ Exp(1) is the derangement number D_p.
      double a = 1.0, b = 0.0;  // D_0, D_1
      if (p == 0) return a;
      for (int j = 2; j <= p; ++j) {
        const double c = (j - 1) * (a + b);
        a = b;
        b = c;
      }
      return b;
    }
  }
  return 0.0;
}

double scalar_cumulant(ScalarLaw law, int j) {
  if (j < 1) throw Error(ErrorCode::InvalidArgument, "cumulant order must be positive");
  switch (law) {
    case ScalarLaw::Gaussian: return j == 2 ? 1.0 : 0.0;
    case ScalarLaw::Rademacher: {
      // kappa_l = m_l - sum_{i<l} C(l-1, i-1) kappa_i m_{l-i}
      std::vector<double> kappa(j + 1, 0.0);
      for (int l = 1; l <= j; ++l) {
        kappa[l] = scalar_raw_moment(law, l);
        double binom = 1.0;  // C(l-1, i-1)
        for (int i = 1; i < l; ++i) {
          kappa[l] -= binom * kappa[i] * scalar_raw_moment(law, l - i);
          binom = binom * (l - i) / i;
        }
      }
      return kappa[j];
    }
    case ScalarLaw::CenteredExponential: {
      if (j == 1) return 0.0;
      double f = 1.0;
      for (int i = 2; i < j; ++i) f *= i;
      return f;
    }
  }
  return 0.0;
}

CumulantTensor analytic_cumulant(ScalarLaw law, std::size_t n, int k) {
  CumulantTensor c;
  c.tensor = Tensor::zeros(k, n);
  c.source = CumulantTensor::Source::Analytic;
  const double v = scalar_cumulant(law, k);
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(idx.begin(), idx.end(), i);
    c.tensor.data[c.tensor.flat(idx)] = v;
  }
  return c;
}

TensorLaw iid_law(ScalarLaw law, std::size_t n) {
  TensorLaw t;
  t.n = n;
  t.moment = [law](std::span<const std::size_t> idx) {
    std::vector<std::size_t> s(idx.begin(), idx.end());
    std::sort(s.begin(), s.end());
    double r = 1.0;
    for (std::size_t a = 0; a < s.size();) {
      std::size_t b = a;
      while (b < s.size() && s[b] == s[a]) ++b;
      r *= scalar_raw_moment(law, static_cast<int>(b - a));
      a = b;
    }
    return r;
  };
  t.cumulant = [law](std::span<const std::size_t> idx) {
    for (std::size_t i : idx)
      if (i != idx[0]) return 0.0;
    return scalar_cumulant(law, static_cast<int>(idx.size()));
  };
  return t;
}

// --- moment-cumulant identity ------------------------------------------------------

namespace {

using IndexFn = std::function<double(std::span<const std::size_t>)>;

std::vector<double> identity_lhs(const IndexFn& moment, std::size_t n, int k, int m) {
  const int L = 2 * k + m;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ipow(n, L)));
  std::vector<std::size_t> idx(L, 0);
  do {
    double total = 0.0;
    // Inclusion-exclusion over the pairs replaced by -Sigma.
    for (unsigned S = 0; S < (1u << k); ++S) {
      double term = (std::popcount(S) % 2) ? -1.0 : 1.0;
      std::vector<std::size_t> rest;
      for (int t = 0; t < k; ++t) {
        if (S & (1u << t)) {
          const std::size_t pair[2] = {idx[2 * t], idx[2 * t + 1]};
          term *= moment(pair);
        } else {
          rest.push_back(idx[2 * t]);
          rest.push_back(idx[2 * t + 1]);
        }
      }
      for (int t = 2 * k; t < L; ++t) rest.push_back(idx[t]);
      total += term * moment(rest);
    }
    out.push_back(total);
  } while (next_index(idx, n));
  return out;
}

std::vector<double> identity_rhs(const IndexFn& cumulant, std::size_t n, int k, int m) {
  const int L = 2 * k + m;
  const auto parts = restricted_partitions(k, m);
  std::vector<double> out;
  std::vector<std::size_t> idx(L, 0);
  do {
    double total = 0.0;
    for (const auto& p : parts) {
      double prod = 1.0;
      for (const auto& block : p) {
        std::vector<std::size_t> sub;
        for (int pos : block) sub.push_back(idx[pos]);
        prod *= cumulant(sub);
        if (prod == 0.0) break;
      }
      total += prod;
    }
    out.push_back(total);
  } while (next_index(idx, n));
  return out;
}

void check_identity_args(std::size_t n, int k, int m) {
  if (k < 0 || m < 0 || 2 * k + m < 1 || 2 * k + m > kMaxCumulantOrder)
    throw Error(ErrorCode::InvalidArgument, "identity check needs 1 <= 2k + m <= 6");
  check_storage(n, 2 * k + m);
}

}  // namespace

IdentityCheck moment_tensor_identity_check(const TensorLaw& lhs, const TensorLaw& rhs, int k, int m) {
  if (lhs.n != rhs.n) throw Error(ErrorCode::InvalidArgument, "laws differ in dimension");
  check_identity_args(lhs.n, k, m);
  const auto a = identity_lhs(lhs.moment, lhs.n, k, m);
  const auto b = identity_rhs(rhs.cumulant, rhs.n, k, m);
  IdentityCheck r;
  for (std::size_t e = 0; e < a.size(); ++e) {
    r.residual = std::max(r.residual, std::abs(a[e] - b[e]));
    r.max_abs_lhs = std::max(r.max_abs_lhs, std::abs(a[e]));
  }
  return r;
}

IdentityCheck moment_tensor_identity_check(const Matrix& samples, const TensorLaw& rhs, int k, int m) {
  const std::size_t n = samples.rows();
  if (n != rhs.n) throw Error(ErrorCode::InvalidArgument, "sample dimension differs from the law");
  check_identity_args(n, k, m);
  const int L = 2 * k + m;
  check_sample_input(samples, L);
  const BlockMoments bm = block_moments(samples, L);
  auto lhs_from = [&](const MomentTable& mt) {
    return identity_lhs([&mt](std::span<const std::size_t> idx) {
      return mt(std::vector<std::size_t>(idx.begin(), idx.end()));
    }, n, k, m);
  };
  const auto a = lhs_from(bm.table());
  std::vector<std::vector<double>> leave;
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) leave.push_back(lhs_from(bm.table(b)));
  const auto se = jackknife_stderr(leave);
  const auto b = identity_rhs(rhs.cumulant, n, k, m);
  IdentityCheck r;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const double d = std::abs(a[e] - b[e]);
    r.residual = std::max(r.residual, d);
    r.max_abs_lhs = std::max(r.max_abs_lhs, std::abs(a[e]));
    if (se[e] > 0.0) r.max_z = std::max(r.max_z, d / se[e]);
    else if (d > 1e-12) r.max_z = std::max(r.max_z, 1e300);
  }
  return r;
}

// --- U-norm and the ratio sweep -----------------------------------------------------

DirectionSet::DirectionSet(std::size_t n, const std::vector<Vector>& extra, double bound, std::size_t cap)
    : n_(n), bound_(bound) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "direction set dimension must be positive");
  if (!(bound >= 1.0)) throw Error(ErrorCode::InvalidArgument, "norm bound must be >= 1 to admit the basis");
  for (std::size_t i = 0; i < n; ++i) vectors_.push_back(Vector::Unit(n, i));
  for (const auto& v : extra) {
    if (static_cast<std::size_t>(v.size()) != n) throw Error(ErrorCode::InvalidArgument, "direction has wrong length");
    if (v.norm() > bound * (1.0 + 1e-12)) throw Error(ErrorCode::InvalidArgument, "direction exceeds the norm bound");
    vectors_.push_back(v);
  }
  if (vectors_.size() > cap) throw Error(ErrorCode::WorkCap, "direction set exceeds its cardinality cap");
}

namespace {

double u_norm_rec(const Tensor& T, const DirectionSet& dirs) {
  if (T.order == 0) return std::abs(T.data[0]);
  double best = 0.0;
  for (const auto& v : dirs.vectors()) best = std::max(best, u_norm_rec(T.contract_first(v), dirs));
  return best;
}

}  // namespace

double u_norm(const Tensor& T, const DirectionSet& dirs, double work_cap) {
  if (T.n != dirs.n()) throw Error(ErrorCode::InvalidArgument, "tensor and direction set differ in dimension");
  if (ipow(dirs.vectors().size(), T.order) > work_cap)
    throw Error(ErrorCode::WorkCap, "|U|^q exceeds the enumeration cap");
  return u_norm_rec(T, dirs);
}

double assumption_ratio(const Tensor& kappa, const std::vector<Vector>& s, const Tensor& T,
                        const DirectionSet& dirs) {
  const int k = kappa.order;
  const int m = static_cast<int>(s.size());
  if (m < 1 || m > k - 1) throw Error(ErrorCode::InvalidArgument, "split m must satisfy 1 <= m <= k - 1");
  if (T.order != k - m) throw Error(ErrorCode::InvalidArgument, "T must have order k - m");
  Tensor c = kappa;
  double snorm = 1.0;
  for (const auto& v : s) {
    c = c.contract_first(v);
    snorm *= v.norm();
  }
  const double num = std::abs(c.dot(T));
  const double tn = u_norm(T, dirs);
  if (tn == 0.0 || snorm == 0.0) return 0.0;
  return num / (std::pow(std::sqrt(static_cast<double>(kappa.n)), k - m - 1) * tn * snorm);
}

RatioSweep assumption_ratio_sweep(const Tensor& kappa, const DirectionSet& dirs, std::size_t trials,
                                  std::uint64_t seed) {
  const std::size_t n = kappa.n;
  const int k = kappa.order;
  RatioSweep best;
  auto gaussian_unit = [n](Stream& rng) {
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v(i) = rng.normal();
    return Vector(v / v.norm());
  };
  for (int m = 1; m <= k - 1; ++m) {
    for (std::size_t t = 0; t < trials; ++t) {
      Stream rng = Stream::substream(seed, static_cast<std::uint64_t>(m) * 1000003u + t);
      std::vector<Vector> s;
      for (int j = 0; j < m; ++j) s.push_back(gaussian_unit(rng));

      Tensor random = Tensor::zeros(k - m, n);
      for (double& x : random.data) x = rng.normal();

      const Vector u = gaussian_unit(rng);
      Tensor rank1 = Tensor::zeros(k - m, n);
      std::vector<std::size_t> idx(k - m, 0);
      do {
        double p = 1.0;
        for (std::size_t i : idx) p *= u(i);
        rank1.data[rank1.flat(idx)] = p;
      } while (next_index(idx, n));

      Tensor contraction = kappa;
      for (const auto& v : s) contraction = contraction.contract_first(v);

      const std::pair<const char*, const Tensor*> fams[] = {
          {"random", &random}, {"rank1", &rank1}, {"contraction", &contraction}};
      for (const auto& [name, T] : fams) {
        const double r = assumption_ratio(kappa, s, *T, dirs);
        if (r > best.max_ratio) best = {r, m, name};
      }
    }
  }
  return best;
}

}  // namespace covlaw
