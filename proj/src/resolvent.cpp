#include "covlaw/resolvent.hpp"

#include <algorithm>
#include <cmath>

#include <lapacke.h>

#include "covlaw/error.hpp"
#include "covlaw/kernels.hpp"
#include "covlaw/rng.hpp"
#include "covlaw/stats.hpp"

namespace covlaw {

namespace {

using CVector = Eigen::VectorXcd;

std::vector<cplx> spectral_weights(const SpectralSample& s, cplx z) {
  std::vector<cplx> w(s.r());
  for (std::size_t a = 0; a < s.r(); ++a) w[a] = 1.0 / (s.s(a) * s.s(a) - z);
  return w;
}

Vector unit_random(std::size_t n, Stream& rng) {
  Vector v(n);
  for (std::size_t k = 0; k < n; ++k) v(k) = rng.normal();
  return v / v.norm();
}

// u1^T R u2 from the population-side SVD factors.
cplx population_bilinear_from(const Matrix& U, const std::vector<cplx>& w, cplx z, const Vector& u1,
                              const Vector& u2) {
  const Vector a = U.transpose() * u1, b = U.transpose() * u2;
  cplx acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) acc += a(k) * b(k) * w[k];
  return acc - (u1.dot(u2) - a.dot(b)) / z;
}

}  // namespace

std::vector<double> SpectralSample::eigenvalues() const {
  std::vector<double> ev(r());
  for (std::size_t a = 0; a < r(); ++a) ev[a] = s(a) * s(a);
  return ev;
}

SpectralSample decompose(const Matrix& G) {
  if (!G.allFinite()) throw Error(ErrorCode::InvalidArgument, "data matrix has non-finite entries");
  const lapack_int n = static_cast<lapack_int>(G.rows()), N = static_cast<lapack_int>(G.cols());
  if (n == 0 || N == 0) throw Error(ErrorCode::InvalidArgument, "empty data matrix");
  const lapack_int r = std::min(n, N);
  Matrix Y = G / std::sqrt(static_cast<double>(N));
  SpectralSample out;
  out.n = n;
  out.N = N;
  out.s.resize(r);
  out.U.resize(n, r);
  Matrix VT(r, N);
  const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', n, N, Y.data(), n, out.s.data(),
                                         out.U.data(), n, VT.data(), r);
  if (info != 0) throw Error(ErrorCode::NumericalFailure, "SVD did not converge (info " + std::to_string(info) + ")");
  out.V = VT.transpose();
  return out;
}

StieltjesPair stieltjes(const SpectralSample& sample, cplx z) {
  if (z == cplx(0.0)) throw Error(ErrorCode::InvalidPoint, "z = 0");
  cplx acc = 0.0;
  for (std::size_t a = 0; a < sample.r(); ++a) acc += 1.0 / (sample.s(a) * sample.s(a) - z);
  const double n = static_cast<double>(sample.n), N = static_cast<double>(sample.N);
  const double r = static_cast<double>(sample.r());
  return {(acc + (n - r) * (-1.0 / z)) / n, (acc + (N - r) * (-1.0 / z)) / N};
}

cplx companion_residual(const SpectralSample& sample, cplx z) {
  const auto [m, mt] = stieltjes(sample, z);
  const double gamma = static_cast<double>(sample.n) / static_cast<double>(sample.N);
  return gamma * m - mt - (gamma - 1.0) * (-1.0 / z);
}

cplx linearized_bilinear(const SpectralSample& sample, cplx z, const BilinearVectors& q) {
  const std::size_t r = sample.r();
  const std::vector<cplx> w = spectral_weights(sample, z);
  cplx total = 0.0;
  Vector a1, a2, b1, b2;  // U^T u and V^T v
  if (q.u1) a1 = sample.U.transpose() * *q.u1;
  if (q.u2) a2 = sample.U.transpose() * *q.u2;
  if (q.v1) b1 = sample.V.transpose() * *q.v1;
  if (q.v2) b2 = sample.V.transpose() * *q.v2;
  if (q.u1 && q.u2) total += population_bilinear_from(sample.U, w, z, *q.u1, *q.u2);
  if (q.u1 && q.v2)
    for (std::size_t k = 0; k < r; ++k) total += a1(k) * b2(k) * sample.s(k) * w[k];
  if (q.v1 && q.u2)
    for (std::size_t k = 0; k < r; ++k) total += b1(k) * a2(k) * sample.s(k) * w[k];
  if (q.v1 && q.v2) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < r; ++k) acc += b1(k) * b2(k) * z * w[k];
    total += acc - (q.v1->dot(*q.v2) - b1.dot(b2));
  }
  return total;
}

std::vector<cplx> sample_resolvent_entries(const SpectralSample& sample, cplx z,
                                           const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  for (const auto& [i, j] : pairs)
    if (i >= sample.N || j >= sample.N) throw Error(ErrorCode::InvalidArgument, "entry index out of range");
  std::vector<cplx> w = spectral_weights(sample, z);
  for (auto& x : w) x += 1.0 / z;
  return kernels::sample_entries_omp(sample.V, w, z, pairs);
}

std::vector<cplx> sample_resolvent_diagonal(const SpectralSample& sample, cplx z) {
  std::vector<cplx> w = spectral_weights(sample, z);
  for (auto& x : w) x += 1.0 / z;
  std::vector<cplx> d(sample.N);
  for (std::size_t i = 0; i < sample.N; ++i) {
    cplx acc = 0.0;
    for (std::size_t a = 0; a < sample.r(); ++a) acc += sample.V(i, a) * sample.V(i, a) * w[a];
    d[i] = acc - 1.0 / z;
  }
  return d;
}

double ward_residual(const SpectralSample& sample, cplx z) {
  const double eta = z.imag();
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidPoint, "Ward identity needs eta > 0");
  const std::vector<cplx> w = spectral_weights(sample, z);
  const double zero_modes = static_cast<double>(sample.n - sample.r());
  double fro = zero_modes / std::norm(z);
  for (const cplx& x : w) fro += std::norm(x);
  double trace_im = 0.0;
  const cplx c = -1.0 / z;
  for (std::size_t i = 0; i < sample.n; ++i) {
    cplx acc = 0.0;
    double mass = 0.0;
    for (std::size_t a = 0; a < sample.r(); ++a) {
      const double u2 = sample.U(i, a) * sample.U(i, a);
      acc += u2 * w[a];
      mass += u2;
    }
    trace_im += (acc + c * (1.0 - mass)).imag();
  }
  return std::abs(fro - trace_im / eta) / fro;
}

double schur_block_residual(const Matrix& G, const SpectralSample& sample, cplx z, std::size_t pairs,
                            std::uint64_t seed) {
  const std::size_t N = sample.N;
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  Matrix V1(N, pairs), V2(N, pairs);
  Stream rng = Stream::substream(seed, 0x5c);
  for (std::size_t p = 0; p < pairs; ++p) {
    V1.col(p) = unit_random(N, rng);
    V2.col(p) = unit_random(N, rng);
  }
  const Matrix Y1 = (G * V1) * scale, Y2 = (G * V2) * scale;
  const std::vector<cplx> w = spectral_weights(sample, z);
  double worst = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    BilinearVectors q;
    q.v1 = V1.col(p);
    q.v2 = V2.col(p);
    const cplx lhs = linearized_bilinear(sample, z, q);
    const cplx rhs = population_bilinear_from(sample.U, w, z, Y1.col(p), Y2.col(p)) - V1.col(p).dot(V2.col(p));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  return worst;
}

double sherman_morrison_residual(const Matrix& G, const SpectralSample& sample, cplx z, std::size_t column,
                                 std::size_t probes, std::uint64_t seed) {
  const std::size_t n = sample.n, N = sample.N;
  if (column >= N) throw Error(ErrorCode::InvalidArgument, "column index out of range");
  // R^{(i)} keeps the 1/N normalization of the full sample.
  Matrix Gi(n, N - 1);
  Gi << G.leftCols(column), G.rightCols(N - 1 - column);
  const Matrix Yi = Gi / std::sqrt(static_cast<double>(N));
  const lapack_int rn = static_cast<lapack_int>(n), rN = static_cast<lapack_int>(N - 1);
  const lapack_int r = std::min(rn, rN);
  Matrix A = Yi;
  Vector s(r);
  Matrix U(n, r), VT(r, N - 1);
  if (LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', rn, rN, A.data(), rn, s.data(), U.data(), rn, VT.data(), r) != 0)
    throw Error(ErrorCode::NumericalFailure, "leave-one-out SVD did not converge");
  std::vector<cplx> wi(r);
  for (lapack_int a = 0; a < r; ++a) wi[a] = 1.0 / (s(a) * s(a) - z);
  const std::vector<cplx> w = spectral_weights(sample, z);

  // R^{(i)} x as a complex vector.
  auto apply_Ri = [&](const Vector& x) {
    const Vector a = U.transpose() * x;
    CVector out = (-1.0 / z) * (x - U * a).cast<cplx>();
    for (lapack_int k = 0; k < r; ++k) out += U.col(k).cast<cplx>() * (a(k) * wi[k]);
    return out;
  };
  const Vector g = G.col(column);
  const CVector Rg = apply_Ri(g);
  const cplx denom = 1.0 + g.cast<cplx>().dot(Rg) / static_cast<double>(N);  // R^{(i)} symmetric

  Stream rng = Stream::substream(seed, 0x53);
  double worst = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    const Vector u1 = unit_random(n, rng), u2 = unit_random(n, rng);
    const cplx direct = population_bilinear_from(sample.U, w, z, u1, u2);
    const CVector Ru2 = apply_Ri(u2);
    const cplx base = (u1.cast<cplx>().transpose() * Ru2)(0);
    const cplx left = (u1.cast<cplx>().transpose() * Rg)(0);
    const cplx right = (g.cast<cplx>().transpose() * Ru2)(0);
    const cplx updated = base - left * right / (static_cast<double>(N) * denom);
    worst = std::max(worst, std::abs(direct - updated) / std::max(1.0, std::abs(direct)));
  }
  return worst;
}

PopulationBasis population_basis(const Matrix& covariance) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(covariance);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "covariance eigensolver failed");
  const Eigen::Index n = covariance.rows();
  PopulationBasis b;
  b.O.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // Ascending from Eigen; store descending and clip round-off negatives.
    b.sigma.push_back(std::max(0.0, es.eigenvalues()(n - 1 - k)));
    b.O.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return b;
}

PopulationBasis identity_basis(std::size_t n, double scale) {
  return {std::vector<double>(n, scale), Matrix::Identity(n, n)};
}

cplx deterministic_bilinear(const DeterministicEquivalent& de, const PopulationBasis& basis,
                            const BilinearVectors& q) {
  cplx total = 0.0;
  if (q.u1 && q.u2) {
    const Vector a = basis.O.transpose() * *q.u1, b = basis.O.transpose() * *q.u2;
    total += de.population_bilinear(std::span<const double>(a.data(), a.size()),
                                    std::span<const double>(b.data(), b.size()));
  }
  if (q.v1 && q.v2) total += de.sample_scalar * q.v1->dot(*q.v2);
  return total;
}

LocalLawRecord local_law_record(const SpectralSample& sample, SpectralPoint point,
                                const EquilibriumSolution& solution, const SpectrumModel& model,
                                const SupportProfile& profile, const PopulationBasis& basis,
                                const std::vector<BilinearVectors>& queries, std::size_t entrywise_probe_count,
                                std::uint64_t seed) {
  if (!(point.eta > 0.0)) throw Error(ErrorCode::InvalidPoint, "local-law records need eta > 0");
  if (sample.n != model.n() || sample.N != model.N())
    throw Error(ErrorCode::IndexMismatch, "sample dimensions differ from the spectrum model");
  const cplx z = point.z();
  LocalLawRecord rec;
  rec.point = point;
  rec.m_tilde = stieltjes(sample, z).m_tilde;
  rec.m_tilde0 = solution.m_tilde0;
  rec.kappa = profile.kappa(point.E);
  rec.psi = error_parameter(point, solution, sample.N).psi;
  rec.averaged_error = std::abs(rec.m_tilde - rec.m_tilde0);
  rec.averaged_bound = rec.psi * rec.psi / (std::sqrt(rec.kappa + point.eta) + rec.psi);

  double entry = 0.0;
  for (const cplx& d : sample_resolvent_diagonal(sample, z)) entry = std::max(entry, std::abs(d - rec.m_tilde0));
  Stream rng = Stream::substream(seed, 0xe17);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(entrywise_probe_count);
  while (pairs.size() < entrywise_probe_count) {
    const std::size_t i = rng.next_u64() % sample.N, j = rng.next_u64() % sample.N;
    if (i != j) pairs.emplace_back(i, j);
  }
  for (const cplx& e : sample_resolvent_entries(sample, z, pairs)) entry = std::max(entry, std::abs(e));
  rec.entrywise_error = entry;

  const DeterministicEquivalent de = deterministic_equivalent(point, solution, model);
  for (const auto& q : queries) {
    const double err = std::abs(linearized_bilinear(sample, z, q) - deterministic_bilinear(de, basis, q));
    rec.anisotropic_errors.push_back(err);
    rec.anisotropic_error = std::max(rec.anisotropic_error, err);
  }
  rec.ratio_averaged = rec.averaged_error / rec.averaged_bound;
  rec.ratio_entrywise = rec.entrywise_error / rec.psi;
  rec.ratio_anisotropic = rec.anisotropic_error / rec.psi;
  rec.self_consistency_residual = std::abs(z0_eval(rec.m_tilde, model) - z);
  rec.ward_residual = ward_residual(sample, z);
  rec.companion_residual = std::abs(companion_residual(sample, z));
  return rec;
}

OutsideRecord outside_spectrum_record(const SpectralSample& sample, SpectralPoint point,
                                      const SpectrumModel& model, const SupportProfile& profile,
                                      const PopulationBasis& basis, const std::vector<BilinearVectors>& queries,
                                      double delta) {
  const cplx z = point.z();
  OutsideRecord rec;
  rec.point = point;
  rec.distance = profile.distance(z);
  if (rec.distance < delta || std::abs(z) < delta)
    throw Error(ErrorCode::InsideSpectrum, "point closer than delta to the support or to 0");
  const EquilibriumSolution sol = solve_mp_extended(point, model);
  const StieltjesPair emp = stieltjes(sample, z);
  rec.population_error = std::abs(emp.m - sol.m0);
  rec.sample_error = std::abs(emp.m_tilde - sol.m_tilde0);
  const DeterministicEquivalent de = deterministic_equivalent(point, sol, model);
  for (const auto& q : queries) {
    const double err = std::abs(linearized_bilinear(sample, z, q) - deterministic_bilinear(de, basis, q));
    rec.bilinear_errors.push_back(err);
    rec.bilinear_error = std::max(rec.bilinear_error, err);
  }
  const double N = static_cast<double>(sample.N);
  rec.ratio_averaged = rec.population_error * N;
  rec.ratio_bilinear = rec.bilinear_error * std::sqrt(N);
  rec.companion_residual = std::abs(companion_residual(sample, z));
  return rec;
}

RigidityStats rigidity_stats(const SpectralSample& sample, const SupportProfile& profile,
                             const SpectrumModel& model, const QuantileTable& table) {
  if (sample.r() != std::min(model.n(), model.N()) || sample.N != model.N())
    throw Error(ErrorCode::IndexMismatch, "sample and model disagree on min(n, N)");
  const double N = static_cast<double>(sample.N);
  RigidityStats st;
  for (std::size_t i = 1; i <= table.max_index(); ++i) {
    const double lambda = sample.s(i - 1) * sample.s(i - 1);
    const double dev = std::abs(lambda - table.location(i));
    // Index distance to the nearest edge of the component holding i.
    double k = 1.0;
    for (std::size_t c = 0; c < profile.p; ++c) {
      const double top = profile.edge_counts.empty() ? 0.0 : profile.edge_counts[2 * c];
      const double bottom = profile.edge_counts.empty() ? N : profile.edge_counts[2 * c + 1];
      const double x = static_cast<double>(i);
      if (x > top && x <= bottom + 0.5) {
        k = std::max(1.0, std::min(x - top, bottom + 1.0 - x));
        break;
      }
    }
    st.index.push_back(i);
    st.deviation.push_back(dev);
    st.edge_scaled.push_back(dev / (std::pow(k, -1.0 / 3.0) * std::pow(N, -2.0 / 3.0)));
    st.bulk_scaled.push_back(dev * N);
  }
  return st;
}

DelocalizationStats delocalization_stats(const SpectralSample& sample, double lo, double hi,
                                         const std::vector<Vector>& sample_vectors,
                                         const std::vector<Vector>& population_vectors) {
  DelocalizationStats st;
  std::vector<std::size_t> chosen;
  for (std::size_t a = 0; a < sample.r(); ++a) {
    const double ev = sample.s(a) * sample.s(a);
    if (ev > 0.0 && ev >= lo && ev <= hi) chosen.push_back(a);
  }
  if (chosen.empty()) throw Error(ErrorCode::EmptyWindow, "no eigenvalue inside the window");
  const double sqN = std::sqrt(static_cast<double>(sample.N)), sqn = std::sqrt(static_cast<double>(sample.n));
  for (std::size_t idx = 0; idx < chosen.size(); ++idx) {
    const std::size_t a = chosen[idx];
    const double ev = sample.s(a) * sample.s(a);
    if (idx > 0) {
      const double prev = sample.s(chosen[idx - 1]) * sample.s(chosen[idx - 1]);
      if (std::abs(prev - ev) <= 1e-10 * std::max(1.0, ev)) st.degenerate = true;
    }
    st.eigenvalues.push_back(ev);
    st.sup_norm.push_back(sqN * sample.V.col(a).cwiseAbs().maxCoeff());
    double so = 0.0, po = 0.0;
    for (const auto& v : sample_vectors) so = std::max(so, sqN * std::abs(v.dot(sample.V.col(a))));
    for (const auto& u : population_vectors) po = std::max(po, sqn * std::abs(u.dot(sample.U.col(a))));
    st.sample_overlap.push_back(so);
    st.population_overlap.push_back(po);
  }
  st.max_sup_norm = *std::max_element(st.sup_norm.begin(), st.sup_norm.end());
  st.median_sup_norm = median(st.sup_norm);
  st.max_sample_overlap = *std::max_element(st.sample_overlap.begin(), st.sample_overlap.end());
  st.max_population_overlap = *std::max_element(st.population_overlap.begin(), st.population_overlap.end());
  return st;
}

}  // namespace covlaw
