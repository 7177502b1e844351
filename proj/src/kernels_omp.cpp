#include "covlaw/kernels.hpp"

#include "contraction_layout.hpp"

namespace covlaw::kernels {

std::vector<cplx> sample_entries_omp(const Eigen::MatrixXd& V, const std::vector<cplx>& w, cplx z,
                                     const IndexPairs& pairs) {
  std::vector<cplx> out(pairs.size());
  const Eigen::Index r = V.cols();
  const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < P; ++p) {
    const auto [i, j] = pairs[p];
    cplx acc = 0.0;
    for (Eigen::Index a = 0; a < r; ++a) acc += V(i, a) * V(j, a) * w[a];
    out[p] = i == j ? acc - 1.0 / z : acc;
  }
  return out;
}

std::vector<std::vector<double>> raw_moments_omp(const Eigen::MatrixXd& X, int k_max) {
  const std::size_t n = X.rows();
  std::vector<std::vector<double>> acc(k_max);
  std::size_t size = 1;
  for (int k = 0; k < k_max; ++k) {
    size *= n;
    acc[k].assign(size, 0.0);
  }
  const std::ptrdiff_t lead = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i0 = 0; i0 < lead; ++i0) {
    // Slice of each order whose leading index is i0: n^{k-1} entries.
    std::vector<std::vector<double>> level(k_max);
    std::size_t slice = 1;
    for (int k = 0; k < k_max; ++k) {
      level[k].resize(slice);
      slice *= n;
    }
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      level[0][0] = X(i0, c);
      for (int k = 1; k < k_max; ++k) {
        const auto& prev = level[k - 1];
        auto& cur = level[k];
        for (std::size_t a = 0; a < prev.size(); ++a)
          for (std::size_t i = 0; i < n; ++i) cur[a * n + i] = prev[a] * X(i, c);
      }
      std::size_t width = 1;
      for (int k = 0; k < k_max; ++k) {
        double* dst = acc[k].data() + static_cast<std::size_t>(i0) * width;
        for (std::size_t e = 0; e < width; ++e) dst[e] += level[k][e];
        width *= n;
      }
    }
  }
  return acc;
}

std::vector<double> contract_pair_omp(const std::vector<double>& A, int a_order,
                                      const std::vector<double>& B, int b_order, std::size_t n,
                                      const std::vector<std::pair<int, int>>& shared) {
  const detail::PairLayout layout(a_order, b_order, n, shared);
  std::vector<double> out(layout.result_size);
  const std::ptrdiff_t R = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < R; ++r) out[r] = layout.entry(A.data(), B.data(), r);
  return out;
}

}  // namespace covlaw::kernels
