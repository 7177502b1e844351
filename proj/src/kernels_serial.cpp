#include "covlaw/kernels.hpp"

#include "contraction_layout.hpp"

namespace covlaw::kernels {

std::vector<cplx> sample_entries_serial(const Eigen::MatrixXd& V, const std::vector<cplx>& w, cplx z,
                                        const IndexPairs& pairs) {
  std::vector<cplx> out(pairs.size());
  const Eigen::Index r = V.cols();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    cplx acc = 0.0;
    for (Eigen::Index a = 0; a < r; ++a) acc += V(i, a) * V(j, a) * w[a];
    out[p] = i == j ? acc - 1.0 / z : acc;
  }
  return out;
}

std::vector<std::vector<double>> raw_moments_serial(const Eigen::MatrixXd& X, int k_max) {
  const std::size_t n = X.rows();
  std::vector<std::vector<double>> acc(k_max);
  std::vector<std::vector<double>> level(k_max);
  std::size_t size = 1;
  for (int k = 0; k < k_max; ++k) {
    size *= n;
    acc[k].assign(size, 0.0);
    level[k].resize(size);
  }
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) level[0][i] = X(i, c);
    for (int k = 1; k < k_max; ++k) {
      const auto& prev = level[k - 1];
      auto& cur = level[k];
      for (std::size_t a = 0; a < prev.size(); ++a)
        for (std::size_t i = 0; i < n; ++i) cur[a * n + i] = prev[a] * X(i, c);
    }
    for (int k = 0; k < k_max; ++k)
      for (std::size_t e = 0; e < acc[k].size(); ++e) acc[k][e] += level[k][e];
  }
  return acc;
}

std::vector<double> contract_pair_serial(const std::vector<double>& A, int a_order,
                                         const std::vector<double>& B, int b_order, std::size_t n,
                                         const std::vector<std::pair<int, int>>& shared) {
  const detail::PairLayout layout(a_order, b_order, n, shared);
  std::vector<double> out(layout.result_size);
  const std::ptrdiff_t R = static_cast<std::ptrdiff_t>(out.size());
  for (std::ptrdiff_t r = 0; r < R; ++r) out[r] = layout.entry(A.data(), B.data(), r);
  return out;
}

}  // namespace covlaw::kernels
