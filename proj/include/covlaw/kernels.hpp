#pragma once

// Hot loops with a plain serial reference and an OpenMP version. The two are
// required to agree bit for bit; tests compare them and the benchmark times
// them against each other.

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace covlaw {
enum class Execution { Serial, Parallel };
}  // namespace covlaw

namespace covlaw::kernels {

using cplx = std::complex<double>;
using IndexPairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// R~_ij = sum_a V_ia V_ja w_a - delta_ij / z, with w_a = 1/(s_a^2 - z) + 1/z.
std::vector<cplx> sample_entries_serial(const Eigen::MatrixXd& V, const std::vector<cplx>& w, cplx z,
                                        const IndexPairs& pairs);
std::vector<cplx> sample_entries_omp(const Eigen::MatrixXd& V, const std::vector<cplx>& w, cplx z,
                                     const IndexPairs& pairs);

/// Raw moment sums: out[k-1][flat(i_1..i_k)] = sum over columns x of X
/// (n x reps) of x[i_1] ... x[i_k], row-major multi-index, for k = 1..k_max.
/// The OpenMP version splits the entries by leading index; every entry is
/// still summed over columns in order, so both versions agree exactly.
std::vector<std::vector<double>> raw_moments_serial(const Eigen::MatrixXd& X, int k_max);
std::vector<std::vector<double>> raw_moments_omp(const Eigen::MatrixXd& X, int k_max);

/// Contraction of two dense tensors over n^order index boxes (row-major).
/// `shared` pairs an axis of A with an axis of B; the result keeps the free
/// axes of A in order followed by the free axes of B. The OpenMP version
/// splits result entries across threads; each entry sums the shared box in
/// the same order as the serial version.
std::vector<double> contract_pair_serial(const std::vector<double>& A, int a_order,
                                         const std::vector<double>& B, int b_order, std::size_t n,
                                         const std::vector<std::pair<int, int>>& shared);
std::vector<double> contract_pair_omp(const std::vector<double>& A, int a_order,
                                      const std::vector<double>& B, int b_order, std::size_t n,
                                      const std::vector<std::pair<int, int>>& shared);

}  // namespace covlaw::kernels
