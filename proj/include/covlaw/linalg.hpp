#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace covlaw {

/// Probabilists' Gauss-Hermite rule (weights sum to 1) by Golub-Welsch.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussHermite& gauss_hermite64();

/// Largest singular value of a dense matrix.
double operator_norm(const Eigen::MatrixXd& A);

/// Q factor of a Gaussian matrix: rows x cols with orthonormal columns
/// (rows >= cols), signs fixed so the R diagonal is positive.
Eigen::MatrixXd random_orthogonal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Entries i.i.d. N(0, 1/cols).
Eigen::MatrixXd gaussian_scaled(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Dense matrix file: "COVL", u32 rows, u32 cols, u32 reserved (0), then
/// rows*cols little-endian doubles in row-major order.
Eigen::MatrixXd read_covl(const std::string& path);
void write_covl(const std::string& path, const Eigen::MatrixXd& M);

}  // namespace covlaw
