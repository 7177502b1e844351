#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/rng.hpp"

namespace covlaw {

static_assert(std::endian::native == std::endian::little, "COVL files assume a little-endian host");

const GaussHermite& gauss_hermite64() {
  static const GaussHermite rule = [] {
    constexpr int n = 64;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k - 1, k) = J(k, k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermite r;
    for (int k = 0; k < n; ++k) {
      r.nodes.push_back(es.eigenvalues()(k));
      const double v = es.eigenvectors()(0, k);
      r.weights.push_back(v * v);
    }
    // Symmetrize: the rule is exactly symmetric, round-off is not.
    for (int k = 0; k < n / 2; ++k) {
      const double x = 0.5 * (r.nodes[n - 1 - k] - r.nodes[k]);
      const double w = 0.5 * (r.weights[k] + r.weights[n - 1 - k]);
      r.nodes[k] = -x;
      r.nodes[n - 1 - k] = x;
      r.weights[k] = r.weights[n - 1 - k] = w;
    }
    double total = 0.0;
    for (double w : r.weights) total += w;
    for (double& w : r.weights) w /= total;
    return r;
  }();
  return rule;
}

double operator_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

Eigen::MatrixXd gaussian_scaled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Eigen::MatrixXd M(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (std::size_t c = 0; c < cols; ++c) {
    Stream s = Stream::substream(seed, c);
    for (std::size_t r = 0; r < rows; ++r) M(r, c) = s.normal() * scale;
  }
  return M;
}

Eigen::MatrixXd random_orthogonal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < cols) return random_orthogonal_columns(cols, rows, seed).transpose();
  Eigen::MatrixXd G(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    Stream s = Stream::substream(seed, c);
    for (std::size_t r = 0; r < rows; ++r) G(r, c) = s.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd& R = qr.matrixQR();
  for (std::size_t c = 0; c < cols; ++c) {
    if (R(c, c) < 0.0) Q.col(c) = -Q.col(c);
  }
  return Q;
}

namespace {
constexpr char kMagic[4] = {'C', 'O', 'V', 'L'};
}

Eigen::MatrixXd read_covl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  char magic[4];
  std::uint32_t header[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::IoError, path + ": not a COVL matrix file");
  if (header[2] != 0) throw Error(ErrorCode::IoError, path + ": nonzero reserved header field");
  const std::size_t rows = header[0], cols = header[1];
  std::vector<double> buf(rows * cols);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::IoError, path + ": truncated payload");
  Eigen::MatrixXd M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) M(r, c) = buf[r * cols + c];
  return M;
}

void write_covl(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(M.rows()), static_cast<std::uint32_t>(M.cols()), 0};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      const double v = M(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace covlaw
