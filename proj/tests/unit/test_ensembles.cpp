#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "covlaw/ensembles.hpp"
#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"

using namespace covlaw;

namespace {

Matrix sample_cov(const Matrix& G) { return G * G.transpose() / static_cast<double>(G.cols()); }

RandomFeatures square_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  RandomFeatures rf;
  rf.X = random_orthogonal_columns(d, n, seed).transpose();  // n x d, unit rows when n <= d
  rf.activation = {Polynomial{Polynomial::Basis::Power, {-1.0, 0.0, 1.0}}};
  return rf;
}

}  // namespace

TEST_CASE("samples are a pure function of the seed and agree serial vs parallel") {
  const std::vector<EnsembleSpec> specs{
      Separable{random_orthogonal_columns(6, 6, 1), {EntryLaw::Rademacher, 0}},
      Sphere{5},
      Mixture{5, 0.5},
      square_features(4, 6, 2),
      ChaosPairs{6, 2},
  };
  for (const auto& spec : specs) {
    const Matrix a = sample(spec, 64, 99, Execution::Serial);
    const Matrix b = sample(spec, 64, 99, Execution::Parallel);
    const Matrix c = sample(spec, 64, 99);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a != sample(spec, 64, 100));
    // Column j only depends on (seed, j).
    CHECK(sample(spec, 16, 99).col(7) == a.col(7));
  }
}

TEST_CASE("sphere columns have squared norm d") {
  const Matrix G = sample(Sphere{16}, 200, 3);
  for (Eigen::Index j = 0; j < G.cols(); ++j) CHECK(G.col(j).squaredNorm() == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("mixture has identity covariance") {
  const std::size_t d = 8, reps = 100000;
  const Matrix G = sample(Mixture{d, 0.5}, reps, 4);
  std::vector<double> r(reps);
  double s = 0, s2 = 0;
  for (std::size_t j = 0; j < reps; ++j) {
    r[j] = G.col(j).squaredNorm() / static_cast<double>(d);
    s += r[j];
    s2 += r[j] * r[j];
  }
  const double m = s / reps, se = std::sqrt((s2 / reps - m * m) / reps);
  CHECK(std::abs(m - 1.0) <= 3.0 * se);
}

TEST_CASE("separable gaussian covariance by the law of large numbers") {
  const Matrix G = sample(Separable{Matrix::Identity(4, 4), {}}, 1000000, 5);
  CHECK((sample_cov(G) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 5e-3);
  const Matrix A = gaussian_scaled(3, 5, 6);
  CHECK((population_covariance(Separable{A, {}}).matrix - A * A.transpose()).norm() == 0.0);
}

TEST_CASE("random features covariance") {
  SUBCASE("x^2 - 1 with unit rows gives 2 (x_i . x_j)^2") {
    const auto rf = square_features(5, 7, 8);
    const auto pc = population_covariance(rf);
    CHECK(pc.provenance == Provenance::Quadrature);
    const Matrix gram = rf.X * rf.X.transpose();
    CHECK((pc.matrix - 2.0 * gram.cwiseProduct(gram)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(random_features_mean(rf).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("Rademacher w: exact mean matches Monte Carlo and estimate is flagged") {
    auto rf = square_features(3, 4, 9);
    rf.entry = {EntryLaw::Rademacher, 0};
    rf.activation = {Polynomial{Polynomial::Basis::Power, {0.0, 0.0, 0.0, 0.0, 1.0}}};
    rf.centered = false;
    const Matrix G = sample(rf, 200000, 10);
    const Vector mc = G.rowwise().mean();
    const Vector exact = random_features_mean(rf);
    CHECK((mc - exact).cwiseAbs().maxCoeff() < 0.02 * exact.cwiseAbs().maxCoeff());
    CHECK_THROWS_AS(population_covariance(rf), Error);
    const auto est = estimate_covariance(rf, 2000, 11);
    CHECK(est.provenance == Provenance::SampleEstimate);
    CHECK(est.estimate_error.has_value());
  }
  SUBCASE("Hermite basis") {
    const Polynomial he2{Polynomial::Basis::Hermite, {0.0, 0.0, 1.0}};
    const auto pw = he2.power_coefficients();
    REQUIRE(pw.size() == 3);
    CHECK(pw[0] == -1.0);
    CHECK(pw[1] == 0.0);
    CHECK(pw[2] == 1.0);
    CHECK(he2(2.0) == 3.0);
  }
}

TEST_CASE("chaos pairs covariance is the identity") {
  const ChaosPairs cp{6, 2};
  const auto pairs = chaos_pairs(6, 2);
  CHECK(pairs.size() == 5 + 4);
  for (const auto& [i, j] : pairs) {
    CHECK(i < j);
    CHECK(j <= std::min(i + 2, std::size_t{5}));
  }
  CHECK(population_covariance(cp).matrix == Matrix::Identity(9, 9));
  const Matrix G = sample(cp, 400000, 12);
  CHECK((sample_cov(G) - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("quadratic form fluctuations") {
  SUBCASE("gaussian chaos variance oracle") {
    for (std::size_t n : {64, 256}) {
      const Matrix Q = random_orthogonal_columns(n, n / 2, 13);
      const Matrix A = Q * Q.transpose();
      const auto st = quadratic_form_stats(Separable{Matrix::Identity(n, n), {}}, A, 2000, 14);
      // 2 |A|_F^2 / |A|_F^2 = 2 for Sigma = I.
      CHECK(st.variance >= 0.5);
      CHECK(st.variance <= 8.0);
      CHECK(std::abs(st.mean) < 0.2);
    }
  }
  SUBCASE("chaos pairs variance grows with M") {
    const std::size_t d = 32;
    double prev = 0.0;
    for (std::size_t M : {2, 8, 31}) {
      const ChaosPairs cp{d, M};
      const std::size_t n = chaos_pairs(d, M).size();
      const auto st = quadratic_form_stats(cp, Matrix::Identity(n, n), 2000, 15);
      CHECK(st.variance > prev);
      prev = st.variance;
    }
  }
}

TEST_CASE("gibbs tilt hessian bounds") {
  GibbsTilt gt;
  gt.X = gaussian_scaled(6, 4, 16);
  gt.sigma = {ScalarFunction{}};
  gt.lambda = 0.0;
  const auto b0 = gibbs_hessian_bounds(gt);
  CHECK(b0.lower == doctest::Approx(1.0));
  CHECK(b0.upper == doctest::Approx(1.0));
  gt.lambda = 0.05;
  const double op = operator_norm(gt.X);
  const auto b = gibbs_hessian_bounds(gt, 1);
  CHECK(b.lower >= 1.0 - 2.0 * gt.lambda * op * op);
  CHECK(b.upper <= 1.0 + 2.0 * gt.lambda * op * op);
  gt.lambda = 1e4;
  try {
    gibbs_hessian_bounds(gt, 1);
    FAIL("expected NotLogConcave");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotLogConcave);
  }
}

TEST_CASE("gibbs sampler at lambda = 0 is standard gaussian") {
  GibbsTilt gt;
  gt.X = gaussian_scaled(3, 4, 17);
  gt.sigma = {ScalarFunction{}};
  gt.lambda = 0.0;
  gt.mcmc.burn_in = 2000;
  McmcDiagnostics diag;
  const Matrix W = sample_gibbs(gt, 4000, 18, &diag);
  CHECK(W.rows() == 4);
  CHECK(diag.acceptance > 0.2);
  CHECK((sample_cov(W) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.15);
  CHECK(sample_gibbs(gt, 50, 18) == sample_gibbs(gt, 50, 18));
}

TEST_CASE("entry law validation") {
  CHECK_THROWS_AS((EntryDistribution{EntryLaw::StudentT, 3}.validate()), Error);
  CHECK_NOTHROW((EntryDistribution{EntryLaw::StudentT, 12}.validate()));
  CHECK(EntryDistribution{EntryLaw::Rademacher, 0}.raw_moment(4) == 1.0);
  CHECK(EntryDistribution{EntryLaw::Gaussian, 0}.raw_moment(4) == 3.0);
}

TEST_CASE("COVL matrix files roundtrip") {
  const auto path = (std::filesystem::temp_directory_path() / "covlaw_test_matrix.covl").string();
  const Matrix M = gaussian_scaled(3, 5, 19);
  write_covl(path, M);
  CHECK(read_covl(path) == M);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_covl(path), Error);
}
