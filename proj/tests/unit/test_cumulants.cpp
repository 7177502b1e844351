#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "covlaw/cumulants.hpp"
#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/rng.hpp"
#include "covlaw/stats.hpp"

using namespace covlaw;

namespace {

Matrix draws(ScalarLaw law, std::size_t n, std::size_t reps, std::uint64_t seed) {
  Matrix X(n, reps);
  Stream s(seed);
  for (std::size_t j = 0; j < reps; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      switch (law) {
        case ScalarLaw::Gaussian: X(i, j) = s.normal(); break;
        case ScalarLaw::Rademacher: X(i, j) = s.rademacher(); break;
        case ScalarLaw::CenteredExponential: X(i, j) = -std::log(s.uniform()) - 1.0; break;
      }
    }
  return X;
}

// Apply A along every axis of T.
Tensor transform(const Tensor& T, const Matrix& A) {
  Tensor out = Tensor::zeros(T.order, static_cast<std::size_t>(A.rows()));
  std::vector<std::size_t> o(T.order, 0), i(T.order, 0);
  auto next = [](std::vector<std::size_t>& idx, std::size_t n) {
    for (std::size_t a = idx.size(); a-- > 0;) {
      if (++idx[a] < n) return true;
      idx[a] = 0;
    }
    return false;
  };
  do {
    double acc = 0.0;
    std::fill(i.begin(), i.end(), 0);
    do {
      double w = T.at(i);
      for (int a = 0; a < T.order; ++a) w *= A(o[a], i[a]);
      acc += w;
    } while (next(i, T.n));
    out.data[out.flat(o)] = acc;
  } while (next(o, out.n));
  return out;
}

// Symmetric tensor with one i.i.d. N(0, scale^2) entry per sorted index triple.
Tensor random_symmetric3(std::size_t n, std::uint64_t seed, double scale) {
  Tensor sym = Tensor::zeros(3, n);
  Stream s(seed);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b)
      for (std::size_t c = b; c < n; ++c) {
        const double v = scale * s.normal();
        const std::size_t p[6][3] = {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}};
        for (const auto& q : p) sym.data[sym.flat(q)] = v;
      }
  return sym;
}

}  // namespace

TEST_CASE("scalar moments and cumulants") {
  CHECK(scalar_raw_moment(ScalarLaw::Gaussian, 4) == 3.0);
  CHECK(scalar_raw_moment(ScalarLaw::Gaussian, 6) == 15.0);
  CHECK(scalar_raw_moment(ScalarLaw::Gaussian, 3) == 0.0);
  CHECK(scalar_raw_moment(ScalarLaw::Rademacher, 6) == 1.0);
  CHECK(scalar_raw_moment(ScalarLaw::CenteredExponential, 2) == 1.0);
  CHECK(scalar_raw_moment(ScalarLaw::CenteredExponential, 3) == 2.0);
  CHECK(scalar_raw_moment(ScalarLaw::CenteredExponential, 4) == 9.0);
  CHECK(scalar_cumulant(ScalarLaw::Gaussian, 2) == 1.0);
  CHECK(scalar_cumulant(ScalarLaw::Gaussian, 4) == 0.0);
  CHECK(scalar_cumulant(ScalarLaw::Rademacher, 4) == -2.0);
  CHECK(scalar_cumulant(ScalarLaw::Rademacher, 6) == 16.0);
  CHECK(scalar_cumulant(ScalarLaw::CenteredExponential, 3) == 2.0);
  CHECK(scalar_cumulant(ScalarLaw::CenteredExponential, 5) == 24.0);
  CHECK(scalar_cumulant(ScalarLaw::CenteredExponential, 1) == 0.0);
}

TEST_CASE("empirical cumulants of i.i.d. laws") {
  const std::size_t reps = 1000000;
  SUBCASE("gaussian third cumulant vanishes within 5 standard errors") {
    const auto k = empirical_cumulants(draws(ScalarLaw::Gaussian, 3, reps, 1), 3);
    REQUIRE(k.size() == 3);
    const auto& k3 = k[2];
    CHECK(k3.samples == reps);
    for (std::size_t e = 0; e < k3.tensor.data.size(); ++e)
      CHECK(std::abs(k3.tensor.data[e]) <= 5.0 * k3.stderr_[e]);
  }
  SUBCASE("rademacher fourth cumulant") {
    const auto k4 = empirical_cumulants(draws(ScalarLaw::Rademacher, 2, reps, 2), 4)[3];
    for (std::size_t i = 0; i < 2; ++i) {
      const std::size_t d[4] = {i, i, i, i};
      CHECK(std::abs(k4.tensor.at(d) + 2.0) <= 0.1);
    }
    const std::size_t off[4] = {0, 0, 1, 1};
    CHECK(std::abs(k4.tensor.at(off)) <= 0.02);
  }
  SUBCASE("centered exponential third cumulant") {
    const auto k3 = empirical_cumulants(draws(ScalarLaw::CenteredExponential, 2, reps, 3), 3)[2];
    const std::size_t d[3] = {1, 1, 1};
    CHECK(std::abs(k3.tensor.at(d) - 2.0) <= 0.1);
  }
}

TEST_CASE("cumulant tensors are symmetric, shift invariant and multilinear (property)") {
  const Matrix X = draws(ScalarLaw::CenteredExponential, 3, 4000, 4);
  const auto base = empirical_cumulants(X, 4);
  for (int k = 1; k <= 4; ++k) {
    const Tensor& T = base[k - 1].tensor;
    std::vector<std::size_t> idx(k, 0);
    do {
      auto perm = idx;
      std::sort(perm.begin(), perm.end());
      CHECK(T.at(idx) == T.at(perm));
      std::size_t a = idx.size();
      while (a-- > 0 && ++idx[a] == 3) idx[a] = 0;
      if (a == static_cast<std::size_t>(-1)) break;
    } while (true);
  }
  // Shift: kappa_k, k >= 2, unchanged.
  Matrix shifted = X;
  shifted.colwise() += Vector::Constant(3, 0.75);
  const auto sh = empirical_cumulants(shifted, 4);
  for (int k = 2; k <= 4; ++k)
    for (std::size_t e = 0; e < sh[k - 1].tensor.data.size(); ++e)
      CHECK(sh[k - 1].tensor.data[e] == doctest::Approx(base[k - 1].tensor.data[e]).epsilon(1e-8).scale(1.0));
  // Linear maps act on every axis.
  const Matrix A = gaussian_scaled(2, 3, 5);
  const auto lin = empirical_cumulants(A * X, 4);
  for (int k = 1; k <= 4; ++k) {
    const Tensor expect = transform(base[k - 1].tensor, A);
    for (std::size_t e = 0; e < expect.data.size(); ++e)
      CHECK(lin[k - 1].tensor.data[e] == doctest::Approx(expect.data[e]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("input guards") {
  const Matrix small = draws(ScalarLaw::Gaussian, 2, 999, 6);
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code([&] { empirical_cumulants(small, 2); }) == ErrorCode::InsufficientSamples);
  const Matrix ok = draws(ScalarLaw::Gaussian, 2, 1000, 6);
  CHECK(code([&] { empirical_cumulants(ok, 7); }) == ErrorCode::InvalidArgument);
  const Matrix wide = draws(ScalarLaw::Gaussian, 20, 1000, 6);
  CHECK(code([&] { empirical_cumulants(wide, 6); }) == ErrorCode::StorageGuard);
}

TEST_CASE("moment-cumulant identity") {
  SUBCASE("analytic inputs") {
    for (ScalarLaw law : {ScalarLaw::Gaussian, ScalarLaw::Rademacher, ScalarLaw::CenteredExponential}) {
      for (std::size_t n : {1, 2, 3}) {
        const auto L = iid_law(law, n);
        for (auto [k, m] : {std::pair{1, 0}, std::pair{1, 1}, std::pair{2, 0}, std::pair{1, 2}, std::pair{2, 1},
                            std::pair{0, 3}}) {
          const auto r = moment_tensor_identity_check(L, L, k, m);
          CHECK(r.residual <= 1e-12);
        }
      }
    }
  }
  SUBCASE("mismatched laws are detected") {
    const auto r = moment_tensor_identity_check(iid_law(ScalarLaw::Gaussian, 2),
                                                iid_law(ScalarLaw::Rademacher, 2), 2, 0);
    CHECK(r.residual >= 1.0);
  }
  SUBCASE("empirical left side") {
    const auto r = moment_tensor_identity_check(draws(ScalarLaw::Gaussian, 3, 1000000, 7),
                                                iid_law(ScalarLaw::Gaussian, 3), 2, 0);
    CHECK(r.max_z <= 10.0);
  }
  CHECK_THROWS_AS(moment_tensor_identity_check(iid_law(ScalarLaw::Gaussian, 2), iid_law(ScalarLaw::Gaussian, 2), 3, 1),
                  Error);
}

TEST_CASE("U-norm") {
  const DirectionSet basis2(2, {}, 1.0);
  Tensor e12 = Tensor::zeros(2, 2);
  e12.data[1] = 1.0;
  CHECK(u_norm(e12, basis2) == 1.0);

  Tensor ones = Tensor::zeros(2, 4);
  std::fill(ones.data.begin(), ones.data.end(), 1.0);
  const DirectionSet half(4, {Vector::Constant(4, 0.5)}, 1.0);
  CHECK(u_norm(ones, half) == doctest::Approx(4.0));

  Tensor r = Tensor::zeros(3, 3);
  Stream s(8);
  for (double& x : r.data) x = s.normal();
  CHECK(u_norm(r, DirectionSet(3, {}, 1.0)) == r.max_abs());

  CHECK_THROWS_AS(DirectionSet(3, {Vector::Constant(3, 1.0)}, 1.0), Error);
  CHECK_THROWS_AS(DirectionSet(3, {}, 0.5), Error);
  CHECK_THROWS_AS(u_norm(r, DirectionSet(3, {}, 1.0), 10.0), Error);
}

TEST_CASE("assumption ratio") {
  SUBCASE("gaussian cumulants give a zero numerator") {
    const auto k3 = analytic_cumulant(ScalarLaw::Gaussian, 4, 3).tensor;
    const auto sw = assumption_ratio_sweep(k3, DirectionSet(4, {}, 1.0), 4, 9);
    CHECK(sw.max_ratio == 0.0);
  }
  SUBCASE("separable cumulants with the columns of A stay bounded") {
    for (std::size_t n : {4, 6, 8}) {
      const Matrix A = random_orthogonal_columns(n, n, 10 + n);
      const auto w3 = analytic_cumulant(ScalarLaw::CenteredExponential, n, 3).tensor;
      const Tensor k3 = transform(w3, A);
      std::vector<Vector> cols;
      for (std::size_t a = 0; a < n; ++a) cols.push_back(A.col(a));
      const auto sw = assumption_ratio_sweep(k3, DirectionSet(n, cols, 1.0), 6, 11);
      CHECK(sw.max_ratio > 0.0);
      CHECK(sw.max_ratio <= 3.0);
    }
  }
  SUBCASE("a generic symmetric cumulant grows like sqrt(n)") {
    // With U the basis, |T|_U is the max entry of an n x n array of size
    // ~1/n, so the ratio behaves like sqrt(n / log(n^2)).
    std::vector<double> ns, ratios, normalized;
    for (std::size_t n : {8, 16, 24}) {
      std::vector<double> rs;
      for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const Tensor k3 = random_symmetric3(n, 100 * n + seed, 1.0 / static_cast<double>(n));
        Stream st(seed + 7);
        Vector s(n);
        for (std::size_t i = 0; i < n; ++i) s(i) = st.normal();
        s /= s.norm();
        rs.push_back(assumption_ratio(k3, {s}, k3.contract_first(s), DirectionSet(n, {}, 1.0)));
      }
      ns.push_back(static_cast<double>(n));
      ratios.push_back(mean(rs));
      normalized.push_back(ratios.back() / std::sqrt(ns.back() / std::log(ns.back() * ns.back())));
    }
    const auto fit = loglog_fit(ns, ratios);
    MESSAGE("ratio slope " << fit.slope);
    CHECK(fit.slope >= 0.15);
    CHECK(fit.slope <= 0.5);
    CHECK(std::abs(loglog_fit(ns, normalized).slope) <= 0.15);
  }
}
