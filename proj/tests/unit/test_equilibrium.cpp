#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "covlaw/equilibrium.hpp"
#include "covlaw/error.hpp"

using namespace covlaw;

namespace {

// Sigma = I: clearing denominators in z = -1/m + gamma/(1+m) gives
// z m^2 + (z + 1 - gamma) m + 1 = 0; the physical root has Im m > 0.
cplx quadratic_oracle(cplx z, double gamma) {
  const cplx b = z + 1.0 - gamma;
  const cplx disc = std::sqrt(b * b - 4.0 * z);
  const cplx r1 = (-b + disc) / (2.0 * z), r2 = (-b - disc) / (2.0 * z);
  return r1.imag() > r2.imag() ? r1 : r2;
}

SpectrumModel identity_model(double gamma, std::size_t N = 1000) {
  return SpectrumModel::identity(static_cast<std::size_t>(std::lround(gamma * N)), N);
}

SpectrumModel two_atom_model() { return SpectrumModel::from_atoms({{16.0, 25}, {1.0, 25}}, 1000); }

// Upper-tail mass of MP(gamma = 1) from x = 2 + 2 cos(phi): (phi - sin phi) / pi.
double mp1_location(double mass) {
  double lo = 0.0, hi = std::numbers::pi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((mid - std::sin(mid)) / std::numbers::pi < mass ? lo : hi) = mid;
  }
  return 2.0 + 2.0 * std::cos(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("z0 and its derivative") {
  const auto m1 = identity_model(1.0);
  CHECK(std::abs(z0_eval(cplx(-2.0, 0.0), m1) - cplx(-0.5, 0.0)) < 1e-14);
  const auto m025 = identity_model(0.25);
  CHECK(std::abs(z0_eval(cplx(-0.5, 0.0), m025) - cplx(2.5, 0.0)) < 1e-14);
  for (double g : {0.25, 0.5}) {
    const auto m = identity_model(g);
    const double sg = std::sqrt(g);
    for (double sign : {1.0, -1.0}) {
      const cplx crit(-1.0 / (1.0 + sign * sg), 0.0);
      CHECK(std::abs(z0_prime(crit, m)) < 1e-12);
      CHECK(z0_eval(crit, m).real() == doctest::Approx((1.0 + sign * sg) * (1.0 + sign * sg)).epsilon(1e-12));
    }
  }
  // Finite at m = infinity through t = 1/m.
  CHECK(std::isfinite(z0_inverse_variable(0.0, identity_model(1.0))));
}

TEST_CASE("solver matches the quadratic oracle") {
  SUBCASE("large |z|") {
    const auto m = identity_model(0.5);
    const cplx z(0.0, 1e6);
    const auto sol = solve_mp({0.0, 1e6}, m);
    CHECK(std::abs(sol.m_tilde0 + 1.0 / z) < 1e-11);
  }
  SUBCASE("gamma = 1 at 2 + 0.01i") {
    const auto sol = solve_mp({2.0, 0.01}, identity_model(1.0));
    CHECK(std::abs(sol.m_tilde0 - quadratic_oracle({2.0, 0.01}, 1.0)) < 1e-10);
  }
  SUBCASE("gamma = 0.25 near the axis") {
    for (double E : {0.5, 1.0, 2.0}) {
      const auto sol = solve_mp({E, 1e-4}, identity_model(0.25));
      CHECK(std::abs(sol.m_tilde0 - quadratic_oracle({E, 1e-4}, 0.25)) < 1e-10);
    }
  }
  SUBCASE("invalid points") {
    CHECK_THROWS_AS(solve_mp({1.0, 0.0}, identity_model(0.5)), Error);
    CHECK_THROWS_AS(solve_mp({1.0, -1.0}, identity_model(0.5)), Error);
  }
}

TEST_CASE("Im m~0 > 0 and |m~0| <= 1/eta on a random grid (property)") {
  std::uint64_t state = 77;
  auto next = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  const auto m = two_atom_model();
  for (int t = 0; t < 200; ++t) {
    const double E = -1.0 + 25.0 * next();
    const double eta = std::pow(10.0, -4.0 + 4.0 * next());
    const auto sol = solve_mp({E, eta}, m);
    CHECK(sol.m_tilde0.imag() > 0.0);
    CHECK(std::abs(sol.m_tilde0) <= 1.0 / eta * (1.0 + 1e-12));
    // It solves the equation it was asked to solve.
    CHECK(std::abs(z0_eval(sol.m_tilde0, m) - cplx(E, eta)) <= 1e-9 * std::max(1.0, std::abs(cplx(E, eta))));
  }
}

TEST_CASE("support of the identity model") {
  for (double g : {0.25, 0.5, 1.0}) {
    const auto prof = classify_support(identity_model(g));
    const double sg = std::sqrt(g);
    REQUIRE(prof.p == 1);
    REQUIRE(prof.edges.size() == 2);
    CHECK(std::abs(prof.edges[0] - (1 + sg) * (1 + sg)) < 1e-8);
    CHECK(std::abs(prof.edges[1] - (1 - sg) * (1 - sg)) < 1e-8);
    CHECK(prof.cusps.empty());
  }
}

TEST_CASE("two-atom model has two components matching the grid-scan oracle") {
  const auto prof = classify_support(two_atom_model());
  REQUIRE(prof.p == 2);
  REQUIRE(prof.edges.size() == 4);
  const double oracle[4] = {21.486070393193967634, 11.367360543030263769, 1.3099818541174909146,
                            0.68658720965827768284};
  for (int j = 0; j < 4; ++j) CHECK(std::abs(prof.edges[j] - oracle[j]) < 1e-6);
  REQUIRE(prof.edge_counts.size() == 4);
  CHECK(std::abs(prof.edge_counts[1] - 25.0) < 1e-6);
  CHECK(std::abs(prof.edge_counts[2] - 25.0) < 1e-6);
  CHECK(prof.contains(15.0));
  CHECK_FALSE(prof.contains(5.0));
  CHECK(prof.kappa(5.0) == doctest::Approx(5.0 - oracle[2]));
}

TEST_CASE("density") {
  CHECK(density(3.0, identity_model(0.25)) == 0.0);
  CHECK(density(2.0, identity_model(1.0)) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-6));
  // Square-root vanishing at the right edge of gamma = 0.25.
  const auto m = identity_model(0.25);
  const double d1 = density(2.25 - 1e-4, m), d2 = density(2.25 - 4e-4, m);
  CHECK(d2 / d1 == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("classical locations") {
  const auto m = identity_model(1.0);
  CHECK(classical_location(m, 1) > classical_location(m, 2));
  CHECK(classical_location(m, 500) == doctest::Approx(mp1_location(0.4995)).epsilon(1e-8));
  const double t1 = classical_location(identity_model(0.25), 1);
  CHECK(t1 <= 2.25);
  CHECK(t1 >= 2.15);

  const auto prof = classify_support(m);
  const QuantileTable table(m, prof);
  for (std::size_t i : {1u, 10u, 250u, 500u, 900u, 1000u})
    CHECK(table.location(i) == doctest::Approx(classical_location(m, i)).epsilon(1e-8));
  // Every index, including the hard edge at 0, against the closed form.
  double worst = 0.0;
  for (std::size_t i = 1; i <= 1000; ++i)
    worst = std::max(worst, std::abs(table.location(i) - mp1_location((static_cast<double>(i) - 0.5) / 1000.0)));
  CHECK(worst < 1e-10);
  CHECK(classical_location(m, 1000) == doctest::Approx(mp1_location(0.9995)).epsilon(1e-8));
  const auto two = two_atom_model();
  const auto prof2 = classify_support(two);
  const QuantileTable table2(two, prof2);
  for (std::size_t i : {1u, 12u, 25u, 26u, 40u, 50u})
    CHECK(table2.location(i) == doctest::Approx(classical_location(two, prof2, i)).epsilon(1e-8));
}

TEST_CASE("error parameter") {
  EquilibriumSolution s;
  s.m_tilde0 = {0.3, 0.09};
  CHECK(error_parameter({1.0, 0.01}, s, 1000).psi == doctest::Approx(0.19486832980505138));
  s.m_tilde0 = {0.3, 0.0};
  CHECK(error_parameter({1.0, 0.01}, s, 1000).psi == doctest::Approx(0.1));
  s.m_tilde0 = {0.3, 1.0};
  CHECK(error_parameter({1.0, 1.0}, s, 10000).psi == doctest::Approx(0.0101));
}

TEST_CASE("deterministic equivalent blocks") {
  const auto m = identity_model(0.5);
  const SpectralPoint pt{1.0, 0.05};
  const auto sol = solve_mp(pt, m);
  const auto de = deterministic_equivalent(pt, sol, m);
  for (const cplx d : de.population_diagonal) CHECK(std::abs(d - sol.m0) < 1e-12);
  CHECK(std::abs(de.sample_scalar - pt.z() * sol.m_tilde0) < 1e-14);

  const auto zero = SpectrumModel({0.0, 1.0}, 4);
  const SpectralPoint p2{2.0, 0.5};
  const auto de0 = deterministic_equivalent(p2, solve_mp(p2, zero), zero);
  CHECK(std::abs(de0.population_diagonal.back() + 1.0 / p2.z()) < 1e-14);

  const SpectralPoint far{0.0, 1e7};
  const auto def = deterministic_equivalent(far, solve_mp(far, m), m);
  CHECK(std::abs(def.population_diagonal[0] + 1.0 / far.z()) < 1e-12);
  CHECK(std::abs(def.sample_scalar + 1.0) < 1e-6);
}

TEST_CASE("regularity report") {
  const auto m = identity_model(0.25);
  const auto prof = classify_support(m);
  const SpectralPoint pt{1.0, 0.01};
  const auto r = regularity_report(pt, solve_mp(pt, m, prof), m, prof);
  CHECK(r.inside_support);
  CHECK(r.im_ratio >= 0.1);
  CHECK(r.im_ratio <= 10.0);
  const SpectralPoint wide{1.0, 1.0};
  const auto rw = regularity_report(wide, solve_mp(wide, m, prof), m, prof);
  CHECK(rw.g >= 1.0);
  CHECK(rw.g <= std::sqrt(1.0 + rw.kappa) + 1e-12);
}

TEST_CASE("extended solve off the support") {
  const auto m = identity_model(0.5);
  const auto on = solve_mp_extended({4.0, 0.0}, m);
  CHECK(std::abs(on.m_tilde0.imag()) < 1e-14);
  const auto close = solve_mp({4.0, 1e-9}, m);
  CHECK(std::abs(on.m_tilde0 - close.m_tilde0) < 1e-7);
  const auto below = solve_mp_extended({1.0, -0.3}, m);
  CHECK(std::abs(below.m_tilde0 - std::conj(solve_mp({1.0, 0.3}, m).m_tilde0)) < 1e-12);
  try {
    solve_mp_extended({1.0, 0.0}, m);
    FAIL("expected InsideSpectrum");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsideSpectrum);
  }
}
