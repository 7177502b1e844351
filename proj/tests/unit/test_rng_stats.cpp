#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "covlaw/error.hpp"
#include "covlaw/rng.hpp"
#include "covlaw/stats.hpp"

using namespace covlaw;

TEST_CASE("mix64 matches the SplitMix64 reference output") {
  // First output of the reference splitmix64 seeded with 0.
  CHECK(mix64(kGoldenGamma) == 0xE220A8397B1DCDAFULL);
  Stream s(0);
  CHECK(s.next_u64() == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("replica seeds are distinct and reproducible") {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.push_back(replica_seed(42, i));
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
  CHECK(replica_seed(42, 7) == replica_seed(42, 7));
  CHECK(replica_seed(42, 7) != replica_seed(43, 7));
}

TEST_CASE("uniform, normal and rademacher moments") {
  Stream s(123);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sn4 = 0, sr = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double g = s.normal();
    sn += g;
    sn2 += g * g;
    sn4 += g * g * g * g;
    sr += s.rademacher();
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.05));
  CHECK(std::abs(sr / n) < 0.01);
}

TEST_CASE("student t is rescaled to unit variance") {
  Stream s(9);
  const int n = 400000;
  double s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.student_t(12);
    s2 += x * x;
  }
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("substreams differ and do not depend on call order") {
  Stream a = Stream::substream(5, 0), b = Stream::substream(5, 1);
  CHECK(a.next_u64() != b.next_u64());
  Stream c = Stream::substream(5, 1);
  Stream d = Stream::substream(5, 1);
  for (int i = 0; i < 10; ++i) c.next_u64();
  for (int i = 0; i < 10; ++i) d.next_u64();
  CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("quantiles and variance") {
  const std::vector<double> x{4, 1, 3, 2, 5};
  CHECK(mean(x) == 3.0);
  CHECK(sample_variance(x) == 2.5);
  CHECK(median(x) == 3.0);
  CHECK(quantile7(x, 0.0) == 1.0);
  CHECK(quantile7(x, 1.0) == 5.0);
  CHECK(quantile7(x, 0.95) == doctest::Approx(4.8));
  const std::vector<double> even{1, 2, 3, 4};
  CHECK(median(even) == 2.5);
}

TEST_CASE("log-log slope fits") {
  const std::vector<double> N{250, 500, 1000, 2000};
  SUBCASE("c / N") {
    std::vector<double> y;
    for (double n : N) y.push_back(3.0 / n);
    const LineFit f = loglog_fit(N, y);
    CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(f.slope_stderr < 1e-12);
    CHECK(f.points == 4);
  }
  SUBCASE("constant") {
    const std::vector<double> y(N.size(), 0.7);
    CHECK(std::abs(loglog_fit(N, y).slope) < 1e-12);
  }
  SUBCASE("noisy inverse square root") {
    Stream s(2024);
    std::vector<double> Nd, y;
    for (double n = 100; n <= 12800; n *= 2) {
      Nd.push_back(n);
      y.push_back(2.0 / std::sqrt(n) * (1.0 + 0.05 * s.normal()));
    }
    const LineFit f = loglog_fit(Nd, y);
    CHECK(std::abs(f.slope + 0.5) <= 0.05);
  }
  SUBCASE("non-positive values are rejected") {
    const std::vector<double> y{1.0, 0.0, 1.0, 1.0};
    try {
      loglog_fit(N, y);
      FAIL("expected NonPositiveValue");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPositiveValue);
    }
  }
}
