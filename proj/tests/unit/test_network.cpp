#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/network.hpp"
#include "network_oracles.hpp"

using namespace covlaw;

namespace {

Tensor from_matrix(const Matrix& M) {
  Tensor T = Tensor::zeros(2, static_cast<std::size_t>(M.rows()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) T.data[i * M.cols() + j] = M(i, j);
  return T;
}

Tensor from_vector(const Vector& v) {
  Tensor T = Tensor::zeros(1, static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) T.data[i] = v(i);
  return T;
}

// out[i_perm[0], ..., i_perm[k-1]] = T[i_0, ..., i_{k-1}].
Tensor permute_axes(const Tensor& T, const std::vector<std::size_t>& perm) {
  Tensor out = Tensor::zeros(T.order, T.n);
  std::vector<std::size_t> idx(T.order, 0), dst(T.order);
  for (std::size_t flat = 0; flat < T.data.size(); ++flat) {
    std::size_t r = flat;
    for (int a = T.order; a-- > 0;) {
      idx[a] = r % T.n;
      r /= T.n;
    }
    for (int a = 0; a < T.order; ++a) dst[a] = idx[perm[a]];
    out.data[out.flat(dst)] = T.data[flat];
  }
  return out;
}

bool independent_st_check(const TensorNetwork& net, const std::vector<std::size_t>& order, std::size_t s,
                          std::size_t t) {
  const std::size_t V = net.vertices().size();
  if (order.size() != V || order.front() != s || order.back() != t) return false;
  std::vector<std::size_t> pos(V, V);
  for (std::size_t i = 0; i < V; ++i) {
    if (order[i] >= V || pos[order[i]] != V) return false;
    pos[order[i]] = i;
  }
  for (std::size_t v = 0; v < V; ++v) {
    if (v == s || v == t) continue;
    bool lower = false, higher = false;
    for (const auto& e : net.edges()) {
      if (e.ends[0] != v && e.ends[1] != v) continue;
      const std::size_t w = e.ends[0] == v ? e.ends[1] : e.ends[0];
      (pos[w] < pos[v] ? lower : higher) = true;
    }
    if (!lower || !higher) return false;
  }
  return true;
}

TensorNetwork simple_graph(std::size_t V, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  TensorNetwork net(1);
  std::vector<int> deg(V, 0);
  for (auto [a, b] : edges) {
    ++deg[a];
    ++deg[b];
  }
  for (std::size_t v = 0; v < V; ++v) {
    Tensor T = Tensor::zeros(deg[v], 1);
    T.data[0] = 1.0;
    net.add_vertex(std::to_string(v), T);
  }
  for (auto [a, b] : edges) net.add_edge("", a, b, Matrix::Identity(1, 1));
  return net;
}

}  // namespace

TEST_CASE("spec networks") {
  SUBCASE("two parallel identity edges") {
    const Matrix A = gaussian_scaled(2, 2, 1), B = gaussian_scaled(2, 2, 2);
    TensorNetwork net(2);
    net.add_vertex("a", from_matrix(A));
    net.add_vertex("b", from_matrix(B));
    net.add_edge("e1", 0, 1, Matrix::Identity(2, 2));
    net.add_edge("e2", 0, 1, Matrix::Identity(2, 2));
    CHECK(network_value(net) == doctest::Approx(A.cwiseProduct(B).sum()).epsilon(1e-14));
    TensorNetwork id(2);
    id.add_vertex("a", from_matrix(Matrix::Identity(2, 2)));
    id.add_vertex("b", from_matrix(Matrix::Identity(2, 2)));
    id.add_edge("e1", 0, 1, Matrix::Identity(2, 2));
    id.add_edge("e2", 0, 1, Matrix::Identity(2, 2));
    CHECK(network_value(id) == 2.0);
  }
  SUBCASE("path a^T M c and its bound") {
    const Vector a = gaussian_scaled(3, 1, 3).col(0), c = gaussian_scaled(3, 1, 4).col(0);
    const Matrix M = gaussian_scaled(3, 3, 5);
    TensorNetwork net(3);
    net.add_vertex("s", from_vector(a));
    net.add_vertex("v", from_matrix(M));
    net.add_vertex("t", from_vector(c));
    net.add_edge("e1", 0, 1, Matrix::Identity(3, 3));
    net.add_edge("e2", 1, 2, Matrix::Identity(3, 3));
    const double val = a.dot(M * c);
    CHECK(network_value(net) == doctest::Approx(val).epsilon(1e-13));
    const double bound = network_bound(net, 0, 2);
    CHECK(bound == doctest::Approx(a.norm() * c.norm() * operator_norm(M)).epsilon(1e-7));
    CHECK(std::abs(val) <= bound);
  }
}

TEST_CASE("value equals the naive contraction (property)") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t V = 1 + seed % 5, E = V == 1 ? 0 : 1 + seed % 6;
    const auto net = oracle::random_network(std::max<std::size_t>(V, 2), E, 3, seed);
    const double naive = oracle::naive_value(net);
    CHECK(std::abs(network_value(net, 1e9, Execution::Serial) - naive) <= 1e-12 * std::max(1.0, std::abs(naive)));
    CHECK(network_value(net, 1e9, Execution::Parallel) == network_value(net, 1e9, Execution::Serial));
  }
}

TEST_CASE("value is invariant under permuting incidences with their axes (property)") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    auto net = oracle::random_network(4, 5, 3, seed);
    const double before = network_value(net);
    TensorNetwork moved(3);
    for (const auto& v : net.vertices()) {
      std::vector<std::size_t> perm(v.incidences.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::reverse(perm.begin(), perm.end());
      moved.add_vertex(v.name, permute_axes(v.tensor, perm));
    }
    for (const auto& e : net.edges()) moved.add_edge(e.name, e.ends[0], e.ends[1], e.matrix);
    for (std::size_t v = 0; v < moved.vertices().size(); ++v) {
      auto order = moved.vertices()[v].incidences;
      std::reverse(order.begin(), order.end());
      moved.set_incidence_order(v, order);
    }
    CHECK(network_value(moved) == doctest::Approx(before).epsilon(1e-12));
  }
  auto net = oracle::random_network(3, 3, 2, 7);
  CHECK_THROWS_AS(net.set_incidence_order(0, {99}), Error);
}

TEST_CASE("value is bounded whenever a bipolar orientation exists (property)") {
  int bounded = 0;
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const std::size_t V = 2 + seed % 4;
    const auto net = oracle::random_network(V, V + seed % 3, 3, seed);
    const double val = std::abs(network_value(net));
    for (std::size_t s = 0; s < V; ++s)
      for (std::size_t t = 0; t < V; ++t) {
        if (s == t || !has_bipolar_orientation(net, s, t)) {
          if (s != t) CHECK_THROWS_AS(network_bound(net, s, t), Error);
          continue;
        }
        CHECK(val <= network_bound(net, s, t) * (1.0 + 1e-9));
        ++bounded;
      }
  }
  CHECK(bounded > 50);
}

TEST_CASE("bipolar orientation agrees with exhaustive search") {
  CHECK(has_bipolar_orientation(simple_graph(3, {{0, 1}, {1, 2}}), 0, 2));
  const auto st = st_numbering(simple_graph(3, {{0, 1}, {1, 2}}), 0, 2);
  REQUIRE(st.has_value());
  CHECK(*st == std::vector<std::size_t>{0, 1, 2});
  // Star with center 3: leaves 0 (s), 1 (t), 2.
  CHECK_FALSE(has_bipolar_orientation(simple_graph(4, {{3, 0}, {3, 1}, {3, 2}}), 0, 1));
  CHECK(has_bipolar_orientation(simple_graph(3, {{0, 1}, {1, 2}, {2, 0}}), 0, 1));
  // Two vertices need an s-t edge.
  CHECK(has_bipolar_orientation(simple_graph(2, {{0, 1}}), 0, 1));
  CHECK_FALSE(has_bipolar_orientation(simple_graph(2, {}), 0, 1));

  // Every simple graph on up to 5 vertices, every (s, t).
  std::size_t graphs = 0;
  for (std::size_t V = 2; V <= 5; ++V) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t a = 0; a < V; ++a)
      for (std::size_t b = a + 1; b < V; ++b) all.emplace_back(a, b);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << all.size()); ++mask) {
      std::vector<std::pair<std::size_t, std::size_t>> edges;
      for (std::size_t e = 0; e < all.size(); ++e)
        if (mask >> e & 1) edges.push_back(all[e]);
      if (edges.size() > 8) continue;
      const auto net = simple_graph(V, edges);
      ++graphs;
      for (std::size_t s = 0; s < V; ++s)
        for (std::size_t t = 0; t < V; ++t) {
          if (s == t) continue;
          const bool expect = oracle::exhaustive_bipolar(V, edges, s, t);
          REQUIRE(has_bipolar_orientation(net, s, t) == expect);
          const auto num = st_numbering(net, s, t);
          REQUIRE(num.has_value() == expect);
          if (num) {
            REQUIRE(independent_st_check(net, *num, s, t));
            REQUIRE(is_st_numbering(net, *num));
          }
        }
    }
  }
  CHECK(graphs > 1000);
  // Multigraphs behave like their simple graphs.
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    const auto net = oracle::random_network(5, 7, 1, seed);
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t t = 0; t < 5; ++t)
        if (s != t) CHECK(has_bipolar_orientation(net, s, t) == oracle::exhaustive_bipolar(5, oracle::edge_list(net), s, t));
  }
  CHECK_FALSE(is_st_numbering(simple_graph(4, {{3, 0}, {3, 1}, {3, 2}}), {0, 3, 2, 1}));
}

TEST_CASE("mat-op norm") {
  Tensor diag = Tensor::zeros(3, 4);
  const double values[4] = {0.5, -3.0, 2.0, 1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t idx[3] = {i, i, i};
    diag.data[diag.flat(idx)] = values[i];
  }
  CHECK(mat_op_norm(diag) == doctest::Approx(3.0).epsilon(1e-8));
  const Matrix M = gaussian_scaled(4, 4, 9);
  CHECK(mat_op_norm(from_matrix(M)) == doctest::Approx(operator_norm(M)).epsilon(1e-7));
  const Vector v = gaussian_scaled(4, 1, 10).col(0);
  CHECK(mat_op_norm(from_vector(v)) == doctest::Approx(v.norm()));
  Tensor scalar = Tensor::zeros(0, 4);
  scalar.data[0] = -2.5;
  CHECK(mat_op_norm(scalar) == 2.5);
  // Every matricization is dominated by the Frobenius norm and dominates the max entry.
  Stream rng(11);
  const Tensor T = oracle::random_tensor(3, 3, rng);
  double fro = 0.0;
  for (double x : T.data) fro += x * x;
  CHECK(mat_op_norm(T) <= std::sqrt(fro) * (1.0 + 1e-12));
  CHECK(mat_op_norm(T) >= T.max_abs());
}

TEST_CASE("validation, work cap and fixtures") {
  TensorNetwork bad(2);
  bad.add_vertex("a", Tensor::zeros(2, 2));
  bad.add_vertex("b", Tensor::zeros(1, 2));
  bad.add_edge("e", 0, 1, Matrix::Identity(2, 2));
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(bad.add_edge("loop", 0, 0, Matrix::Identity(2, 2)), Error);
  CHECK_THROWS_AS(bad.add_edge("wrong", 0, 1, Matrix::Identity(3, 3)), Error);

  const auto big = oracle::random_network(4, 6, 3, 12);
  try {
    network_value(big, 10.0);
    FAIL("expected WorkCap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WorkCap);
  }

  NetworkFixture fx;
  fx.network = oracle::random_network(4, 5, 3, 13);
  fx.source = 0;
  fx.sink = 3;
  const auto back = parse_network_fixture(dump_network_fixture(fx));
  CHECK(network_value(back.network) == network_value(fx.network));
  CHECK(back.source == fx.source);
  CHECK(back.sink == fx.sink);

  const auto gen = parse_network_fixture(R"({"dim": 2,
    "vertices": [{"name": "s", "edges": ["x"], "tensor": {"generator": "ones"}},
                 {"name": "t", "edges": ["x"], "tensor": {"data": [1, 2]}}],
    "edges": [{"name": "x", "ends": ["s", "t"], "matrix": "identity"}],
    "source": "s", "sink": "t"})");
  CHECK(network_value(gen.network) == 3.0);
  CHECK_THROWS_AS(parse_network_fixture(R"({"dim": 2, "vertices": [], "edges": [], "bogus": 1})"), Error);
}
