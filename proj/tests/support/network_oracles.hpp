#pragma once

// Independent oracles for tensor networks: brute-force contraction over every
// incidence index and exhaustive search over edge orientations.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "covlaw/network.hpp"
#include "covlaw/rng.hpp"

namespace oracle {

using covlaw::Matrix;
using covlaw::Tensor;
using covlaw::TensorNetwork;

// One index per incidence; slot 2e is the ends[0] side of edge e. Products and
// the running sum are kept in long double so the oracle's own rounding stays
// well below the tolerance it is compared against.
inline double naive_value(const TensorNetwork& net) {
  const std::size_t n = net.n(), E = net.edges().size();
  std::vector<std::size_t> idx(2 * E, 0);
  long double total = 0.0L;
  while (true) {
    long double p = 1.0L;
    for (std::size_t e = 0; e < E; ++e) p *= net.edges()[e].matrix(idx[2 * e], idx[2 * e + 1]);
    for (std::size_t v = 0; v < net.vertices().size() && p != 0.0L; ++v) {
      const auto& vert = net.vertices()[v];
      std::vector<std::size_t> axes;
      for (std::size_t e : vert.incidences) axes.push_back(idx[2 * e + (net.edges()[e].ends[0] == v ? 0 : 1)]);
      p *= vert.tensor.at(axes);
    }
    total += p;
    std::size_t a = idx.size();
    while (a > 0) {
      --a;
      if (++idx[a] < n) break;
      idx[a] = 0;
      if (a == 0) return static_cast<double>(total);
    }
    if (idx.empty()) return static_cast<double>(total);
  }
}

// A bipolar orientation is an acyclic orientation whose only source is s and
// only sink is t. Parallel edges must agree, so the simple graph suffices.
inline bool exhaustive_bipolar(std::size_t V, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                               std::size_t s, std::size_t t) {
  if (s == t) return false;
  std::vector<std::pair<std::size_t, std::size_t>> simple;
  for (auto [a, b] : edges) {
    if (a > b) std::swap(a, b);
    if (std::find(simple.begin(), simple.end(), std::pair{a, b}) == simple.end()) simple.emplace_back(a, b);
  }
  const std::size_t E = simple.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << E); ++mask) {
    std::vector<int> indeg(V, 0), outdeg(V, 0);
    std::vector<std::vector<std::size_t>> out(V);
    for (std::size_t e = 0; e < E; ++e) {
      auto [a, b] = simple[e];
      if (mask >> e & 1) std::swap(a, b);
      out[a].push_back(b);
      ++outdeg[a];
      ++indeg[b];
    }
    bool ok = true;
    for (std::size_t v = 0; v < V && ok; ++v) {
      if (indeg[v] == 0 && v != s) ok = false;
      if (outdeg[v] == 0 && v != t) ok = false;
    }
    if (!ok) continue;
    // Kahn's algorithm for acyclicity.
    std::vector<int> deg = indeg;
    std::vector<std::size_t> stack;
    for (std::size_t v = 0; v < V; ++v)
      if (deg[v] == 0) stack.push_back(v);
    std::size_t seen = 0;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      ++seen;
      for (std::size_t w : out[v])
        if (--deg[w] == 0) stack.push_back(w);
    }
    if (seen == V) return true;
  }
  return false;
}

inline Tensor random_tensor(int order, std::size_t n, covlaw::Stream& rng) {
  Tensor T = Tensor::zeros(order, n);
  for (double& x : T.data) x = rng.normal();
  return T;
}

// Random connected-or-not multigraph network with Gaussian labels.
inline TensorNetwork random_network(std::size_t V, std::size_t E, std::size_t n, std::uint64_t seed) {
  covlaw::Stream rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  std::vector<int> degree(V, 0);
  for (std::size_t e = 0; e < E; ++e) {
    const std::size_t a = rng.next_u64() % V;
    std::size_t b = rng.next_u64() % (V - 1);
    if (b >= a) ++b;
    ends.emplace_back(a, b);
    ++degree[a];
    ++degree[b];
  }
  TensorNetwork net(n);
  for (std::size_t v = 0; v < V; ++v) net.add_vertex("v" + std::to_string(v), random_tensor(degree[v], n, rng));
  for (std::size_t e = 0; e < E; ++e) {
    Matrix M(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) M(i, j) = rng.normal();
    net.add_edge("e" + std::to_string(e), ends[e].first, ends[e].second, M);
  }
  return net;
}

inline std::vector<std::pair<std::size_t, std::size_t>> edge_list(const TensorNetwork& net) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : net.edges()) out.emplace_back(e.ends[0], e.ends[1]);
  return out;
}

}  // namespace oracle
