#pragma once

// Tensor networks: a multigraph whose vertices carry dense tensors (one axis
// per incidence, in order) and whose edges carry n x n matrices. The value
// sums the product of all labels over one index per incidence.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covlaw/cumulants.hpp"
#include "covlaw/kernels.hpp"

namespace covlaw {

struct NetworkVertex {
  std::string name;
  std::vector<std::size_t> incidences;  // edge ids; axis a of the tensor pairs with incidences[a]
  Tensor tensor;
};

struct NetworkEdge {
  std::string name;
  std::size_t ends[2];  // matrix rows index the ends[0] incidence
  Matrix matrix;
};

class TensorNetwork {
 public:
  explicit TensorNetwork(std::size_t n) : n_(n) {}

  /// The incidence list starts empty and grows as edges are added.
  std::size_t add_vertex(std::string name, Tensor tensor);
  /// Appends one incidence to each endpoint. Self-loops are rejected.
  std::size_t add_edge(std::string name, std::size_t a, std::size_t b, Matrix matrix);
  /// Replaces the incidence order of v. Must be a permutation of the current list.
  void set_incidence_order(std::size_t v, std::vector<std::size_t> order);

  /// deg(v) = order of f(v), every label n x n, incidence lists consistent.
  void validate() const;

  std::size_t n() const { return n_; }
  const std::vector<NetworkVertex>& vertices() const { return vertices_; }
  const std::vector<NetworkEdge>& edges() const { return edges_; }
  std::optional<std::size_t> find_vertex(const std::string& name) const;

 private:
  std::size_t n_;
  std::vector<NetworkVertex> vertices_;
  std::vector<NetworkEdge> edges_;
};

/// Greedy pairwise contraction after absorbing edge matrices into vertices.
/// Throws WorkCap when a single pair contraction would exceed `work_cap`
/// multiply-adds.
double network_value(const TensorNetwork& net, double work_cap = 1e9,
                     Execution exec = Execution::Parallel);

/// True iff the simple graph of G plus the edge (s, t) is biconnected. With
/// only two vertices this means at least one s-t edge.
bool has_bipolar_orientation(const TensorNetwork& net, std::size_t s, std::size_t t);
/// v_1 = s, ..., v_M = t with every interior vertex adjacent to a lower and a
/// higher vertex; absent when no bipolar orientation exists.
std::optional<std::vector<std::size_t>> st_numbering(const TensorNetwork& net, std::size_t s,
                                                     std::size_t t);
/// Checker independent of the construction.
bool is_st_numbering(const TensorNetwork& net, const std::vector<std::size_t>& order);

/// Max over bipartitions of the axes of the matricization operator norm, by
/// power iteration (tolerance 1e-8, 500 iterations, 3 restarts). Order 1 and
/// order 0 tensors give the Euclidean norm and the absolute value.
double mat_op_norm(const Tensor& T);

/// |f(s)|_F |f(t)|_F prod_{v != s,t} |f(v)|_mat-op prod_e |f(e)|_op. Throws
/// NoOrientation when (s, t) admits no bipolar orientation.
double network_bound(const TensorNetwork& net, std::size_t s, std::size_t t);

struct NetworkFixture {
  TensorNetwork network{1};
  std::optional<std::size_t> source;
  std::optional<std::size_t> sink;
};

/// JSON fixture:
///   {"dim": n,
///    "vertices": [{"name": .., "edges": [edge names in axis order],
///                  "tensor": {"data": [...]} | {"generator": "delta" | "ones"}
///                          | {"generator": "random", "seed": u64}
///                          | {"generator": "diag", "values": [...]}}],
///    "edges": [{"name": .., "ends": [a, b],
///               "matrix": "identity" | [[...], ...] | {"generator": "random", "seed": u64}}],
///    "source": name, "sink": name}
/// Random labels are i.i.d. standard Gaussian.
NetworkFixture parse_network_fixture(const std::string& json_text);
NetworkFixture load_network_fixture(const std::string& path);
std::string dump_network_fixture(const NetworkFixture& fixture);

}  // namespace covlaw
