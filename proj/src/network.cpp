#include "covlaw/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <list>
#include <set>

#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/rng.hpp"

namespace covlaw {

// --- structure -----------------------------------------------------------------------

std::size_t TensorNetwork::add_vertex(std::string name, Tensor tensor) {
  if (tensor.n != n_ && tensor.order > 0)
    throw Error(ErrorCode::InvalidArgument, "vertex tensor dimension differs from the network");
  vertices_.push_back({std::move(name), {}, std::move(tensor)});
  return vertices_.size() - 1;
}

std::size_t TensorNetwork::add_edge(std::string name, std::size_t a, std::size_t b, Matrix matrix) {
  if (a >= vertices_.size() || b >= vertices_.size())
    throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
  if (a == b) throw Error(ErrorCode::InvalidArgument, "self-loops are not allowed");
  if (static_cast<std::size_t>(matrix.rows()) != n_ || static_cast<std::size_t>(matrix.cols()) != n_)
    throw Error(ErrorCode::InvalidArgument, "edge label must be n x n");
  const std::size_t id = edges_.size();
  edges_.push_back({std::move(name), {a, b}, std::move(matrix)});
  vertices_[a].incidences.push_back(id);
  vertices_[b].incidences.push_back(id);
  return id;
}

void TensorNetwork::set_incidence_order(std::size_t v, std::vector<std::size_t> order) {
  auto current = vertices_.at(v).incidences;
  auto sorted = order;
  std::sort(current.begin(), current.end());
  std::sort(sorted.begin(), sorted.end());
  if (current != sorted) throw Error(ErrorCode::InvalidArgument, "incidence order is not a permutation");
  vertices_[v].incidences = std::move(order);
}

void TensorNetwork::validate() const {
  std::vector<int> seen(edges_.size(), 0);
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    const auto& vx = vertices_[v];
    if (static_cast<std::size_t>(vx.tensor.order) != vx.incidences.size())
      throw Error(ErrorCode::InvalidArgument, "vertex " + vx.name + ": tensor order differs from degree");
    if (vx.tensor.data.size() != static_cast<std::size_t>(std::pow(static_cast<double>(n_), vx.tensor.order)))
      throw Error(ErrorCode::InvalidArgument, "vertex " + vx.name + ": tensor has the wrong size");
    for (std::size_t e : vx.incidences) {
      if (e >= edges_.size() || (edges_[e].ends[0] != v && edges_[e].ends[1] != v))
        throw Error(ErrorCode::InvalidArgument, "vertex " + vx.name + ": inconsistent incidence");
      ++seen[e];
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e)
    if (seen[e] != 2) throw Error(ErrorCode::InvalidArgument, "edge " + edges_[e].name + ": needs two incidences");
}

std::optional<std::size_t> TensorNetwork::find_vertex(const std::string& name) const {
  for (std::size_t v = 0; v < vertices_.size(); ++v)
    if (vertices_[v].name == name) return v;
  return std::nullopt;
}

// --- value ---------------------------------------------------------------------------

namespace {

struct Node {
  std::vector<double> data;
  std::vector<std::size_t> legs;  // edge id per axis
};

std::vector<double> contract(const std::vector<double>& A, int a_order, const std::vector<double>& B,
                             int b_order, std::size_t n, const std::vector<std::pair<int, int>>& shared,
                             Execution exec) {
  return exec == Execution::Serial ? kernels::contract_pair_serial(A, a_order, B, b_order, n, shared)
                                   : kernels::contract_pair_omp(A, a_order, B, b_order, n, shared);
}

}  // namespace

double network_value(const TensorNetwork& net, double work_cap, Execution exec) {
  net.validate();
  const std::size_t n = net.n();
  const double dn = static_cast<double>(n);
  std::vector<Node> nodes;
  for (const auto& v : net.vertices()) nodes.push_back({v.tensor.data, v.incidences});

  // Absorb each edge matrix into its first endpoint; the edge then carries a
  // plain shared index.
  for (std::size_t e = 0; e < net.edges().size(); ++e) {
    const auto& edge = net.edges()[e];
    Node& a = nodes[edge.ends[0]];
    const int axis = static_cast<int>(std::find(a.legs.begin(), a.legs.end(), e) - a.legs.begin());
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m[i * n + j] = edge.matrix(i, j);
    const int order = static_cast<int>(a.legs.size());
    if (std::pow(dn, order + 1) > work_cap) throw Error(ErrorCode::WorkCap, "edge absorption exceeds the work cap");
    a.data = contract(a.data, order, m, 2, n, {{axis, 0}}, exec);
    a.legs.erase(a.legs.begin() + axis);
    a.legs.push_back(e);
  }

  double scalar = 1.0;
  while (!nodes.empty()) {
    // Fold finished scalars.
    for (std::size_t i = nodes.size(); i-- > 0;)
      if (nodes[i].legs.empty()) {
        scalar *= nodes[i].data[0];
        nodes.erase(nodes.begin() + i);
      }
    if (nodes.empty()) break;

    // Cheapest pair among those sharing a leg.
    std::size_t best_i = 0, best_j = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        std::size_t common = 0;
        for (std::size_t e : nodes[i].legs)
          common += std::count(nodes[j].legs.begin(), nodes[j].legs.end(), e);
        if (common == 0) continue;
        const double cost = std::pow(dn, static_cast<double>(nodes[i].legs.size() + nodes[j].legs.size() - common));
        if (cost < best_cost) {
          best_cost = cost;
          best_i = i;
          best_j = j;
        }
      }
    if (!std::isfinite(best_cost)) throw Error(ErrorCode::NumericalFailure, "dangling network legs");
    if (best_cost > work_cap) throw Error(ErrorCode::WorkCap, "pair contraction exceeds the work cap");

    Node& A = nodes[best_i];
    Node& B = nodes[best_j];
    std::vector<std::pair<int, int>> shared;
    std::vector<std::size_t> legs;
    for (std::size_t x = 0; x < A.legs.size(); ++x) {
      auto it = std::find(B.legs.begin(), B.legs.end(), A.legs[x]);
      if (it != B.legs.end()) shared.emplace_back(static_cast<int>(x), static_cast<int>(it - B.legs.begin()));
      else legs.push_back(A.legs[x]);
    }
    for (std::size_t e : B.legs)
      if (std::find(A.legs.begin(), A.legs.end(), e) == A.legs.end()) legs.push_back(e);
    Node merged{contract(A.data, static_cast<int>(A.legs.size()), B.data, static_cast<int>(B.legs.size()), n,
                         shared, exec),
                std::move(legs)};
    nodes.erase(nodes.begin() + best_j);
    nodes[best_i] = std::move(merged);
  }
  return scalar;
}

// --- bipolar orientations --------------------------------------------------------------

namespace {

struct DfsResult {
  std::vector<std::size_t> preorder;
  std::vector<std::size_t> pre;     // preorder number per vertex
  std::vector<std::size_t> parent;
  std::vector<std::size_t> low;     // vertex of least preorder reachable by one back edge
  bool biconnected = false;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Depth-first search of G + (s, t) from s, taking the edge to t first.
DfsResult dfs_plus(const TensorNetwork& net, std::size_t s, std::size_t t) {
  const std::size_t V = net.vertices().size();
  std::vector<std::set<std::size_t>> adj(V);
  for (const auto& e : net.edges()) {
    adj[e.ends[0]].insert(e.ends[1]);
    adj[e.ends[1]].insert(e.ends[0]);
  }
  adj[s].insert(t);
  adj[t].insert(s);
  std::vector<std::vector<std::size_t>> order(V);
  for (std::size_t v = 0; v < V; ++v) order[v].assign(adj[v].begin(), adj[v].end());
  std::erase(order[s], t);
  order[s].insert(order[s].begin(), t);

  DfsResult r;
  r.pre.assign(V, kNone);
  r.parent.assign(V, kNone);
  r.low.assign(V, kNone);
  bool articulation = false;
  std::size_t root_children = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    r.pre[v] = r.preorder.size();
    r.preorder.push_back(v);
    r.low[v] = v;
    for (std::size_t w : order[v]) {
      if (r.pre[w] == kNone) {
        r.parent[w] = v;
        if (v == s) ++root_children;
        visit(w);
        if (r.pre[r.low[w]] < r.pre[r.low[v]]) r.low[v] = r.low[w];
        if (v != s && r.pre[r.low[w]] >= r.pre[v]) articulation = true;
      } else if (w != r.parent[v] && r.pre[w] < r.pre[r.low[v]]) {
        r.low[v] = w;
      }
    }
  };
  visit(s);
  r.biconnected = r.preorder.size() == V && root_children == 1 && !articulation;
  return r;
}

void check_endpoints(const TensorNetwork& net, std::size_t s, std::size_t t) {
  if (s >= net.vertices().size() || t >= net.vertices().size() || s == t)
    throw Error(ErrorCode::InvalidArgument, "s and t must be distinct vertices");
}

}  // namespace

bool has_bipolar_orientation(const TensorNetwork& net, std::size_t s, std::size_t t) {
  check_endpoints(net, s, t);
  if (net.vertices().size() == 2) {
    return !net.edges().empty();
  }
  return dfs_plus(net, s, t).biconnected;
}

std::optional<std::vector<std::size_t>> st_numbering(const TensorNetwork& net, std::size_t s, std::size_t t) {
  if (!has_bipolar_orientation(net, s, t)) return std::nullopt;
  const DfsResult r = dfs_plus(net, s, t);
  const std::size_t V = net.vertices().size();
  // Ebert's list construction: each vertex goes next to its DFS parent, on
  // the side fixed by the sign of its low point.
  std::list<std::size_t> L{s, t};
  std::vector<std::list<std::size_t>::iterator> where(V);
  where[s] = L.begin();
  where[t] = std::next(L.begin());
  std::vector<bool> minus(V, false);
  minus[s] = true;
  for (std::size_t k = 2; k < r.preorder.size(); ++k) {
    const std::size_t v = r.preorder[k];
    const std::size_t p = r.parent[v];
    if (minus[r.low[v]]) {
      where[v] = L.insert(where[p], v);
      minus[p] = false;
    } else {
      where[v] = L.insert(std::next(where[p]), v);
      minus[p] = true;
    }
  }
  return std::vector<std::size_t>(L.begin(), L.end());
}

bool is_st_numbering(const TensorNetwork& net, const std::vector<std::size_t>& order) {
  const std::size_t V = net.vertices().size();
  if (order.size() != V || V < 2) return false;
  std::vector<std::size_t> pos(V, kNone);
  for (std::size_t k = 0; k < V; ++k) {
    if (order[k] >= V || pos[order[k]] != kNone) return false;
    pos[order[k]] = k;
  }
  std::vector<bool> lower(V, false), higher(V, false);
  for (const auto& e : net.edges()) {
    const std::size_t a = e.ends[0], b = e.ends[1];
    if (pos[a] < pos[b]) {
      higher[a] = true;
      lower[b] = true;
    } else {
      higher[b] = true;
      lower[a] = true;
    }
  }
  for (std::size_t k = 1; k + 1 < V; ++k)
    if (!lower[order[k]] || !higher[order[k]]) return false;
  // The first and last vertex need a path to the rest; with all interior
  // vertices fine that reduces to s having a higher and t a lower neighbor.
  return higher[order.front()] && lower[order.back()];
}

// --- bounds --------------------------------------------------------------------------

namespace {

double power_norm(const Matrix& M) {
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 500;
  constexpr int kRestarts = 3;
  double best = 0.0;
  for (int r = 0; r < kRestarts; ++r) {
    Stream rng = Stream::substream(0xC0FFEEULL, static_cast<std::uint64_t>(r));
    Vector v(M.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
      Vector w = M.transpose() * (M * v);
      const double lambda = w.norm();
      if (lambda == 0.0) break;
      const double next = std::sqrt(lambda);
      v = w / lambda;
      const bool done = std::abs(next - sigma) <= kTol * next;
      sigma = next;
      if (done) break;
    }
    best = std::max(best, sigma);
  }
  return best;
}

}  // namespace

double mat_op_norm(const Tensor& T) {
  if (T.order == 0) return std::abs(T.data.at(0));
  if (T.order == 1) {
    double s = 0.0;
    for (double x : T.data) s += x * x;
    return std::sqrt(s);
  }
  const int q = T.order;
  const std::size_t n = T.n;
  double best = 0.0;
  // Bipartitions with axis 0 on the row side; the complement side gives the
  // transpose and the same norm.
  for (unsigned mask = 1; mask < (1u << q) - 1; mask += 2) {
    std::vector<int> row_axes, col_axes;
    for (int ax = 0; ax < q; ++ax) ((mask >> ax) & 1u ? row_axes : col_axes).push_back(ax);
    std::size_t rows = 1, cols = 1;
    for (std::size_t k = 0; k < row_axes.size(); ++k) rows *= n;
    for (std::size_t k = 0; k < col_axes.size(); ++k) cols *= n;
    Matrix M(rows, cols);
    std::vector<std::size_t> idx(q);
    for (std::size_t f = 0; f < T.data.size(); ++f) {
      std::size_t rem = f;
      for (int ax = q; ax-- > 0;) {
        idx[ax] = rem % n;
        rem /= n;
      }
      std::size_t r = 0, c = 0;
      for (int ax : row_axes) r = r * n + idx[ax];
      for (int ax : col_axes) c = c * n + idx[ax];
      M(r, c) = T.data[f];
    }
    best = std::max(best, power_norm(M));
  }
  return best;
}

double network_bound(const TensorNetwork& net, std::size_t s, std::size_t t) {
  net.validate();
  if (!has_bipolar_orientation(net, s, t))
    throw Error(ErrorCode::NoOrientation, "no bipolar orientation between the given source and sink");
  auto frobenius = [](const Tensor& T) {
    double sum = 0.0;
    for (double x : T.data) sum += x * x;
    return std::sqrt(sum);
  };
  double bound = frobenius(net.vertices()[s].tensor) * frobenius(net.vertices()[t].tensor);
  for (std::size_t v = 0; v < net.vertices().size(); ++v)
    if (v != s && v != t) bound *= mat_op_norm(net.vertices()[v].tensor);
  for (const auto& e : net.edges()) bound *= operator_norm(e.matrix);
  return bound;
}

}  // namespace covlaw
