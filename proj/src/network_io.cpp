#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "covlaw/error.hpp"
#include "covlaw/network.hpp"
#include "covlaw/rng.hpp"

namespace covlaw {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, "network fixture: " + what); }

void closed(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end())
      fail("unknown key " + k + " in " + where);
}

Tensor vertex_tensor(const json& spec, int order, std::size_t n) {
  Tensor T = Tensor::zeros(order, n);
  if (spec.contains("data")) {
    const auto& d = spec.at("data");
    if (!d.is_array() || d.size() != T.data.size()) fail("tensor data has the wrong length");
    for (std::size_t i = 0; i < T.data.size(); ++i) T.data[i] = d[i].get<double>();
    return T;
  }
  const std::string gen = spec.at("generator").get<std::string>();
  std::vector<std::size_t> idx(order);
  if (gen == "ones") {
    std::fill(T.data.begin(), T.data.end(), 1.0);
  } else if (gen == "delta" || gen == "diag") {
    std::vector<double> values(n, 1.0);
    if (gen == "diag") {
      values = spec.at("values").get<std::vector<double>>();
      if (values.size() != n) fail("diag generator needs n values");
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(idx.begin(), idx.end(), i);
      T.data[T.flat(idx)] = order == 0 ? 1.0 : values[i];
    }
  } else if (gen == "random") {
    Stream rng(spec.at("seed").get<std::uint64_t>());
    for (double& x : T.data) x = rng.normal();
  } else {
    fail("unknown tensor generator " + gen);
  }
  return T;
}

Matrix edge_matrix(const json& spec, std::size_t n) {
  if (spec.is_string()) {
    if (spec.get<std::string>() != "identity") fail("unknown matrix label " + spec.get<std::string>());
    return Matrix::Identity(n, n);
  }
  Matrix M(n, n);
  if (spec.is_array()) {
    if (spec.size() != n) fail("edge matrix must have n rows");
    for (std::size_t i = 0; i < n; ++i) {
      if (spec[i].size() != n) fail("edge matrix must have n columns");
      for (std::size_t j = 0; j < n; ++j) M(i, j) = spec[i][j].get<double>();
    }
    return M;
  }
  if (spec.at("generator").get<std::string>() != "random") fail("unknown matrix generator");
  Stream rng(spec.at("seed").get<std::uint64_t>());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) M(i, j) = rng.normal();
  return M;
}

}  // namespace

NetworkFixture parse_network_fixture(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(e.what());
  }
  try {
    closed(doc, {"dim", "vertices", "edges", "source", "sink"}, "fixture");
    const std::size_t n = doc.at("dim").get<std::size_t>();
    if (n == 0) fail("dim must be positive");
    NetworkFixture fx{TensorNetwork(n), std::nullopt, std::nullopt};

    // Incidence order per vertex comes from its own edge list.
    std::map<std::string, std::vector<std::string>> vertex_edges;
    std::map<std::string, std::size_t> vertex_id;
    for (const auto& v : doc.at("vertices")) {
      closed(v, {"name", "edges", "tensor"}, "vertex");
      const std::string name = v.at("name").get<std::string>();
      if (vertex_id.count(name)) fail("duplicate vertex " + name);
      vertex_edges[name] = v.value("edges", std::vector<std::string>{});
      const int order = static_cast<int>(vertex_edges[name].size());
      vertex_id[name] = fx.network.add_vertex(name, vertex_tensor(v.at("tensor"), order, n));
    }
    std::map<std::string, std::size_t> edge_id;
    for (const auto& e : doc.at("edges")) {
      closed(e, {"name", "ends", "matrix"}, "edge");
      const std::string name = e.at("name").get<std::string>();
      if (edge_id.count(name)) fail("duplicate edge " + name);
      const auto ends = e.at("ends").get<std::vector<std::string>>();
      if (ends.size() != 2 || !vertex_id.count(ends[0]) || !vertex_id.count(ends[1]))
        fail("edge " + name + " needs two known endpoints");
      const json label = e.contains("matrix") ? e.at("matrix") : json("identity");
      edge_id[name] = fx.network.add_edge(name, vertex_id[ends[0]], vertex_id[ends[1]], edge_matrix(label, n));
    }
    for (const auto& [vname, enames] : vertex_edges) {
      std::vector<std::size_t> order;
      for (const auto& en : enames) {
        if (!edge_id.count(en)) fail("vertex " + vname + " lists unknown edge " + en);
        order.push_back(edge_id[en]);
      }
      fx.network.set_incidence_order(vertex_id[vname], std::move(order));
    }
    fx.network.validate();
    auto endpoint = [&](const char* key) -> std::optional<std::size_t> {
      if (!doc.contains(key)) return std::nullopt;
      const auto name = doc.at(key).get<std::string>();
      if (!vertex_id.count(name)) fail(std::string(key) + " names an unknown vertex");
      return vertex_id[name];
    };
    fx.source = endpoint("source");
    fx.sink = endpoint("sink");
    return fx;
  } catch (const json::exception& e) {
    fail(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(e.what());
  }
}

NetworkFixture load_network_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_fixture(ss.str());
}

std::string dump_network_fixture(const NetworkFixture& fx) {
  const auto& net = fx.network;
  json doc;
  doc["dim"] = net.n();
  json vertices = json::array();
  for (const auto& v : net.vertices()) {
    json edges = json::array();
    for (std::size_t e : v.incidences) edges.push_back(net.edges()[e].name);
    vertices.push_back({{"name", v.name}, {"edges", edges}, {"tensor", {{"data", v.tensor.data}}}});
  }
  json edges = json::array();
  for (const auto& e : net.edges()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < e.matrix.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < e.matrix.cols(); ++j) row.push_back(e.matrix(i, j));
      rows.push_back(row);
    }
    edges.push_back({{"name", e.name},
                     {"ends", {net.vertices()[e.ends[0]].name, net.vertices()[e.ends[1]].name}},
                     {"matrix", rows}});
  }
  doc["vertices"] = vertices;
  doc["edges"] = edges;
  if (fx.source) doc["source"] = net.vertices()[*fx.source].name;
  if (fx.sink) doc["sink"] = net.vertices()[*fx.sink].name;
  return doc.dump(2);
}

}  // namespace covlaw
