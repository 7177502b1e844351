#include "covlaw/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/resolvent.hpp"
#include "covlaw/rng.hpp"

namespace covlaw {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

std::size_t scaled_dimension(const json& e, std::size_t N) {
  if (e.contains("n")) return e.at("n").get<std::size_t>();
  const double gamma = e.at("gamma").get<double>();
  if (!(gamma > 0.0)) fail("ensemble.gamma must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(gamma * static_cast<double>(N))));
}

EntryDistribution parse_entry(const json& e) {
  EntryDistribution d;
  if (e.is_null()) return d;
  check_keys(e, {"law", "df"}, "entry");
  const std::string law = get_or<std::string>(e, "law", "gaussian");
  if (law == "gaussian") d.law = EntryLaw::Gaussian;
  else if (law == "rademacher") d.law = EntryLaw::Rademacher;
  else if (law == "student_t") {
    d.law = EntryLaw::StudentT;
    d.df = e.at("df").get<int>();
  } else fail("entry.law: unknown law " + law);
  return d;
}

// Weights (fractions) to multiplicities summing to n; the last atom takes the remainder.
std::vector<std::pair<double, std::size_t>> atoms_for(const json& atoms, std::size_t n) {
  std::vector<std::pair<double, std::size_t>> out;
  std::size_t used = 0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const double v = atoms[a].at(0).get<double>();
    const double frac = atoms[a].at(1).get<double>();
    if (!(v >= 0.0) || !(frac >= 0.0)) fail("atoms need nonnegative values and weights");
    std::size_t m = a + 1 == atoms.size() ? n - used
                                          : static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    m = std::min(m, n - used);
    used += m;
    out.emplace_back(v, m);
  }
  if (used != n) fail("atom multiplicities do not cover the dimension");
  return out;
}

Matrix generate_x(const json& x, std::size_t rows, std::size_t cols) {
  check_keys(x, {"kind", "seed", "path", "scale"}, "x");
  const std::string kind = x.at("kind").get<std::string>();
  const double scale = get_or<double>(x, "scale", 1.0);
  Matrix M;
  if (kind == "orthogonal") M = random_orthogonal_columns(rows, cols, x.at("seed").get<std::uint64_t>());
  else if (kind == "gaussian") M = gaussian_scaled(rows, cols, x.at("seed").get<std::uint64_t>());
  else if (kind == "file") {
    M = read_covl(x.at("path").get<std::string>());
    if (static_cast<std::size_t>(M.rows()) != rows || static_cast<std::size_t>(M.cols()) != cols)
      fail("x file has the wrong shape");
  } else fail("x.kind: unknown generator " + kind);
  return M * scale;
}

Polynomial parse_polynomial(const json& p) {
  check_keys(p, {"basis", "coeffs"}, "activation");
  Polynomial poly;
  const std::string basis = get_or<std::string>(p, "basis", "power");
  if (basis == "power") poly.basis = Polynomial::Basis::Power;
  else if (basis == "hermite") poly.basis = Polynomial::Basis::Hermite;
  else fail("activation.basis: unknown basis " + basis);
  poly.coeffs = p.at("coeffs").get<std::vector<double>>();
  if (poly.coeffs.empty()) fail("activation.coeffs is empty");
  return poly;
}

ScalarFunction parse_scalar_function(const json& s) {
  check_keys(s, {"kind", "scale", "coeffs"}, "sigma");
  ScalarFunction f;
  const std::string kind = s.at("kind").get<std::string>();
  if (kind == "tanh") {
    f.kind = ScalarFunction::Kind::Tanh;
    f.scale = get_or<double>(s, "scale", 1.0);
  } else if (kind == "polynomial") {
    f.kind = ScalarFunction::Kind::Polynomial;
    f.coeffs = s.at("coeffs").get<std::vector<double>>();
  } else fail("sigma.kind: unknown function " + kind);
  return f;
}

void validate_ensemble_keys(const json& e) {
  const std::string family = e.at("family").get<std::string>();
  static const std::map<std::string, std::set<std::string>> keys{
      {"separable", {"family", "gamma", "n", "entry", "factor"}},
      {"sphere", {"family", "gamma", "n"}},
      {"mixture", {"family", "gamma", "n", "c", "c_exponent", "c_scale"}},
      {"random_features", {"family", "gamma", "n", "d_ratio", "x", "activation", "entry", "centered"}},
      {"gibbs_tilt", {"family", "gamma", "n", "terms_ratio", "x", "sigma", "lambda", "mcmc", "probe_points"}},
      {"chaos_pairs", {"family", "d", "M"}},
  };
  auto it = keys.find(family);
  if (it == keys.end()) fail("ensemble.family: unknown family " + family);
  check_keys(e, it->second, "ensemble");
}

GridSpec parse_grid(const json& g, std::size_t index) {
  check_keys(g, {"kind", "label", "E", "edge", "offset", "offset_exponent", "eta_exponents", "etas", "delta"},
             "grid[" + std::to_string(index) + "]");
  GridSpec s;
  const std::string kind = g.at("kind").get<std::string>();
  if (kind == "bulk") s.kind = GridSpec::Kind::Bulk;
  else if (kind == "edge") s.kind = GridSpec::Kind::Edge;
  else if (kind == "outside") s.kind = GridSpec::Kind::Outside;
  else fail("grid.kind: unknown kind " + kind);
  s.label = get_or<std::string>(g, "label", kind + std::to_string(index));
  s.E = get_or<double>(g, "E", 0.0);
  s.edge = get_or<std::size_t>(g, "edge", 1);
  s.offset = get_or<double>(g, "offset", 0.0);
  s.offset_exponent = get_or<double>(g, "offset_exponent", 0.0);
  s.eta_exponents = get_or<std::vector<double>>(g, "eta_exponents", {});
  s.etas = get_or<std::vector<double>>(g, "etas", {});
  s.delta = get_or<double>(g, "delta", 0.5);
  if (s.kind == GridSpec::Kind::Outside && s.etas.empty() && s.eta_exponents.empty()) s.etas = {0.0};
  if (s.eta_exponents.empty() && s.etas.empty()) fail("grid '" + s.label + "' has no eta values");
  for (double a : s.eta_exponents)
    if (!(a > 0.0 && a < 1.0)) fail("grid '" + s.label + "': eta exponents must lie in (0, 1)");
  for (double eta : s.etas)
    if (!(eta >= 0.0) || (eta == 0.0 && s.kind != GridSpec::Kind::Outside))
      fail("grid '" + s.label + "': eta must be positive away from the outside window");
  if (s.kind == GridSpec::Kind::Edge && s.edge == 0) fail("grid.edge is one-based");
  return s;
}

}  // namespace

std::string to_string(GridSpec::Kind kind) {
  switch (kind) {
    case GridSpec::Kind::Bulk: return "bulk";
    case GridSpec::Kind::Edge: return "edge";
    case GridSpec::Kind::Outside: return "outside";
  }
  return "";
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    check_keys(doc, {"ensemble", "spectrum", "covariance_reps", "N_ladder", "grid", "replicas", "master_seed",
                     "probes", "rigidity", "delocalization", "sherman_morrison", "thresholds", "outputs"},
               "config");
    c.canonical = doc.dump();
    c.hash = fnv1a(c.canonical);

    const json& e = doc.at("ensemble");
    validate_ensemble_keys(e);
    c.family = e.at("family").get<std::string>();
    c.ensemble_json = e.dump();
    c.spectrum_json = doc.contains("spectrum") ? doc.at("spectrum").dump() : json("ensemble").dump();
    c.covariance_reps = get_or<std::size_t>(doc, "covariance_reps", c.covariance_reps);

    c.N_ladder = doc.at("N_ladder").get<std::vector<std::size_t>>();
    if (c.N_ladder.empty()) fail("N_ladder is empty");
    for (std::size_t i = 0; i < c.N_ladder.size(); ++i) {
      if (c.N_ladder[i] < 2) fail("N_ladder entries must be >= 2");
      if (i > 0 && c.N_ladder[i] <= c.N_ladder[i - 1]) fail("N_ladder must be strictly ascending");
    }
    const json& grid = doc.at("grid");
    if (!grid.is_array() || grid.empty()) fail("grid must be a nonempty list");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      c.grid.push_back(parse_grid(grid[i], i));
      if (!labels.insert(c.grid.back().label).second) fail("duplicate grid label " + c.grid.back().label);
    }
    c.replicas = doc.at("replicas").get<std::size_t>();
    if (c.replicas < 1) fail("replicas must be >= 1");
    c.master_seed = doc.at("master_seed").get<std::uint64_t>();

    if (doc.contains("probes")) {
      const json& p = doc.at("probes");
      check_keys(p, {"recipes", "per_recipe", "entrywise_pairs_per_N", "schur_pairs"}, "probes");
      c.probes.recipes = get_or(p, "recipes", c.probes.recipes);
      c.probes.per_recipe = get_or(p, "per_recipe", c.probes.per_recipe);
      c.probes.entrywise_pairs_per_N = get_or(p, "entrywise_pairs_per_N", c.probes.entrywise_pairs_per_N);
      c.probes.schur_pairs = get_or(p, "schur_pairs", c.probes.schur_pairs);
      for (const auto& r : c.probes.recipes)
        if (r != "random" && r != "sparse" && r != "top_eigenvector") fail("probes: unknown recipe " + r);
    }
    c.rigidity = get_or(doc, "rigidity", false);
    if (doc.contains("delocalization")) {
      const json& d = doc.at("delocalization");
      check_keys(d, {"lo", "hi"}, "delocalization");
      c.delocalization = DelocalizationWindow{d.at("lo").get<double>(), d.at("hi").get<double>()};
      if (!(c.delocalization->lo < c.delocalization->hi)) fail("delocalization window needs lo < hi");
    }
    c.sherman_morrison = get_or(doc, "sherman_morrison", false);

    if (doc.contains("thresholds")) {
      const json& t = doc.at("thresholds");
      check_keys(t, {"ratios", "coverage", "slopes"}, "thresholds");
      if (t.contains("ratios"))
        for (auto it = t.at("ratios").begin(); it != t.at("ratios").end(); ++it)
          c.thresholds.ratios[it.key()] = it.value().get<double>();
      c.thresholds.coverage = get_or(t, "coverage", c.thresholds.coverage);
      if (t.contains("slopes"))
        for (const auto& s : t.at("slopes")) {
          check_keys(s, {"grid", "metric", "lo", "hi"}, "thresholds.slopes");
          c.thresholds.slopes.push_back(
              {s.at("grid").get<std::string>(), s.at("metric").get<std::string>(), s.at("lo").get<double>(),
               s.at("hi").get<double>()});
          if (!labels.count(c.thresholds.slopes.back().grid)) fail("thresholds.slopes names an unknown grid");
        }
    }
    if (doc.contains("outputs")) {
      const json& o = doc.at("outputs");
      check_keys(o, {"dir", "records", "summary"}, "outputs");
      c.out_dir = get_or(o, "dir", c.out_dir);
      c.records_file = get_or(o, "records", c.records_file);
      c.summary_file = get_or(o, "summary", c.summary_file);
    }
    // Resolve the smallest ensemble once so structural errors surface here.
    validate(ensemble_for(c, c.N_ladder.front()));
  } catch (const json::exception& ex) {
    fail(std::string("config: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::ConfigError) throw;
    fail(ex.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

EnsembleSpec ensemble_for(const ExperimentConfig& config, std::size_t N) {
  const json e = json::parse(config.ensemble_json);
  const std::string family = e.at("family").get<std::string>();
  if (family == "separable") {
    Separable s;
    s.entry = parse_entry(e.value("entry", json()));
    const json f = e.value("factor", json{{"kind", "identity"}});
    check_keys(f, {"kind", "scale", "atoms", "path"}, "factor");
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "file") {
      s.factor = read_covl(f.at("path").get<std::string>());
      return s;
    }
    const std::size_t n = scaled_dimension(e, N);
    if (kind == "identity") {
      s.factor = Matrix::Identity(n, n) * std::sqrt(get_or<double>(f, "scale", 1.0));
    } else if (kind == "atoms") {
      s.factor = Matrix::Zero(n, n);
      std::size_t i = 0;
      for (auto [v, m] : atoms_for(f.at("atoms"), n))
        for (std::size_t k = 0; k < m; ++k, ++i) s.factor(i, i) = std::sqrt(v);
    } else {
      fail("factor.kind: unknown kind " + kind);
    }
    return s;
  }
  if (family == "sphere") return Sphere{scaled_dimension(e, N)};
  if (family == "mixture") {
    Mixture m;
    m.d = scaled_dimension(e, N);
    if (e.contains("c_exponent"))
      m.c = get_or<double>(e, "c_scale", 1.0) * std::pow(static_cast<double>(N), -e.at("c_exponent").get<double>());
    else
      m.c = e.at("c").get<double>();
    return m;
  }
  if (family == "random_features") {
    RandomFeatures rf;
    const std::size_t n = scaled_dimension(e, N);
    const std::size_t d = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(get_or<double>(e, "d_ratio", 1.0) * static_cast<double>(n))));
    rf.X = generate_x(e.at("x"), n, d);
    rf.activation = {parse_polynomial(e.at("activation"))};
    rf.entry = parse_entry(e.value("entry", json()));
    rf.centered = get_or<bool>(e, "centered", true);
    return rf;
  }
  if (family == "gibbs_tilt") {
    GibbsTilt g;
    const std::size_t d = scaled_dimension(e, N);
    const std::size_t terms = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(get_or<double>(e, "terms_ratio", 1.0) * static_cast<double>(d))));
    g.X = generate_x(e.at("x"), terms, d);
    g.sigma = {parse_scalar_function(e.at("sigma"))};
    g.lambda = e.at("lambda").get<double>();
    g.probe_points = get_or<std::size_t>(e, "probe_points", g.probe_points);
    if (e.contains("mcmc")) {
      const json& m = e.at("mcmc");
      check_keys(m, {"step", "burn_in", "thin", "chains", "mean_run"}, "mcmc");
      g.mcmc.step = get_or(m, "step", g.mcmc.step);
      g.mcmc.burn_in = get_or(m, "burn_in", g.mcmc.burn_in);
      g.mcmc.thin = get_or(m, "thin", g.mcmc.thin);
      g.mcmc.chains = get_or(m, "chains", g.mcmc.chains);
      g.mcmc.mean_run = get_or(m, "mean_run", g.mcmc.mean_run);
    }
    return g;
  }
  if (family == "chaos_pairs") return ChaosPairs{e.at("d").get<std::size_t>(), e.at("M").get<std::size_t>()};
  fail("unknown family " + family);
}

ResolvedPopulation population_for(const ExperimentConfig& config, const EnsembleSpec& spec, std::size_t N) {
  const std::size_t n = dimension(spec);
  const json s = json::parse(config.spectrum_json);
  ResolvedPopulation out;
  if (s.is_object() && s.contains("identity")) {
    check_keys(s, {"identity"}, "spectrum");
    const double scale = s.at("identity").get<double>();
    out.sigma.assign(n, scale);
    out.basis = Matrix::Identity(n, n);
    return out;
  }
  if (s.is_object() && s.contains("atoms")) {
    check_keys(s, {"atoms"}, "spectrum");
    auto atoms = atoms_for(s.at("atoms"), n);
    std::sort(atoms.begin(), atoms.end(), [](auto a, auto b) { return a.first > b.first; });
    for (auto [v, m] : atoms) out.sigma.insert(out.sigma.end(), m, v);
    out.basis = Matrix::Identity(n, n);
    return out;
  }
  if (!(s.is_string() && s.get<std::string>() == "ensemble")) fail("spectrum must be \"ensemble\", identity or atoms");

  PopulationCovariance cov;
  try {
    cov = population_covariance(spec);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnsupportedAnalytic) throw;
    cov = estimate_covariance(spec, config.covariance_reps, mix64(config.master_seed ^ (N * kGoldenGamma)));
  }
  out.provenance = cov.provenance;
  // Multiples of the identity skip the eigendecomposition.
  const double d0 = cov.matrix(0, 0);
  if ((cov.matrix - d0 * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0) {
    out.sigma.assign(n, d0);
    out.basis = Matrix::Identity(n, n);
    return out;
  }
  PopulationBasis b = population_basis(cov.matrix);
  out.sigma = std::move(b.sigma);
  out.basis = std::move(b.O);
  return out;
}

std::vector<SpectralPoint> grid_points(const GridSpec& g, std::size_t N, const SupportProfile& profile) {
  const double dN = static_cast<double>(N);
  double E = g.E;
  if (g.kind == GridSpec::Kind::Edge) {
    if (g.edge > profile.edges.size()) throw Error(ErrorCode::InvalidPoint, "grid edge index beyond the support edges");
    E = profile.edges[g.edge - 1] + g.offset * std::pow(dN, -g.offset_exponent);
  }
  std::vector<SpectralPoint> pts;
  for (double a : g.eta_exponents) pts.push_back({E, std::pow(dN, -a)});
  for (double eta : g.etas) pts.push_back({E, eta});
  return pts;
}

}  // namespace covlaw
