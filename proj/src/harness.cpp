#include "covlaw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include <omp.h>

#include "json.hpp"

#include "covlaw/error.hpp"
#include "covlaw/rng.hpp"

extern "C" void openblas_set_num_threads(int);
extern "C" int openblas_get_num_threads(void);

namespace covlaw {

using nlohmann::json;
using nlohmann::ordered_json;

// --- records -------------------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

std::string ReplicaRecord::to_json(bool with_time) const {
  ordered_json j;
  j["config_hash"] = hex64(config_hash);
  j["N"] = N;
  j["replica"] = replica;
  j["seed"] = seed;
  j["grid"] = grid;
  j["point"] = point;
  j["grid_label"] = grid_label;
  j["kind"] = kind;
  j["E"] = E;
  j["eta"] = eta;
  for (const auto& [k, v] : values) j[k] = v;
  if (!anisotropic_errors.empty()) j["anisotropic_errors"] = anisotropic_errors;
  if (!error.empty()) j["error"] = error;
  if (with_time) j["wall_time"] = wall_time;
  return j.dump();
}

ReplicaRecord ReplicaRecord::from_json(const std::string& line) {
  const json j = json::parse(line);
  ReplicaRecord r;
  r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  r.N = j.at("N").get<std::size_t>();
  r.replica = j.at("replica").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.grid = j.at("grid").get<std::size_t>();
  r.point = j.at("point").get<std::size_t>();
  r.grid_label = j.at("grid_label").get<std::string>();
  r.kind = j.at("kind").get<std::string>();
  r.E = number_or_nan(j.at("E"));
  r.eta = number_or_nan(j.at("eta"));
  static const char* fixed[] = {"config_hash", "N", "replica", "seed", "grid", "point", "grid_label",
                                "kind", "E", "eta", "anisotropic_errors", "error", "wall_time"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(fixed), std::end(fixed), it.key()) != std::end(fixed)) continue;
    r.values[it.key()] = number_or_nan(it.value());
  }
  if (j.contains("anisotropic_errors")) r.anisotropic_errors = j.at("anisotropic_errors").get<std::vector<double>>();
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  if (j.contains("wall_time")) r.wall_time = number_or_nan(j.at("wall_time"));
  return r;
}

// --- per-N preparation -----------------------------------------------------------------

LadderContext prepare_ladder(const ExperimentConfig& config, std::size_t N) {
  LadderContext ctx;
  ctx.N = N;
  ctx.spec = ensemble_for(config, N);
  validate(ctx.spec);
  ctx.population = population_for(config, ctx.spec, N);
  ctx.model.emplace(ctx.population.sigma, N);
  ctx.profile = classify_support(*ctx.model);
  ctx.basis = PopulationBasis{ctx.population.sigma, ctx.population.basis};
  if (config.rigidity) ctx.table.emplace(*ctx.model, ctx.profile);
  for (const auto& g : config.grid) {
    std::vector<SpectralPoint> pts;
    try {
      pts = grid_points(g, N, ctx.profile);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "grid '" + g.label + "': " + e.what());
    }
    std::vector<std::optional<EquilibriumSolution>> sols;
    std::vector<std::string> errs;
    for (const auto& pt : pts) {
      if (g.kind == GridSpec::Kind::Outside) {
        sols.emplace_back();
        errs.emplace_back();
        continue;
      }
      try {
        sols.emplace_back(solve_mp(pt, *ctx.model, ctx.profile));
        errs.emplace_back();
      } catch (const Error& e) {
        sols.emplace_back();
        errs.emplace_back(e.what());
      }
    }
    ctx.points.push_back(std::move(pts));
    ctx.solutions.push_back(std::move(sols));
    ctx.solve_errors.push_back(std::move(errs));
  }
  return ctx;
}

// --- one replica -----------------------------------------------------------------------

namespace {

struct Probes {
  std::vector<BilinearVectors> queries;
  std::vector<std::string> recipe;  // per query
  std::vector<Vector> sample_vectors, population_vectors;
};

Vector gaussian_unit(std::size_t n, Stream& rng) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v(i) = rng.normal();
  return v / v.norm();
}

// Deterministic test vectors: they depend on the replica seed but never on G.
Probes build_probes(const ProbeSpec& spec, const PopulationBasis& basis, std::size_t n, std::size_t N,
                    std::uint64_t seed) {
  Probes p;
  Stream rng = Stream::substream(seed, 0x9b0be5ULL);
  for (const auto& recipe : spec.recipes) {
    for (std::size_t k = 0; k < spec.per_recipe; ++k) {
      Vector a(n), b(N);
      if (recipe == "random") {
        a = gaussian_unit(n, rng);
        b = gaussian_unit(N, rng);
      } else if (recipe == "sparse") {
        a.setZero();
        a(rng.next_u64() % n) = 1.0;
        b.setZero();
        const std::size_t j = rng.next_u64() % N;
        std::size_t l = rng.next_u64() % N;
        if (N > 1)
          while (l == j) l = rng.next_u64() % N;
        b(j) += 1.0;
        b(l) += 1.0;
        b /= b.norm();
      } else {  // top_eigenvector
        a = basis.O.col(std::min<std::size_t>(k, n - 1));
        b.setConstant(1.0 / std::sqrt(static_cast<double>(N)));
        if (k > 0) {
          for (std::size_t i = 0; i < N; ++i) b(i) *= (i % (k + 1) == 0) ? 1.0 : -1.0;
          b /= b.norm();
        }
      }
      BilinearVectors pop, smp, mixed;
      pop.u1 = a;
      pop.u2 = a;
      smp.v1 = b;
      smp.v2 = b;
      mixed.u1 = a;
      mixed.v2 = b;
      for (auto* q : {&pop, &smp, &mixed}) {
        p.queries.push_back(*q);
        p.recipe.push_back(recipe);
      }
      p.sample_vectors.push_back(b);
      p.population_vectors.push_back(a);
    }
  }
  return p;
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t g, std::size_t p) {
  return mix64(seed + mix64((static_cast<std::uint64_t>(g) << 20) + p + 1));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<ReplicaRecord> run_replica(const ExperimentConfig& config, const LadderContext& ctx,
                                       std::size_t replica, Execution exec) {
  const std::uint64_t seed = replica_seed(config.master_seed, replica);
  const std::size_t N = ctx.N;
  auto header = [&](std::size_t g, std::size_t p) {
    ReplicaRecord r;
    r.config_hash = config.hash;
    r.N = N;
    r.replica = replica;
    r.seed = seed;
    r.grid = g;
    r.point = p;
    if (g < config.grid.size()) {
      r.grid_label = config.grid[g].label;
      r.kind = to_string(config.grid[g].kind);
      r.E = ctx.points[g][p].E;
      r.eta = ctx.points[g][p].eta;
    } else {
      r.grid_label = "spectrum";
      r.kind = "spectrum";
    }
    return r;
  };
  const bool spectrum_record = config.rigidity || config.delocalization.has_value();
  auto all_failed = [&](const std::string& what, double t) {
    std::vector<ReplicaRecord> out;
    for (std::size_t g = 0; g < config.grid.size(); ++g)
      for (std::size_t p = 0; p < ctx.points[g].size(); ++p) {
        out.push_back(header(g, p));
        out.back().error = what;
        out.back().wall_time = t;
      }
    if (spectrum_record) {
      out.push_back(header(config.grid.size(), 0));
      out.back().error = what;
    }
    return out;
  };

  const auto t0 = std::chrono::steady_clock::now();
  Matrix G;
  SpectralSample S;
  try {
    if (const auto* gibbs = std::get_if<GibbsTilt>(&ctx.spec)) G = sample_gibbs(*gibbs, N, seed);
    else G = sample(ctx.spec, N, seed, exec);
    S = decompose(G);
  } catch (const Error& e) {
    return all_failed(e.what(), seconds_since(t0));
  }
  const double setup_time = seconds_since(t0);
  const std::size_t n = ctx.model->n();
  const Probes probes = build_probes(config.probes, ctx.basis, n, N, seed);
  const std::size_t entry_pairs =
      static_cast<std::size_t>(std::llround(config.probes.entrywise_pairs_per_N * static_cast<double>(N)));

  std::vector<ReplicaRecord> out;
  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    const GridSpec& spec = config.grid[g];
    for (std::size_t p = 0; p < ctx.points[g].size(); ++p) {
      const auto tp = std::chrono::steady_clock::now();
      ReplicaRecord rec = header(g, p);
      const SpectralPoint pt = ctx.points[g][p];
      try {
        auto per_recipe = [&](const std::vector<double>& errs, const char* prefix, double scale) {
          std::map<std::string, double> worst;
          for (std::size_t q = 0; q < errs.size(); ++q)
            worst[probes.recipe[q]] = std::max(worst[probes.recipe[q]], errs[q]);
          for (const auto& [name, v] : worst) {
            rec.values[std::string(prefix) + "_error_" + name] = v;
            rec.values[std::string("ratio_") + prefix + "_" + name] = v * scale;
          }
        };
        if (spec.kind == GridSpec::Kind::Outside) {
          const OutsideRecord o =
              outside_spectrum_record(S, pt, *ctx.model, ctx.profile, ctx.basis, probes.queries, spec.delta);
          rec.values["distance"] = o.distance;
          rec.values["population_error"] = o.population_error;
          rec.values["sample_error"] = o.sample_error;
          rec.values["bilinear_error"] = o.bilinear_error;
          rec.values["ratio_averaged"] = o.ratio_averaged;
          rec.values["ratio_bilinear"] = o.ratio_bilinear;
          rec.values["companion_residual"] = o.companion_residual;
          rec.anisotropic_errors = o.bilinear_errors;
          per_recipe(o.bilinear_errors, "bilinear", std::sqrt(static_cast<double>(N)));
        } else {
          if (!ctx.solutions[g][p]) throw Error(ErrorCode::NonConvergence, ctx.solve_errors[g][p]);
          const LocalLawRecord l = local_law_record(S, pt, *ctx.solutions[g][p], *ctx.model, ctx.profile,
                                                    ctx.basis, probes.queries, entry_pairs, point_seed(seed, g, p));
          rec.values["m_tilde_re"] = l.m_tilde.real();
          rec.values["m_tilde_im"] = l.m_tilde.imag();
          rec.values["m_tilde0_re"] = l.m_tilde0.real();
          rec.values["m_tilde0_im"] = l.m_tilde0.imag();
          rec.values["kappa"] = l.kappa;
          rec.values["psi"] = l.psi;
          rec.values["averaged_error"] = l.averaged_error;
          rec.values["averaged_bound"] = l.averaged_bound;
          rec.values["entrywise_error"] = l.entrywise_error;
          rec.values["anisotropic_error"] = l.anisotropic_error;
          rec.values["ratio_averaged"] = l.ratio_averaged;
          rec.values["ratio_entrywise"] = l.ratio_entrywise;
          rec.values["ratio_anisotropic"] = l.ratio_anisotropic;
          rec.values["self_consistency_residual"] = l.self_consistency_residual;
          rec.values["ward_residual"] = l.ward_residual;
          rec.values["companion_residual"] = l.companion_residual;
          rec.anisotropic_errors = l.anisotropic_errors;
          per_recipe(l.anisotropic_errors, "anisotropic", 1.0 / l.psi);
        }
        if (config.probes.schur_pairs > 0)
          rec.values["schur_residual"] =
              schur_block_residual(G, S, pt.z(), config.probes.schur_pairs, point_seed(seed, g, p) ^ 0x5c);
        if (config.sherman_morrison && pt.eta > 0.0)
          rec.values["sherman_morrison_residual"] =
              sherman_morrison_residual(G, S, pt.z(), replica % N, 2, point_seed(seed, g, p) ^ 0x53);
      } catch (const Error& e) {
        rec.values.clear();
        rec.anisotropic_errors.clear();
        rec.error = e.what();
      }
      rec.wall_time = seconds_since(tp) + (p == 0 && g == 0 ? setup_time : 0.0);
      out.push_back(std::move(rec));
    }
  }

  if (spectrum_record) {
    const auto tp = std::chrono::steady_clock::now();
    ReplicaRecord rec = header(config.grid.size(), 0);
    try {
      const double dN = static_cast<double>(N);
      rec.values["lambda_1"] = S.s(0) * S.s(0);
      if (config.rigidity) {
        const RigidityStats r = rigidity_stats(S, ctx.profile, *ctx.model, *ctx.table);
        rec.values["theta_1"] = ctx.table->location(1);
        rec.values["edge_deviation"] = r.deviation.front();
        rec.values["edge_deviation_scaled"] = r.deviation.front() * std::pow(dN, 2.0 / 3.0);
        rec.values["max_edge_scaled"] = *std::max_element(r.edge_scaled.begin(), r.edge_scaled.end());
        rec.values["median_bulk_scaled"] = median(r.bulk_scaled);
      }
      if (config.delocalization) {
        const DelocalizationStats d = delocalization_stats(S, config.delocalization->lo, config.delocalization->hi,
                                                           probes.sample_vectors, probes.population_vectors);
        rec.values["window_count"] = static_cast<double>(d.eigenvalues.size());
        rec.values["median_sup_norm"] = d.median_sup_norm;
        rec.values["max_sup_norm"] = d.max_sup_norm;
        rec.values["max_sample_overlap"] = d.max_sample_overlap;
        rec.values["max_population_overlap"] = d.max_population_overlap;
        rec.values["degenerate"] = d.degenerate ? 1.0 : 0.0;
      }
    } catch (const Error& e) {
      rec.values.clear();
      rec.error = e.what();
    }
    rec.wall_time = seconds_since(tp);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ReplicaRecord> simulate_replica(const ExperimentConfig& config, std::size_t N, std::size_t replica) {
  return run_replica(config, prepare_ladder(config, N), replica);
}

// --- aggregation -------------------------------------------------------------------------

namespace {

const std::vector<std::string>& slope_metrics() {
  static const std::vector<std::string> m{"averaged_error", "entrywise_error", "anisotropic_error",
                                          "population_error", "sample_error", "bilinear_error"};
  return m;
}

std::vector<SlopeThreshold> default_slopes(const ExperimentConfig& config) {
  std::vector<SlopeThreshold> out;
  for (const auto& g : config.grid) {
    if (g.kind == GridSpec::Kind::Outside) {
      out.push_back({g.label, "population_error", -1.25, -0.75});
      out.push_back({g.label, "bilinear_error", -0.75, -0.25});
    } else if (g.eta_exponents.size() == 1 && g.etas.empty()) {
      const double target = -(1.0 - g.eta_exponents.front());
      out.push_back({g.label, "averaged_error", target - 0.15, target + 0.15});
    }
  }
  return out;
}

bool record_less(const ReplicaRecord& a, const ReplicaRecord& b) {
  return std::tie(a.N, a.replica, a.grid, a.point) < std::tie(b.N, b.replica, b.grid, b.point);
}

}  // namespace

const SummaryRow* SummaryTable::find(std::size_t N, const std::string& grid, const std::string& metric,
                                     std::size_t point) const {
  for (const auto& r : rows)
    if (r.N == N && r.grid == grid && r.metric == metric && r.point == point) return &r;
  return nullptr;
}

const SlopeRow* SummaryTable::find_slope(const std::string& grid, const std::string& metric, std::size_t point) const {
  for (const auto& s : slopes)
    if (s.grid == grid && s.metric == metric && s.point == point) return &s;
  return nullptr;
}

SummaryTable summarize(std::vector<ReplicaRecord> records, const ExperimentConfig& config) {
  std::sort(records.begin(), records.end(), record_less);
  SummaryTable table;
  table.config_hash = config.hash;
  table.records = records.size();
  table.coverage_target = config.thresholds.coverage;

  // (N, grid, point) -> metric -> values, in sorted record order.
  struct Key {
    std::size_t N, grid, point;
    bool operator<(const Key& o) const { return std::tie(N, grid, point) < std::tie(o.N, o.grid, o.point); }
  };
  struct Group {
    std::string label, kind;
    double E = 0.0, eta = 0.0;
    std::map<std::string, std::vector<double>> values;
  };
  std::map<Key, Group> groups;
  for (const auto& r : records) {
    if (!r.error.empty()) {
      ++table.failed_records;
      continue;
    }
    Group& g = groups[{r.N, r.grid, r.point}];
    g.label = r.grid_label;
    g.kind = r.kind;
    g.E = r.E;
    g.eta = r.eta;
    for (const auto& [k, v] : r.values)
      if (std::isfinite(v)) g.values[k].push_back(v);
  }
  for (const auto& [key, g] : groups) {
    for (const auto& [metric, vals] : g.values) {
      SummaryRow row;
      row.N = key.N;
      row.grid = g.label;
      row.kind = g.kind;
      row.point = key.point;
      row.E = g.E;
      row.eta = g.eta;
      row.metric = metric;
      row.count = vals.size();
      row.mean = mean(vals);
      row.variance = vals.size() > 1 ? sample_variance(vals) : 0.0;
      row.p50 = quantile7(vals, 0.5);
      row.p95 = quantile7(vals, 0.95);
      auto th = config.thresholds.ratios.find(metric);
      const bool ratio_metric = th != config.thresholds.ratios.end() ||
                                (metric.rfind("ratio_anisotropic_", 0) == 0 &&
                                 config.thresholds.ratios.count("ratio_anisotropic"));
      if (ratio_metric && g.kind != "outside") {
        const double limit =
            th != config.thresholds.ratios.end() ? th->second : config.thresholds.ratios.at("ratio_anisotropic");
        row.threshold = limit;
        const auto ok = std::count_if(vals.begin(), vals.end(), [&](double v) { return v <= limit; });
        row.coverage = static_cast<double>(ok) / static_cast<double>(vals.size());
      }
      table.rows.push_back(std::move(row));
    }
  }

  const auto thresholds = config.thresholds.slopes.empty() ? default_slopes(config) : config.thresholds.slopes;
  for (std::size_t gi = 0; gi < config.grid.size(); ++gi) {
    const std::string& label = config.grid[gi].label;
    std::size_t points = 0;
    for (const auto& [key, g] : groups)
      if (key.grid == gi) points = std::max(points, key.point + 1);
    std::vector<std::string> metrics = slope_metrics();
    for (const auto& t : thresholds)
      if (t.grid == label && std::find(metrics.begin(), metrics.end(), t.metric) == metrics.end())
        metrics.push_back(t.metric);
    for (std::size_t p = 0; p < points; ++p) {
      for (const auto& metric : metrics) {
        std::vector<double> xs, ys;
        bool positive = true;
        for (std::size_t N : config.N_ladder) {
          const SummaryRow* row = table.find(N, label, metric, p);
          if (!row) continue;
          xs.push_back(static_cast<double>(N));
          ys.push_back(row->p50);
          positive = positive && row->p50 > 0.0;
        }
        if (xs.empty()) continue;
        SlopeRow s;
        s.grid = label;
        s.point = p;
        s.metric = metric;
        if (xs.size() >= 3 && positive) s.fit = loglog_fit(xs, ys);
        for (const auto& t : thresholds)
          if (t.grid == label && t.metric == metric) {
            s.lo = t.lo;
            s.hi = t.hi;
          }
        if (s.fit && s.lo) s.pass = s.fit->slope >= *s.lo && s.fit->slope <= *s.hi;
        table.slopes.push_back(std::move(s));
      }
    }
  }
  return table;
}

// --- the run ---------------------------------------------------------------------------

RunResult run(const ExperimentConfig& config, int threads) {
  std::vector<LadderContext> contexts;
  for (std::size_t N : config.N_ladder) contexts.push_back(prepare_ladder(config, N));

  struct Task {
    std::size_t ladder, replica;
  };
  std::vector<Task> tasks;
  for (std::size_t l = 0; l < contexts.size(); ++l)
    for (std::size_t r = 0; r < config.replicas; ++r) tasks.push_back({l, r});

  const int blas_threads = openblas_get_num_threads();
  const int eigen_threads = Eigen::nbThreads();
  openblas_set_num_threads(1);
  Eigen::setNbThreads(1);
  const int workers = threads > 0 ? threads : omp_get_max_threads();

  std::vector<std::vector<ReplicaRecord>> slots(tasks.size());
  const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::ptrdiff_t t = 0; t < T; ++t) {
    const Task task = tasks[t];
    try {
      slots[t] = run_replica(config, contexts[task.ladder], task.replica, Execution::Serial);
    } catch (const std::exception& e) {
      ReplicaRecord r;
      r.config_hash = config.hash;
      r.N = contexts[task.ladder].N;
      r.replica = task.replica;
      r.seed = replica_seed(config.master_seed, task.replica);
      r.grid_label = "replica";
      r.kind = "replica";
      r.error = e.what();
      slots[t] = {r};
    }
  }
  openblas_set_num_threads(blas_threads);
  Eigen::setNbThreads(eigen_threads);

  RunResult result;
  for (auto& s : slots)
    for (auto& r : s) result.records.push_back(std::move(r));
  std::sort(result.records.begin(), result.records.end(), record_less);
  result.summary = summarize(result.records, config);
  return result;
}

std::vector<ReplicaRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open records file " + path);
  std::vector<ReplicaRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(ReplicaRecord::from_json(line));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace covlaw
