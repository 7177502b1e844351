// covlaw: command-line entry point for the equilibrium solver, the replica
// harness, the cumulant tools and tensor-network fixtures.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "covlaw/cumulants.hpp"
#include "covlaw/error.hpp"
#include "covlaw/harness.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/network.hpp"
#include "covlaw/rng.hpp"

using namespace covlaw;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int threads = 0;
  std::string format = "md";
};

ExperimentConfig load(const Common& c) {
  if (c.config.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed_set) cfg.master_seed = c.seed;
  return cfg;
}

void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / name;
  std::ofstream(path) << text;
  std::cerr << "wrote " << path.string() << '\n';
}

std::string cplx_str(cplx z) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.15g%+.15gi", z.real(), z.imag());
  return buf;
}

int cmd_solve(const Common& c, std::size_t N_opt, const std::vector<std::string>& points) {
  const ExperimentConfig cfg = load(c);
  const std::size_t N = N_opt ? N_opt : cfg.N_ladder.front();
  const EnsembleSpec spec = ensemble_for(cfg, N);
  const ResolvedPopulation pop = population_for(cfg, spec, N);
  const SpectrumModel model(pop.sigma, N);
  const SupportProfile profile = classify_support(model);
  std::vector<SpectralPoint> pts;
  for (const auto& p : points) {
    const auto colon = p.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidPoint, "points are E:eta, got " + p);
    pts.push_back({std::stod(p.substr(0, colon)), std::stod(p.substr(colon + 1))});
  }
  if (pts.empty())
    for (const auto& g : cfg.grid)
      for (const auto& p : grid_points(g, N, profile)) pts.push_back(p);
  std::ostringstream out;
  out << "E,eta,m_tilde0,m0,residual,iterations,kappa\n";
  for (const auto& p : pts) {
    try {
      const EquilibriumSolution s = p.eta > 0.0 ? solve_mp(p, model, profile) : solve_mp_extended(p, model);
      out << p.E << ',' << p.eta << ',' << cplx_str(s.m_tilde0) << ',' << cplx_str(s.m0) << ',' << s.residual << ','
          << s.iterations << ',' << profile.kappa(p.E) << '\n';
    } catch (const Error& e) {
      out << p.E << ',' << p.eta << ",,,,," << "# " << e.what() << '\n';
    }
  }
  emit(c, "solve.csv", out.str());
  return 0;
}

int cmd_classify(const Common& c, std::size_t N_opt) {
  const ExperimentConfig cfg = load(c);
  const std::size_t N = N_opt ? N_opt : cfg.N_ladder.front();
  const EnsembleSpec spec = ensemble_for(cfg, N);
  const ResolvedPopulation pop = population_for(cfg, spec, N);
  const SpectrumModel model(pop.sigma, N);
  const SupportProfile prof = classify_support(model);
  ordered_json j;
  j["n"] = model.n();
  j["N"] = N;
  j["p"] = prof.p;
  j["edges"] = prof.edges;
  j["critical_points"] = prof.critical_points;
  j["edge_counts"] = prof.edge_counts;
  j["component_counts"] = prof.component_counts;
  j["cusps"] = prof.cusps;
  j["zero_atom"] = prof.zero_atom;
  emit(c, "classify.json", j.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const Common& c, std::size_t N_opt, std::size_t replica) {
  const ExperimentConfig cfg = load(c);
  const std::size_t N = N_opt ? N_opt : cfg.N_ladder.front();
  std::ostringstream out;
  for (const auto& r : simulate_replica(cfg, N, replica)) out << r.to_json() << '\n';
  emit(c, "replica.jsonl", out.str());
  return 0;
}

int cmd_verify(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const RunResult result = run(cfg, c.threads);
  write_outputs(cfg, result, c.out.empty() ? cfg.out_dir : c.out);
  std::cout << report(result.summary, parse_report_format(c.format));
  return 0;
}

int cmd_report(const Common& c, const std::string& records) {
  const ExperimentConfig cfg = load(c);
  auto recs = read_records(records);
  for (const auto& r : recs)
    if (r.config_hash != cfg.hash)
      std::cerr << "warning: record hash " << r.config_hash << " differs from the config\n";
  const SummaryTable summary = summarize(std::move(recs), cfg);
  emit(c, "report." + c.format, report(summary, parse_report_format(c.format)));
  return 0;
}

ScalarLaw parse_law(const std::string& name) {
  if (name == "gaussian") return ScalarLaw::Gaussian;
  if (name == "rademacher") return ScalarLaw::Rademacher;
  if (name == "exponential") return ScalarLaw::CenteredExponential;
  throw Error(ErrorCode::InvalidArgument, "unknown law " + name);
}

int cmd_cumulants(const Common& c, const std::string& samples_path, const std::string& law_name, std::size_t n,
                  std::size_t reps, int k_max, int pairs, int singles) {
  const ScalarLaw law = parse_law(law_name);
  Matrix X;
  if (!samples_path.empty()) {
    X = read_covl(samples_path);
  } else {
    X.resize(n, reps);
    const std::uint64_t seed = c.seed_set ? c.seed : 1;
    for (std::size_t j = 0; j < reps; ++j) {
      Stream s = Stream::substream(seed, j);
      for (std::size_t i = 0; i < n; ++i) {
        switch (law) {
          case ScalarLaw::Gaussian: X(i, j) = s.normal(); break;
          case ScalarLaw::Rademacher: X(i, j) = s.rademacher(); break;
          case ScalarLaw::CenteredExponential: X(i, j) = -std::log(s.uniform()) - 1.0; break;
        }
      }
    }
  }
  ordered_json j;
  j["n"] = X.rows();
  j["samples"] = X.cols();
  const auto cum = empirical_cumulants(X, k_max);
  for (int k = 1; k <= k_max; ++k) {
    const auto& t = cum[k - 1];
    const CumulantTensor ref = analytic_cumulant(law, X.rows(), k);
    double worst_z = 0.0, worst_abs = 0.0;
    for (std::size_t e = 0; e < t.tensor.data.size(); ++e) {
      const double d = std::abs(t.tensor.data[e] - ref.tensor.data[e]);
      worst_abs = std::max(worst_abs, d);
      if (t.stderr_[e] > 0.0) worst_z = std::max(worst_z, d / t.stderr_[e]);
    }
    std::vector<double> diag;
    std::vector<std::size_t> idx(k);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      std::fill(idx.begin(), idx.end(), static_cast<std::size_t>(i));
      diag.push_back(t.tensor.at(idx));
    }
    j["orders"].push_back({{"k", k},
                           {"diagonal", diag},
                           {"analytic_diagonal", scalar_cumulant(law, k)},
                           {"max_abs_deviation", worst_abs},
                           {"max_z", worst_z}});
  }
  if (pairs >= 0 && singles >= 0 && 2 * pairs + singles >= 1) {
    const TensorLaw ref = iid_law(law, X.rows());
    const IdentityCheck analytic = moment_tensor_identity_check(ref, ref, pairs, singles);
    const IdentityCheck empirical = moment_tensor_identity_check(X, ref, pairs, singles);
    j["identity"] = {{"pairs", pairs},
                     {"singles", singles},
                     {"analytic_residual", analytic.residual},
                     {"empirical_residual", empirical.residual},
                     {"empirical_max_z", empirical.max_z}};
  }
  emit(c, "cumulants.json", j.dump(2) + "\n");
  return 0;
}

int cmd_network(const Common& c, const std::string& fixture) {
  const NetworkFixture fx = load_network_fixture(fixture);
  ordered_json j;
  j["vertices"] = fx.network.vertices().size();
  j["edges"] = fx.network.edges().size();
  j["value"] = network_value(fx.network);
  if (fx.source && fx.sink) {
    const bool ok = has_bipolar_orientation(fx.network, *fx.source, *fx.sink);
    j["bipolar_orientation"] = ok;
    if (ok) {
      std::vector<std::string> names;
      for (std::size_t v : *st_numbering(fx.network, *fx.source, *fx.sink))
        names.push_back(fx.network.vertices()[v].name);
      j["st_numbering"] = names;
      j["bound"] = network_bound(fx.network, *fx.source, *fx.sink);
    }
  }
  emit(c, "network.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic equivalents and local-law experiments for sample covariance matrices"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "Experiment config (JSON)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { c.seed = s; c.seed_set = true; }, "Override the master seed");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--threads", c.threads, "Worker threads (0: OpenMP default)");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "md", "jsonl"}));
  };

  std::size_t N = 0, replica = 0, n = 3, reps = 1000000;
  int k_max = 4, pairs = -1, singles = -1;
  std::vector<std::string> points;
  std::string records, samples, law = "gaussian", fixture;

  auto* solve = app.add_subcommand("solve", "Solve the deformed Marchenko-Pastur equation at spectral points");
  add_common(solve);
  solve->add_option("--N", N, "Sample count (default: first of the ladder)");
  solve->add_option("--point", points, "E:eta, repeatable (default: the config grid)");

  auto* classify = app.add_subcommand("classify", "Support edges, components and edge counts");
  add_common(classify);
  classify->add_option("--N", N, "Sample count (default: first of the ladder)");

  auto* simulate = app.add_subcommand("simulate", "Run one replica and dump its records");
  add_common(simulate);
  simulate->add_option("--N", N, "Sample count (default: first of the ladder)");
  simulate->add_option("--replica", replica, "Replica index");

  auto* verify = app.add_subcommand("verify", "Full config run: records, summary and report");
  add_common(verify);

  auto* rep = app.add_subcommand("report", "Summarize a records file");
  add_common(rep);
  rep->add_option("--records", records, "records.jsonl")->required();

  auto* cum = app.add_subcommand("cumulants", "Empirical cumulants against an i.i.d. reference law");
  add_common(cum);
  cum->add_option("--samples", samples, "n x reps COVL matrix (default: draw from --law)");
  cum->add_option("--law", law, "gaussian, rademacher or exponential")
      ->check(CLI::IsMember({"gaussian", "rademacher", "exponential"}));
  cum->add_option("--n", n, "Dimension when drawing");
  cum->add_option("--reps", reps, "Samples when drawing");
  cum->add_option("--k", k_max, "Highest cumulant order")->check(CLI::Range(1, 6));
  cum->add_option("--pairs", pairs, "Moment-cumulant identity: number of centered pairs");
  cum->add_option("--singles", singles, "Moment-cumulant identity: number of single factors");

  auto* net = app.add_subcommand("network", "Evaluate a tensor-network fixture");
  add_common(net);
  net->add_option("--fixture", fixture, "Fixture JSON")->required();

  CLI11_PARSE(app, argc, argv);
  if (c.threads > 0) omp_set_num_threads(c.threads);

  try {
    if (*solve) return cmd_solve(c, N, points);
    if (*classify) return cmd_classify(c, N);
    if (*simulate) return cmd_simulate(c, N, replica);
    if (*verify) return cmd_verify(c);
    if (*rep) return cmd_report(c, records);
    if (*cum) return cmd_cumulants(c, samples, law, n, reps, k_max, pairs, singles);
    if (*net) return cmd_network(c, fixture);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  }
  return 0;
}
