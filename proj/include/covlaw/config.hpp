#pragma once

// Experiment configuration: a closed-schema JSON document. Unknown keys are
// rejected so that a config plus a replica index always replays the same run.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covlaw/ensembles.hpp"
#include "covlaw/equilibrium.hpp"

namespace covlaw {

struct GridSpec {
  enum class Kind { Bulk, Edge, Outside };
  Kind kind = Kind::Bulk;
  std::string label;
  double E = 0.0;                      // bulk and outside
  std::size_t edge = 1;                // edge: one-based index into the edge list
  double offset = 0.0;                 // edge: E = x_edge + offset * N^{-offset_exponent}
  double offset_exponent = 0.0;
  std::vector<double> eta_exponents;   // eta = N^{-a}
  std::vector<double> etas;            // explicit eta values
  double delta = 0.5;                  // outside: required distance to the support
};

std::string to_string(GridSpec::Kind kind);

struct ProbeSpec {
  std::vector<std::string> recipes{"random", "sparse", "top_eigenvector"};
  std::size_t per_recipe = 1;
  double entrywise_pairs_per_N = 4.0;  // off-diagonal probes = this * N
  std::size_t schur_pairs = 2;
};

struct SlopeThreshold {
  std::string grid;    // grid label
  std::string metric;  // record field
  double lo = 0.0;
  double hi = 0.0;
};

struct Thresholds {
  std::map<std::string, double> ratios{
      {"ratio_averaged", 10.0}, {"ratio_entrywise", 10.0}, {"ratio_anisotropic", 10.0}};
  double coverage = 0.95;
  /// Empty: derived from the grid (bulk: -(1 - a) +- 0.15 for averaged_error;
  /// outside: -1 +- 0.25 for population_error, -0.5 +- 0.25 for bilinear_error).
  std::vector<SlopeThreshold> slopes;
};

struct DelocalizationWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct ExperimentConfig {
  std::string canonical;  // canonical JSON text the hash is taken over
  std::uint64_t hash = 0;

  std::string family;
  /// Raw ensemble section; resolved per N by `ensemble_for`.
  std::string ensemble_json;
  std::string spectrum_json;  // "ensemble", {"identity": s} or {"atoms": [[v, frac], ...]}
  std::size_t covariance_reps = 200000;

  std::vector<std::size_t> N_ladder;
  std::vector<GridSpec> grid;
  std::size_t replicas = 1;
  std::uint64_t master_seed = 0;
  ProbeSpec probes;
  bool rigidity = false;
  std::optional<DelocalizationWindow> delocalization;
  bool sherman_morrison = false;
  Thresholds thresholds;
  std::string out_dir = "out";
  std::string records_file = "records.jsonl";
  std::string summary_file = "summary.csv";
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// Parses and validates; every failure is ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// The ensemble at sample count N (dimensions may scale with N).
EnsembleSpec ensemble_for(const ExperimentConfig& config, std::size_t N);

/// Population spectrum and eigenbasis at sample count N.
struct ResolvedPopulation {
  std::vector<double> sigma;  // descending
  Matrix basis;               // n x n, columns aligned with sigma
  Provenance provenance = Provenance::Exact;
};
ResolvedPopulation population_for(const ExperimentConfig& config, const EnsembleSpec& spec, std::size_t N);

/// Points of grid entry g at sample count N, given the support profile.
std::vector<SpectralPoint> grid_points(const GridSpec& g, std::size_t N, const SupportProfile& profile);

}  // namespace covlaw
