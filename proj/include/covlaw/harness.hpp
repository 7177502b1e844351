#pragma once

// Seeded replica runs over an N ladder and a spectral grid, aggregation into
// quantile and slope tables, and the text outputs.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covlaw/config.hpp"
#include "covlaw/resolvent.hpp"
#include "covlaw/stats.hpp"

namespace covlaw {

struct ReplicaRecord {
  std::uint64_t config_hash = 0;
  std::size_t N = 0;
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  /// Index into the config grid; the per-replica spectrum record uses grid.size().
  std::size_t grid = 0;
  std::size_t point = 0;  // index among the points of that grid entry
  std::string grid_label;
  std::string kind;  // bulk, edge, outside or spectrum
  double E = 0.0;
  double eta = 0.0;
  /// Numeric fields by name: LocalLawRecord / OutsideRecord fields, identity
  /// residuals, rigidity and delocalization statistics.
  std::map<std::string, double> values;
  std::vector<double> anisotropic_errors;
  std::string error;  // module error for this point, empty on success
  double wall_time = 0.0;

  /// One JSON object, keys in a fixed order. Wall time is omitted when
  /// `with_time` is false so records can be compared for replay.
  std::string to_json(bool with_time = true) const;
  static ReplicaRecord from_json(const std::string& line);
};

/// Everything that depends on N but not on the replica.
struct LadderContext {
  std::size_t N = 0;
  EnsembleSpec spec;
  ResolvedPopulation population;
  std::optional<SpectrumModel> model;
  SupportProfile profile;
  PopulationBasis basis;
  std::optional<QuantileTable> table;
  std::vector<std::vector<SpectralPoint>> points;  // per grid entry
  std::vector<std::vector<std::optional<EquilibriumSolution>>> solutions;
  std::vector<std::vector<std::string>> solve_errors;
};

LadderContext prepare_ladder(const ExperimentConfig& config, std::size_t N);

/// All records of one replica, in (grid, point) order. A pure function of
/// (config, N, replica) apart from wall times.
std::vector<ReplicaRecord> run_replica(const ExperimentConfig& config, const LadderContext& ctx,
                                       std::size_t replica, Execution exec = Execution::Serial);
std::vector<ReplicaRecord> simulate_replica(const ExperimentConfig& config, std::size_t N, std::size_t replica);

struct SummaryRow {
  std::size_t N = 0;
  std::string grid;
  std::string kind;
  std::size_t point = 0;
  double E = 0.0;
  double eta = 0.0;
  std::string metric;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  std::optional<double> threshold;  // ratio metrics
  std::optional<double> coverage;   // fraction of replicas at or below the threshold
};

struct SlopeRow {
  std::string grid;
  std::size_t point = 0;
  std::string metric;
  std::optional<LineFit> fit;  // absent with fewer than 3 distinct N
  std::optional<double> lo, hi;
  std::optional<bool> pass;
};

struct SummaryTable {
  std::uint64_t config_hash = 0;
  std::vector<SummaryRow> rows;
  std::vector<SlopeRow> slopes;
  std::size_t records = 0;
  std::size_t failed_records = 0;
  double coverage_target = 0.95;  // ratio rows pass when coverage reaches this

  const SummaryRow* find(std::size_t N, const std::string& grid, const std::string& metric,
                         std::size_t point = 0) const;
  const SlopeRow* find_slope(const std::string& grid, const std::string& metric, std::size_t point = 0) const;
};

/// Sorts by (N, replica, grid, point) and aggregates the full multiset.
SummaryTable summarize(std::vector<ReplicaRecord> records, const ExperimentConfig& config);

struct RunResult {
  std::vector<ReplicaRecord> records;  // sorted
  SummaryTable summary;
};

/// Replica-level task pool with `threads` workers (0: OpenMP default). BLAS
/// and Eigen run single-threaded inside tasks, so results do not depend on
/// the thread count.
RunResult run(const ExperimentConfig& config, int threads = 0);

enum class ReportFormat { Csv, Markdown, Jsonl };
ReportFormat parse_report_format(const std::string& name);

/// Quantile table, one row per (N, grid, point, metric).
std::string summary_csv(const SummaryTable& summary);
/// Ratio quantiles and slopes with pass/fail in the requested format.
std::string report(const SummaryTable& summary, ReportFormat format);
/// grid, point, metric, x (N), median error and the matching bound.
std::string plot_csv(const SummaryTable& summary);

/// records.jsonl, summary CSV and plot CSV under `dir`.
void write_outputs(const ExperimentConfig& config, const RunResult& result, const std::string& dir);
std::vector<ReplicaRecord> read_records(const std::string& path);

}  // namespace covlaw
