#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "covlaw/error.hpp"
#include "covlaw/harness.hpp"

namespace covlaw {

namespace {

// Round-trip precision so identical summaries give identical bytes.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

bool is_ratio(const SummaryRow& r) { return r.metric.rfind("ratio_", 0) == 0; }

std::string coverage_verdict(const SummaryRow& r, double target) {
  if (!r.coverage) return "n/a";
  return *r.coverage >= target ? "pass" : "fail";
}

std::string slope_verdict(const SlopeRow& s) {
  if (!s.fit) return "n/a";
  if (!s.pass) return "-";
  return *s.pass ? "pass" : "fail";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  if (name == "jsonl") return ReportFormat::Jsonl;
  throw Error(ErrorCode::ConfigError, "unknown format " + name + " (csv, md, jsonl)");
}

std::string summary_csv(const SummaryTable& summary) {
  std::ostringstream out;
  out << "N,grid,kind,point,E,eta,metric,count,mean,variance,p50,p95,threshold,coverage\n";
  for (const auto& r : summary.rows)
    out << r.N << ',' << r.grid << ',' << r.kind << ',' << r.point << ',' << num(r.E) << ',' << num(r.eta) << ','
        << r.metric << ',' << r.count << ',' << num(r.mean) << ',' << num(r.variance) << ',' << num(r.p50) << ','
        << num(r.p95) << ',' << opt(r.threshold) << ',' << opt(r.coverage) << '\n';
  return out.str();
}

std::string report(const SummaryTable& summary, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Markdown: {
      out << "# Summary\n\n";
      out << "records: " << summary.records << ", failed: " << summary.failed_records << "\n\n";
      out << "## Ratio quantiles\n\n";
      out << "| N | grid | E | eta | metric | p50 | p95 | threshold | coverage | verdict |\n";
      out << "|---|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : summary.rows) {
        if (!is_ratio(r)) continue;
        out << "| " << r.N << " | " << r.grid << " | " << short_num(r.E) << " | " << short_num(r.eta) << " | "
            << r.metric << " | " << short_num(r.p50) << " | " << short_num(r.p95) << " | "
            << (r.threshold ? short_num(*r.threshold) : "") << " | "
            << (r.coverage ? short_num(*r.coverage) : "") << " | " << coverage_verdict(r, summary.coverage_target)
            << " |\n";
      }
      out << "\n## Slopes of median errors against N\n\n";
      out << "| grid | point | metric | slope | stderr | range | verdict |\n";
      out << "|---|---|---|---|---|---|---|\n";
      for (const auto& s : summary.slopes) {
        out << "| " << s.grid << " | " << s.point << " | " << s.metric << " | "
            << (s.fit ? short_num(s.fit->slope) : "n/a") << " | "
            << (s.fit ? short_num(s.fit->slope_stderr) : "n/a") << " | ";
        if (s.lo) out << "[" << short_num(*s.lo) << ", " << short_num(*s.hi) << "]";
        out << " | " << slope_verdict(s) << " |\n";
      }
      break;
    }
    case ReportFormat::Csv: {
      out << "table,N,grid,point,metric,p50,p95,threshold,coverage,slope,slope_stderr,lo,hi,verdict\n";
      for (const auto& r : summary.rows) {
        if (!is_ratio(r)) continue;
        out << "ratio," << r.N << ',' << r.grid << ',' << r.point << ',' << r.metric << ',' << num(r.p50) << ','
            << num(r.p95) << ',' << opt(r.threshold) << ',' << opt(r.coverage) << ",,,,,"
            << coverage_verdict(r, summary.coverage_target) << '\n';
      }
      for (const auto& s : summary.slopes) {
        out << "slope,," << s.grid << ',' << s.point << ',' << s.metric << ",,,,,"
            << (s.fit ? num(s.fit->slope) : "") << ',' << (s.fit ? num(s.fit->slope_stderr) : "") << ','
            << opt(s.lo) << ',' << opt(s.hi) << ',' << slope_verdict(s) << '\n';
      }
      break;
    }
    case ReportFormat::Jsonl: {
      using nlohmann::ordered_json;
      for (const auto& r : summary.rows) {
        ordered_json j{{"table", "quantiles"}, {"N", r.N},       {"grid", r.grid},   {"kind", r.kind},
                       {"point", r.point},     {"E", r.E},       {"eta", r.eta},     {"metric", r.metric},
                       {"count", r.count},     {"mean", r.mean}, {"variance", r.variance},
                       {"p50", r.p50},         {"p95", r.p95}};
        if (r.threshold) j["threshold"] = *r.threshold;
        if (r.coverage) j["coverage"] = *r.coverage;
        out << j.dump() << '\n';
      }
      for (const auto& s : summary.slopes) {
        ordered_json j{{"table", "slopes"}, {"grid", s.grid}, {"point", s.point}, {"metric", s.metric}};
        if (s.fit) {
          j["slope"] = s.fit->slope;
          j["slope_stderr"] = s.fit->slope_stderr;
        }
        if (s.lo) {
          j["lo"] = *s.lo;
          j["hi"] = *s.hi;
        }
        j["verdict"] = slope_verdict(s);
        out << j.dump() << '\n';
      }
      break;
    }
  }
  return out.str();
}

std::string plot_csv(const SummaryTable& summary) {
  // Error metric -> the scale it is compared against.
  auto bound = [&](const SummaryRow& r) -> std::optional<double> {
    const double N = static_cast<double>(r.N);
    if (r.metric == "averaged_error") {
      if (const auto* b = summary.find(r.N, r.grid, "averaged_bound", r.point)) return b->p50;
    } else if (r.metric == "entrywise_error" || r.metric == "anisotropic_error") {
      if (const auto* b = summary.find(r.N, r.grid, "psi", r.point)) return b->p50;
    } else if (r.metric == "population_error" || r.metric == "sample_error") {
      return 1.0 / N;
    } else if (r.metric == "bilinear_error") {
      return 1.0 / std::sqrt(N);
    }
    return std::nullopt;
  };
  std::ostringstream out;
  out << "grid,point,metric,N,eta,median,bound\n";
  for (const auto& r : summary.rows) {
    if (r.metric.size() < 6 || r.metric.compare(r.metric.size() - 6, 6, "_error") != 0) continue;
    out << r.grid << ',' << r.point << ',' << r.metric << ',' << r.N << ',' << num(r.eta) << ',' << num(r.p50) << ','
        << opt(bound(r)) << '\n';
  }
  return out.str();
}

void write_outputs(const ExperimentConfig& config, const RunResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  std::ostringstream records;
  for (const auto& r : result.records) records << r.to_json() << '\n';
  write_file(root / config.records_file, records.str());
  write_file(root / config.summary_file, summary_csv(result.summary));
  write_file(root / "plot.csv", plot_csv(result.summary));
  write_file(root / "report.md", report(result.summary, ReportFormat::Markdown));
}

}  // namespace covlaw
