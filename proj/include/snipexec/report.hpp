#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snipexec/dependencies.hpp"
#include "snipexec/exec_backend.hpp"
#include "snipexec/generator.hpp"
#include "snipexec/model.hpp"
#include "snipexec/search.hpp"

namespace snipexec {

/// Version of the per-snippet report and summary JSON layouts.
inline constexpr int kReportSchemaVersion = 1;

/// One corpus case: a finished search, or a case that could not be searched.
struct SnippetReport {
  std::string id;
  std::optional<std::string> skip_reason;  // set exactly for skipped cases
  Snippet snippet;
  SearchResult result;
  PrefixTree tree;
  std::vector<double> cumulative_after_step;
  double wall_time = 0.0;

  bool skipped() const { return skip_reason.has_value(); }
  bool operator==(const SnippetReport&) const = default;
};

struct SkippedCase {
  std::string id;
  std::string reason;

  bool operator==(const SkippedCase&) const = default;
};

struct WallTimeStats {
  double total = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;

  bool operator==(const WallTimeStats&) const = default;
};

/// Aggregates over searched cases; skipped cases are listed but excluded from every mean.
struct CorpusSummary {
  int snippet_count = 0;
  double mean_coverage_P = 0.0;
  double mean_coverage_pbest = 0.0;
  double full_execution_rate = 0.0;
  double mean_prefixes_explored = 0.0;
  double mean_P_size = 0.0;
  std::array<double, 3> coverage_after_step{};  // non-decreasing
  WallTimeStats wall_time;
  int degraded_count = 0;
  std::vector<SkippedCase> skipped;

  bool operator==(const CorpusSummary&) const = default;
};

/// Union of the coverage of executed nodes whose origin step is at most `step`.
CoverageSet coverage_through(const PrefixTree& tree, Step step);

double coverage_P(const SnippetReport& report);
double coverage_pbest(const SnippetReport& report);

/// Recomputes every aggregate from the reports alone; order-insensitive.
CorpusSummary summarize(std::vector<SnippetReport> reports);

struct CorpusOptions {
  std::string out_dir;
  int workers = 1;
  std::function<std::unique_ptr<Generator>()> make_generator;
  std::function<std::unique_ptr<ExecBackend>()> make_backend;
  Installer* installer = nullptr;  // shared across workers; required when cfg.install_deps
  bool memoize = true;             // reuse evaluations of repeated prefix texts within a snippet
  std::function<void(const SnippetReport&)> on_report;
};

/// Sorted `*.py` files of a flat directory; the id of each is its stem.
std::vector<std::string> corpus_files(const std::string& dir);

/// Searches every case of `dir` without a report in `opts.out_dir`, writing
/// `reports/<id>.json` per case and then `summary.json` and `summary.csv`.
/// A case that does not parse or has no statements is reported as skipped;
/// a case whose search fails is listed as skipped in the summary but left
/// without a report, so a rerun retries it.
CorpusSummary run_corpus(const std::string& dir, const RunConfig& cfg, const CorpusOptions& opts);

/// Reads every report under `out_dir`/reports.
std::vector<SnippetReport> load_reports(const std::string& out_dir);

std::string summary_csv(const std::vector<SnippetReport>& reports);

void to_json(Json& j, const SnippetReport& v);
void from_json(const Json& j, SnippetReport& v);
void to_json(Json& j, const SkippedCase& v);
void from_json(const Json& j, SkippedCase& v);
void to_json(Json& j, const WallTimeStats& v);
void from_json(const Json& j, WallTimeStats& v);
void to_json(Json& j, const CorpusSummary& v);
void from_json(const Json& j, CorpusSummary& v);

}  // namespace snipexec
