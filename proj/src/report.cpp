#include "snipexec/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "snipexec/errors.hpp"

namespace snipexec {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Write-then-rename so an interrupted run never leaves a truncated report.
void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

double mean(double sum, int count) { return count == 0 ? 0.0 : sum / count; }

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

SnippetReport skipped_report(const std::string& id, const std::string& reason) {
  SnippetReport r;
  r.id = id;
  r.skip_reason = reason;
  return r;
}

fs::path report_path(const std::string& out_dir, const std::string& id) {
  return fs::path(out_dir) / "reports" / (id + ".json");
}

std::optional<SnippetReport> existing_report(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return Json::parse(read_file(path)).get<SnippetReport>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

CoverageSet coverage_through(const PrefixTree& tree, Step step) {
  CoverageSet all;
  for (const TreeNode& node : tree.nodes()) {
    if (node.outcome && static_cast<int>(node.prefix.origin_step) <= static_cast<int>(step)) {
      all.merge(node.outcome->coverage);
    }
  }
  return all;
}

double coverage_P(const SnippetReport& report) { return coverage_ratio(report.result.cumulative, report.snippet); }

double coverage_pbest(const SnippetReport& report) {
  if (!report.result.p_best) return 0.0;
  const TreeNode* node = report.tree.find(*report.result.p_best);
  if (node == nullptr || !node->outcome) throw ContractViolation("p_best has no executed node in " + report.id);
  return coverage_ratio(node->outcome->coverage, report.snippet);
}

CorpusSummary summarize(std::vector<SnippetReport> reports) {
  std::sort(reports.begin(), reports.end(),
            [](const SnippetReport& a, const SnippetReport& b) { return a.id < b.id; });
  CorpusSummary s;
  double cov_p = 0, cov_best = 0, full = 0, explored = 0, p_size = 0;
  std::array<double, 3> steps{};
  std::vector<double> times;
  for (const SnippetReport& r : reports) {
    if (r.skipped()) {
      s.skipped.push_back({r.id, *r.skip_reason});
      continue;
    }
    ++s.snippet_count;
    const double c = coverage_P(r);
    cov_p += c;
    cov_best += coverage_pbest(r);
    if (r.result.cumulative.size() == static_cast<std::size_t>(r.snippet.total_statements())) full += 1;
    explored += r.result.explored;
    p_size += static_cast<double>(r.result.P.size());
    for (int i = 0; i < 3; ++i) {
      steps[i] += coverage_ratio(coverage_through(r.tree, static_cast<Step>(i + 1)), r.snippet);
    }
    if (r.result.degraded) ++s.degraded_count;
    times.push_back(r.wall_time);
    s.wall_time.total += r.wall_time;
  }
  const int n = s.snippet_count;
  s.mean_coverage_P = mean(cov_p, n);
  s.mean_coverage_pbest = mean(cov_best, n);
  s.full_execution_rate = mean(full, n);
  s.mean_prefixes_explored = mean(explored, n);
  s.mean_P_size = mean(p_size, n);
  for (int i = 0; i < 3; ++i) s.coverage_after_step[i] = mean(steps[i], n);
  if (!times.empty()) {
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    s.wall_time.mean = s.wall_time.total / n;
    s.wall_time.median = times.size() % 2 == 1 ? times[mid] : (times[mid - 1] + times[mid]) / 2;
    s.wall_time.max = times.back();
  }
  return s;
}

std::vector<std::string> corpus_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ContractViolation("corpus directory " + dir + " does not exist");
  std::vector<std::string> files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".py") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<SnippetReport> load_reports(const std::string& out_dir) {
  std::vector<SnippetReport> reports;
  const fs::path dir = fs::path(out_dir) / "reports";
  if (!fs::is_directory(dir)) return reports;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") reports.push_back(Json::parse(read_file(e.path())).get<SnippetReport>());
  }
  std::sort(reports.begin(), reports.end(),
            [](const SnippetReport& a, const SnippetReport& b) { return a.id < b.id; });
  return reports;
}

std::string summary_csv(const std::vector<SnippetReport>& reports) {
  std::string out =
      "id,status,statements,coverage_P,coverage_pbest,step1,step2,step3,P_size,explored,queries,degraded,wall_time,"
      "reason\n";
  for (const SnippetReport& r : reports) {
    out += csv_field(r.id);
    if (r.skipped()) {
      out += ",skipped,,,,,,,,,,,," + csv_field(*r.skip_reason) + "\n";
      continue;
    }
    out += r.result.degraded ? ",degraded," : ",complete,";
    out += std::to_string(r.snippet.total_statements()) + "," + number(coverage_P(r)) + "," +
           number(coverage_pbest(r));
    for (int i = 1; i <= 3; ++i) {
      out += "," + number(coverage_ratio(coverage_through(r.tree, static_cast<Step>(i)), r.snippet));
    }
    out += "," + std::to_string(r.result.P.size()) + "," + std::to_string(r.result.explored) + "," +
           std::to_string(r.result.queries_used) + "," + (r.result.degraded ? "1" : "0") + "," + number(r.wall_time) +
           ",\n";
  }
  return out;
}

CorpusSummary run_corpus(const std::string& dir, const RunConfig& cfg, const CorpusOptions& opts) {
  cfg.validate();
  if (opts.workers < 1) throw ContractViolation("at least one worker is required");
  if (!opts.make_generator || !opts.make_backend) throw ContractViolation("generator and backend factories are required");
  if (cfg.install_deps && opts.installer == nullptr) throw ContractViolation("dependency installation needs an installer");
  const std::vector<std::string> files = corpus_files(dir);
  fs::create_directories(fs::path(opts.out_dir) / "reports");

  std::vector<std::optional<SnippetReport>> done(files.size());
  std::vector<SkippedCase> failures;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    std::unique_ptr<Generator> generator;
    std::unique_ptr<ExecBackend> backend;
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const std::string id = fs::path(files[i]).stem().string();
      const fs::path path = report_path(opts.out_dir, id);
      if (std::optional<SnippetReport> prior = existing_report(path)) {
        done[i] = std::move(prior);
        continue;
      }
      SnippetReport report;
      try {
        report.snippet = make_snippet(id, read_file(files[i]));
        report.id = id;
      } catch (const AnalysisError& e) {
        report = skipped_report(id, e.what());
      }
      if (!report.skipped()) {
        try {
          if (!generator) generator = opts.make_generator();
          if (!backend) backend = opts.make_backend();
          Harness harness(*backend, cfg, opts.installer);
          harness.set_memoize(opts.memoize);
          const auto start = std::chrono::steady_clock::now();
          SearchRun run = snipexec::run(report.snippet, cfg, *generator, harness);
          report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          report.result = std::move(run.result);
          report.tree = std::move(run.tree);
          report.cumulative_after_step = std::move(run.cumulative_after_step);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(mu);
          failures.push_back({id, e.what()});
          continue;
        }
      }
      write_file(path, Json(report).dump(2) + "\n");
      std::lock_guard<std::mutex> lock(mu);
      if (opts.on_report) opts.on_report(report);
      done[i] = std::move(report);
    }
  };

  std::vector<std::thread> pool;
  const int workers = std::min<int>(opts.workers, std::max<int>(1, static_cast<int>(files.size())));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();

  std::vector<SnippetReport> reports;
  for (std::optional<SnippetReport>& r : done) {
    if (r) reports.push_back(std::move(*r));
  }
  CorpusSummary summary = summarize(reports);
  summary.skipped.insert(summary.skipped.end(), failures.begin(), failures.end());
  std::sort(summary.skipped.begin(), summary.skipped.end(),
            [](const SkippedCase& a, const SkippedCase& b) { return a.id < b.id; });
  Json meta = summary;
  meta["config"] = cfg;
  write_file(fs::path(opts.out_dir) / "summary.json", meta.dump(2) + "\n");
  write_file(fs::path(opts.out_dir) / "summary.csv", summary_csv(reports));
  return summary;
}

void to_json(Json& j, const SnippetReport& v) {
  j = Json{{"schema_version", kReportSchemaVersion}, {"id", v.id}};
  if (v.skip_reason) {
    j["status"] = "skipped";
    j["reason"] = *v.skip_reason;
    return;
  }
  j["status"] = "complete";
  j["snippet"] = v.snippet;
  j["result"] = v.result;
  j["tree"] = v.tree;
  j["cumulative_after_step"] = v.cumulative_after_step;
  j["wall_time"] = v.wall_time;
}

void from_json(const Json& j, SnippetReport& v) {
  if (j.at("schema_version").get<int>() != kReportSchemaVersion) throw ContractViolation("unsupported report schema");
  v = SnippetReport{};
  j.at("id").get_to(v.id);
  if (j.at("status").get<std::string>() == "skipped") {
    v.skip_reason = j.at("reason").get<std::string>();
    return;
  }
  j.at("snippet").get_to(v.snippet);
  j.at("result").get_to(v.result);
  j.at("tree").get_to(v.tree);
  j.at("cumulative_after_step").get_to(v.cumulative_after_step);
  j.at("wall_time").get_to(v.wall_time);
}

void to_json(Json& j, const SkippedCase& v) { j = Json{{"id", v.id}, {"reason", v.reason}}; }

void from_json(const Json& j, SkippedCase& v) {
  j.at("id").get_to(v.id);
  j.at("reason").get_to(v.reason);
}

void to_json(Json& j, const WallTimeStats& v) {
  j = Json{{"total", v.total}, {"mean", v.mean}, {"median", v.median}, {"max", v.max}};
}

void from_json(const Json& j, WallTimeStats& v) {
  j.at("total").get_to(v.total);
  j.at("mean").get_to(v.mean);
  j.at("median").get_to(v.median);
  j.at("max").get_to(v.max);
}

void to_json(Json& j, const CorpusSummary& v) {
  j = Json{{"schema_version", kReportSchemaVersion},
           {"snippet_count", v.snippet_count},
           {"mean_coverage_P", v.mean_coverage_P},
           {"mean_coverage_pbest", v.mean_coverage_pbest},
           {"full_execution_rate", v.full_execution_rate},
           {"mean_prefixes_explored", v.mean_prefixes_explored},
           {"mean_P_size", v.mean_P_size},
           {"coverage_after_step", v.coverage_after_step},
           {"wall_time", v.wall_time},
           {"degraded_count", v.degraded_count},
           {"skipped", v.skipped}};
}

void from_json(const Json& j, CorpusSummary& v) {
  if (j.at("schema_version").get<int>() != kReportSchemaVersion) throw ContractViolation("unsupported summary schema");
  j.at("snippet_count").get_to(v.snippet_count);
  j.at("mean_coverage_P").get_to(v.mean_coverage_P);
  j.at("mean_coverage_pbest").get_to(v.mean_coverage_pbest);
  j.at("full_execution_rate").get_to(v.full_execution_rate);
  j.at("mean_prefixes_explored").get_to(v.mean_prefixes_explored);
  j.at("mean_P_size").get_to(v.mean_P_size);
  j.at("coverage_after_step").get_to(v.coverage_after_step);
  j.at("wall_time").get_to(v.wall_time);
  j.at("degraded_count").get_to(v.degraded_count);
  j.at("skipped").get_to(v.skipped);
}

}  // namespace snipexec
