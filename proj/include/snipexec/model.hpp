#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace snipexec {

using Json = nlohmann::json;

struct StatementRef {
  int probe_id = 0;
  int line = 0;

  bool operator==(const StatementRef&) const = default;
};

/// Subject source admitted for search. Immutable once built by `make_snippet`.
struct Snippet {
  std::string id;
  std::string source;
  std::vector<StatementRef> statement_index;  // probe ids 1..n in order

  int total_statements() const { return static_cast<int>(statement_index.size()); }
  int line_of(int probe_id) const;
  int line_count() const;

  bool operator==(const Snippet&) const = default;
};

/// Parses `source` and builds its statement index.
/// Throws AnalysisError if it does not parse or has no executable statement.
Snippet make_snippet(std::string id, std::string source);

enum class Step { Undefinedness = 1, Error = 2, Coverage = 3 };
enum class PrefixStatus { Fresh, PostProcessed, Discarded };

struct Prefix {
  std::string id;
  std::vector<std::string> imports;
  std::vector<std::string> initializations;
  Step origin_step = Step::Undefinedness;
  std::optional<std::string> parent;
  PrefixStatus status = PrefixStatus::Fresh;

  /// Imports then initializations, newline-joined.
  std::string render() const;
  /// Every entry, imports first; index i addresses line group i of `render()`.
  std::vector<std::string> entries() const;

  bool operator==(const Prefix&) const = default;
};

struct CoverageSet {
  std::set<int> fired;

  std::size_t size() const { return fired.size(); }
  bool contains(int probe) const { return fired.count(probe) != 0; }
  void merge(const CoverageSet& other) { fired.insert(other.fired.begin(), other.fired.end()); }
  /// Number of probes in `other` absent from this set.
  std::size_t gain(const CoverageSet& other) const;

  bool operator==(const CoverageSet&) const = default;
};

/// |fired| / total_statements. Throws ContractViolation for probes outside the snippet.
double coverage_ratio(const CoverageSet& coverage, const Snippet& snippet);
double coverage_ratio(const CoverageSet& coverage, int total_statements);

struct ExceptionInfo {
  std::string type_name;
  std::string message;
  std::optional<int> snippet_line;  // absent when raised by a prefix line

  bool operator==(const ExceptionInfo&) const = default;
};

struct ExecutionOutcome {
  CoverageSet coverage;
  std::optional<ExceptionInfo> exception;
  bool timed_out = false;
  double wall_time = 0.0;

  bool operator==(const ExecutionOutcome&) const = default;
};

struct TreeNode {
  Prefix prefix;
  std::optional<ExecutionOutcome> outcome;
  std::string raw_response;   // generator text the prefix was parsed from
  std::string failure;        // harness failure, when outcome is absent

  bool operator==(const TreeNode&) const = default;
};

/// Explored prefixes rooted at a snippet. Nodes are kept in creation order.
class PrefixTree {
 public:
  PrefixTree() = default;
  explicit PrefixTree(std::string root) : root_(std::move(root)) {}

  const std::string& root() const { return root_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// Throws ContractViolation on duplicate ids, unknown parents, or level mismatch.
  const TreeNode& add(TreeNode node);
  const TreeNode* find(const std::string& id) const;
  std::vector<std::string> children(const std::optional<std::string>& parent) const;
  std::size_t count(Step step) const;

  bool operator==(const PrefixTree& other) const { return root_ == other.root_ && nodes_ == other.nodes_; }

 private:
  std::string root_;
  std::vector<TreeNode> nodes_;
  std::map<std::string, std::size_t> index_;
};

struct StepTrace {
  Step step = Step::Undefinedness;
  int prompts_sent = 0;
  int prefixes_generated = 0;
  int prefixes_discarded = 0;
  int unparsable_responses = 0;

  bool operator==(const StepTrace&) const = default;
};

struct SearchResult {
  std::vector<std::string> P;
  std::optional<std::string> p_best;
  CoverageSet cumulative;
  int queries_used = 0;
  int explored = 0;
  bool degraded = false;  // generator became unavailable mid-run
  std::vector<StepTrace> steps;

  bool operator==(const SearchResult&) const = default;
};

struct RunConfig {
  int n = 10;
  int k = 10;
  double prefix_timeout = 30.0;
  int postprocess_attempts = 10;
  std::string generator = "heuristic";
  std::string env_dir;
  bool install_deps = true;
  unsigned seed = 0;

  /// Throws ContractViolation when a bound is violated.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

const char* to_string(Step step);
const char* to_string(PrefixStatus status);

void to_json(Json& j, const StatementRef& v);
void from_json(const Json& j, StatementRef& v);
void to_json(Json& j, const Snippet& v);
void from_json(const Json& j, Snippet& v);
void to_json(Json& j, const Prefix& v);
void from_json(const Json& j, Prefix& v);
void to_json(Json& j, const CoverageSet& v);
void from_json(const Json& j, CoverageSet& v);
void to_json(Json& j, const ExceptionInfo& v);
void from_json(const Json& j, ExceptionInfo& v);
void to_json(Json& j, const ExecutionOutcome& v);
void from_json(const Json& j, ExecutionOutcome& v);
void to_json(Json& j, const TreeNode& v);
void from_json(const Json& j, TreeNode& v);
void to_json(Json& j, const PrefixTree& v);
void from_json(const Json& j, PrefixTree& v);
void to_json(Json& j, const StepTrace& v);
void from_json(const Json& j, StepTrace& v);
void to_json(Json& j, const SearchResult& v);
void from_json(const Json& j, SearchResult& v);
void to_json(Json& j, const RunConfig& v);
void from_json(const Json& j, RunConfig& v);

}  // namespace snipexec
