#include "snipexec/model.hpp"

#include <algorithm>

#include "snipexec/errors.hpp"
#include "snipexec/python/parser.hpp"
#include "snipexec/statements.hpp"

namespace snipexec {

int Snippet::line_of(int probe_id) const {
  if (probe_id < 1 || probe_id > total_statements()) {
    throw ContractViolation("probe " + std::to_string(probe_id) + " outside snippet " + id);
  }
  return statement_index[static_cast<std::size_t>(probe_id - 1)].line;
}

int Snippet::line_count() const {
  if (source.empty()) return 0;
  const auto newlines = std::count(source.begin(), source.end(), '\n');
  return static_cast<int>(newlines) + (source.back() == '\n' ? 0 : 1);
}

Snippet make_snippet(std::string id, std::string source) {
  python::Module module;
  try {
    module = python::parse_module(source);
  } catch (const python::ParseError& e) {
    throw AnalysisError("snippet " + id + " does not parse: " + e.what());
  }
  Snippet snippet;
  snippet.id = std::move(id);
  for (const StatementUnit& unit : index_statements(module)) {
    snippet.statement_index.push_back({unit.probe_id, unit.line});
  }
  if (snippet.statement_index.empty()) throw AnalysisError("snippet " + snippet.id + " has no statements");
  snippet.source = std::move(source);
  return snippet;
}

std::vector<std::string> Prefix::entries() const {
  std::vector<std::string> all(imports);
  all.insert(all.end(), initializations.begin(), initializations.end());
  return all;
}

std::string Prefix::render() const {
  std::string text;
  for (const std::string& entry : entries()) {
    if (!text.empty()) text += '\n';
    text += entry;
  }
  return text;
}

std::size_t CoverageSet::gain(const CoverageSet& other) const {
  return static_cast<std::size_t>(
      std::count_if(other.fired.begin(), other.fired.end(), [&](int p) { return !contains(p); }));
}

double coverage_ratio(const CoverageSet& coverage, int total_statements) {
  if (total_statements < 1) throw ContractViolation("coverage ratio over an empty statement index");
  if (!coverage.fired.empty() && (*coverage.fired.begin() < 1 || *coverage.fired.rbegin() > total_statements)) {
    throw ContractViolation("coverage set does not belong to the snippet");
  }
  return static_cast<double>(coverage.size()) / static_cast<double>(total_statements);
}

double coverage_ratio(const CoverageSet& coverage, const Snippet& snippet) {
  return coverage_ratio(coverage, snippet.total_statements());
}

const TreeNode& PrefixTree::add(TreeNode node) {
  const Prefix& p = node.prefix;
  if (index_.count(p.id) != 0) throw ContractViolation("duplicate prefix id " + p.id);
  if ((p.origin_step == Step::Undefinedness) == p.parent.has_value()) {
    throw ContractViolation("prefix " + p.id + ": parent must be absent exactly for step-1 prefixes");
  }
  if (p.parent) {
    const TreeNode* parent = find(*p.parent);
    if (parent == nullptr) throw ContractViolation("prefix " + p.id + ": unknown parent " + *p.parent);
    const Step ps = parent->prefix.origin_step;
    const bool ok = p.origin_step == Step::Error ? ps == Step::Undefinedness : ps != Step::Coverage;
    if (!ok) throw ContractViolation("prefix " + p.id + ": parent on the wrong level");
  }
  index_.emplace(p.id, nodes_.size());
  nodes_.push_back(std::move(node));
  return nodes_.back();
}

const TreeNode* PrefixTree::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::vector<std::string> PrefixTree::children(const std::optional<std::string>& parent) const {
  std::vector<std::string> ids;
  for (const TreeNode& node : nodes_) {
    if (node.prefix.parent == parent) ids.push_back(node.prefix.id);
  }
  return ids;
}

std::size_t PrefixTree::count(Step step) const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [&](const TreeNode& node) {
    return node.prefix.origin_step == step;
  }));
}

void RunConfig::validate() const {
  if (n < 1) throw ContractViolation("n must be at least 1");
  if (k < 0) throw ContractViolation("k must be non-negative");
  if (!(prefix_timeout > 0)) throw ContractViolation("prefix timeout must be positive");
  if (postprocess_attempts < 1) throw ContractViolation("post-processing needs at least one attempt");
}

const char* to_string(Step step) {
  switch (step) {
    case Step::Undefinedness:
      return "undefinedness";
    case Step::Error:
      return "error";
    case Step::Coverage:
      return "coverage";
  }
  return "?";
}

const char* to_string(PrefixStatus status) {
  switch (status) {
    case PrefixStatus::Fresh:
      return "fresh";
    case PrefixStatus::PostProcessed:
      return "post_processed";
    case PrefixStatus::Discarded:
      return "discarded";
  }
  return "?";
}

NLOHMANN_JSON_SERIALIZE_ENUM(Step, {{Step::Undefinedness, "undefinedness"},
                                    {Step::Error, "error"},
                                    {Step::Coverage, "coverage"}})
NLOHMANN_JSON_SERIALIZE_ENUM(PrefixStatus, {{PrefixStatus::Fresh, "fresh"},
                                            {PrefixStatus::PostProcessed, "post_processed"},
                                            {PrefixStatus::Discarded, "discarded"}})

namespace {

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? Json(*v) : Json(nullptr);
}

template <typename T>
void get_optional(const Json& j, const char* key, std::optional<T>& v) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    v.reset();
  } else {
    v = it->template get<T>();
  }
}

}  // namespace

void to_json(Json& j, const StatementRef& v) { j = Json::array({v.probe_id, v.line}); }

void from_json(const Json& j, StatementRef& v) {
  v.probe_id = j.at(0).get<int>();
  v.line = j.at(1).get<int>();
}

void to_json(Json& j, const Snippet& v) {
  j = Json{{"id", v.id}, {"source", v.source}, {"statement_index", v.statement_index},
           {"total_statements", v.total_statements()}};
}

void from_json(const Json& j, Snippet& v) {
  j.at("id").get_to(v.id);
  j.at("source").get_to(v.source);
  j.at("statement_index").get_to(v.statement_index);
}

void to_json(Json& j, const Prefix& v) {
  j = Json{{"id", v.id},
           {"imports", v.imports},
           {"initializations", v.initializations},
           {"origin_step", v.origin_step},
           {"status", v.status}};
  put_optional(j, "parent", v.parent);
}

void from_json(const Json& j, Prefix& v) {
  j.at("id").get_to(v.id);
  j.at("imports").get_to(v.imports);
  j.at("initializations").get_to(v.initializations);
  j.at("origin_step").get_to(v.origin_step);
  j.at("status").get_to(v.status);
  get_optional(j, "parent", v.parent);
}

void to_json(Json& j, const CoverageSet& v) { j = v.fired; }
void from_json(const Json& j, CoverageSet& v) { j.get_to(v.fired); }

void to_json(Json& j, const ExceptionInfo& v) {
  j = Json{{"type", v.type_name}, {"message", v.message}};
  put_optional(j, "snippet_line", v.snippet_line);
}

void from_json(const Json& j, ExceptionInfo& v) {
  j.at("type").get_to(v.type_name);
  j.at("message").get_to(v.message);
  get_optional(j, "snippet_line", v.snippet_line);
}

void to_json(Json& j, const ExecutionOutcome& v) {
  j = Json{{"coverage", v.coverage}, {"timed_out", v.timed_out}, {"wall_time", v.wall_time}};
  put_optional(j, "exception", v.exception);
}

void from_json(const Json& j, ExecutionOutcome& v) {
  j.at("coverage").get_to(v.coverage);
  j.at("timed_out").get_to(v.timed_out);
  j.at("wall_time").get_to(v.wall_time);
  get_optional(j, "exception", v.exception);
}

void to_json(Json& j, const TreeNode& v) {
  j = Json{{"prefix", v.prefix}, {"raw_response", v.raw_response}, {"failure", v.failure}};
  put_optional(j, "outcome", v.outcome);
}

void from_json(const Json& j, TreeNode& v) {
  j.at("prefix").get_to(v.prefix);
  j.at("raw_response").get_to(v.raw_response);
  j.at("failure").get_to(v.failure);
  get_optional(j, "outcome", v.outcome);
}

void to_json(Json& j, const PrefixTree& v) { j = Json{{"root", v.root()}, {"nodes", v.nodes()}}; }

void from_json(const Json& j, PrefixTree& v) {
  PrefixTree tree(j.at("root").get<std::string>());
  for (const Json& node : j.at("nodes")) tree.add(node.get<TreeNode>());
  v = std::move(tree);
}

void to_json(Json& j, const StepTrace& v) {
  j = Json{{"step", v.step},
           {"prompts_sent", v.prompts_sent},
           {"prefixes_generated", v.prefixes_generated},
           {"prefixes_discarded", v.prefixes_discarded},
           {"unparsable_responses", v.unparsable_responses}};
}

void from_json(const Json& j, StepTrace& v) {
  j.at("step").get_to(v.step);
  j.at("prompts_sent").get_to(v.prompts_sent);
  j.at("prefixes_generated").get_to(v.prefixes_generated);
  j.at("prefixes_discarded").get_to(v.prefixes_discarded);
  j.at("unparsable_responses").get_to(v.unparsable_responses);
}

void to_json(Json& j, const SearchResult& v) {
  j = Json{{"P", v.P},
           {"cumulative", v.cumulative},
           {"queries_used", v.queries_used},
           {"explored", v.explored},
           {"degraded", v.degraded},
           {"steps", v.steps}};
  put_optional(j, "p_best", v.p_best);
}

void from_json(const Json& j, SearchResult& v) {
  j.at("P").get_to(v.P);
  j.at("cumulative").get_to(v.cumulative);
  j.at("queries_used").get_to(v.queries_used);
  j.at("explored").get_to(v.explored);
  j.at("degraded").get_to(v.degraded);
  j.at("steps").get_to(v.steps);
  get_optional(j, "p_best", v.p_best);
}

void to_json(Json& j, const RunConfig& v) {
  j = Json{{"n", v.n},
           {"k", v.k},
           {"prefix_timeout", v.prefix_timeout},
           {"postprocess_attempts", v.postprocess_attempts},
           {"generator", v.generator},
           {"env_dir", v.env_dir},
           {"install_deps", v.install_deps},
           {"seed", v.seed}};
}

void from_json(const Json& j, RunConfig& v) {
  j.at("n").get_to(v.n);
  j.at("k").get_to(v.k);
  j.at("prefix_timeout").get_to(v.prefix_timeout);
  j.at("postprocess_attempts").get_to(v.postprocess_attempts);
  j.at("generator").get_to(v.generator);
  j.at("env_dir").get_to(v.env_dir);
  j.at("install_deps").get_to(v.install_deps);
  j.at("seed").get_to(v.seed);
}

}  // namespace snipexec
