#include "snipexec/search.hpp"

#include <algorithm>

#include "snipexec/errors.hpp"
#include "snipexec/prompts.hpp"
#include "snipexec/scope_analyzer.hpp"

namespace snipexec {

CoverageSet PrefixSelection::cumulative() const {
  CoverageSet all;
  for (const Candidate& c : members) all.merge(c.coverage);
  return all;
}

const Candidate* PrefixSelection::best_member() const {
  if (!best) return nullptr;
  const auto it = std::find_if(members.begin(), members.end(), [&](const Candidate& c) { return c.id == *best; });
  return it == members.end() ? nullptr : &*it;
}

PrefixSelection update_prefixes(PrefixSelection selection, const std::vector<Candidate>& candidates) {
  CoverageSet cumulative = selection.cumulative();
  for (const Candidate& candidate : candidates) {
    bool member = false;
    if (cumulative.gain(candidate.coverage) > 0) {
      selection.members.push_back(candidate);
      cumulative.merge(candidate.coverage);
      member = true;
    }
    const Candidate* incumbent = selection.best_member();
    if (incumbent == nullptr || candidate.coverage.size() > incumbent->coverage.size()) {
      if (!member) selection.members.push_back(candidate);
      selection.best = candidate.id;
    }
  }
  return selection;
}

double cumulative_cov(const std::vector<Candidate>& prefixes, int total_statements) {
  CoverageSet all;
  for (const Candidate& c : prefixes) all.merge(c.coverage);
  return coverage_ratio(all, total_statements);
}

namespace {

class Search {
 public:
  Search(const Snippet& snippet, const RunConfig& cfg, Generator& generator, Harness& harness)
      : s_(snippet), cfg_(cfg), generator_(generator), harness_(harness) {
    run_.tree = PrefixTree(snippet.id);
  }

  SearchRun execute() {
    try {
      step1();
      close_step();
      if (!complete()) step2();
      close_step();
      if (!complete()) step3();
      close_step();
    } catch (const GeneratorUnavailable&) {
      run_.result.degraded = true;
      while (run_.cumulative_after_step.size() < 3) close_step();
    }
    SearchResult& r = run_.result;
    for (const Candidate& c : selection_.members) r.P.push_back(c.id);
    r.p_best = selection_.best;
    r.cumulative = selection_.cumulative();
    r.explored = static_cast<int>(run_.tree.size());
    return std::move(run_);
  }

 private:
  bool complete() const { return static_cast<int>(selection_.cumulative().size()) == s_.total_statements(); }

  StepTrace& trace(Step step) {
    auto& steps = run_.result.steps;
    if (steps.empty() || steps.back().step != step) steps.push_back(StepTrace{step, 0, 0, 0, 0});
    return steps.back();
  }

  void close_step() { run_.cumulative_after_step.push_back(coverage_ratio(selection_.cumulative(), s_)); }

  // Queries the generator and evaluates every parseable sample as a child of `parent`.
  std::vector<std::string> expand(Step step, const Conversation& prompt, int attempt,
                                  const std::optional<std::string>& parent, const std::string& id_stem) {
    StepTrace& t = trace(step);
    ++t.prompts_sent;
    ++run_.result.queries_used;
    const GeneratorBatch batch = generator_.generate(GeneratorRequest{prompt, cfg_.n, attempt});
    std::vector<std::string> ids;
    std::vector<Candidate> candidates;
    const std::size_t limit = std::min<std::size_t>(batch.responses.size(), static_cast<std::size_t>(cfg_.n));
    for (std::size_t i = 0; i < limit; ++i) {
      const GeneratedSample& sample = batch.responses[i];
      if (!sample.parsed) {
        ++t.unparsable_responses;
        continue;
      }
      Prefix prefix;
      prefix.id = id_stem + std::to_string(i + 1);
      prefix.imports = sample.parsed->imports;
      prefix.initializations = sample.parsed->initialization;
      prefix.origin_step = step;
      prefix.parent = parent;
      Evaluation eval = harness_.evaluate(prefix, s_);
      ++t.prefixes_generated;
      if (eval.prefix.status == PrefixStatus::Discarded) ++t.prefixes_discarded;
      if (eval.outcome) candidates.push_back(Candidate{eval.prefix.id, eval.outcome->coverage});
      run_.tree.add(TreeNode{eval.prefix, eval.outcome, sample.raw, eval.failure});
      ids.push_back(prefix.id);
    }
    selection_ = update_prefixes(std::move(selection_), candidates);
    return ids;
  }

  void step1() {
    step1_prompt_ = gen_prompt1(s_, get_undefined_refs(s_));
    step1_ids_ = expand(Step::Undefinedness, step1_prompt_, 0, std::nullopt, "");
  }

  void step2() {
    int attempt = 0;
    for (const std::string& id : step1_ids_) {
      if (complete()) break;
      const TreeNode& node = *run_.tree.find(id);
      if (!node.outcome || !node.outcome->exception) continue;
      Conversation history = step1_prompt_;
      history.messages.push_back(Message{Role::Assistant, node.raw_response});
      const Conversation prompt = gen_prompt2(history, s_, *node.outcome);
      const TreeNode copy = node;  // `expand` grows the tree
      expand(Step::Error, prompt, attempt++, copy.prefix.id, copy.prefix.id + ".");
    }
  }

  // Parent of coverage-guided prefixes: the best executed level-2 prefix,
  // else the best executed level-1 prefix, else the first node of either level.
  std::optional<std::string> step3_parent() const {
    for (const Step level : {Step::Error, Step::Undefinedness}) {
      const TreeNode* best = nullptr;
      for (const TreeNode& node : run_.tree.nodes()) {
        if (node.prefix.origin_step != level || !node.outcome) continue;
        if (best == nullptr || node.outcome->coverage.size() > best->outcome->coverage.size()) best = &node;
      }
      if (best != nullptr) return best->prefix.id;
    }
    for (const Step level : {Step::Error, Step::Undefinedness}) {
      for (const TreeNode& node : run_.tree.nodes()) {
        if (node.prefix.origin_step == level) return node.prefix.id;
      }
    }
    return std::nullopt;
  }

  void step3() {
    const std::optional<std::string> parent = step3_parent();
    if (!parent) return;
    for (int iteration = 0; iteration < cfg_.k && !complete(); ++iteration) {
      const Conversation prompt = gen_prompt3(annotate_uncovered(s_, selection_.cumulative()));
      expand(Step::Coverage, prompt, iteration, parent, *parent + ".c" + std::to_string(iteration + 1) + ".");
    }
  }

  const Snippet& s_;
  const RunConfig& cfg_;
  Generator& generator_;
  Harness& harness_;
  SearchRun run_;
  PrefixSelection selection_;
  Conversation step1_prompt_;
  std::vector<std::string> step1_ids_;
};

}  // namespace

SearchRun run(const Snippet& snippet, const RunConfig& cfg, Generator& generator, Harness& harness) {
  cfg.validate();
  if (snippet.total_statements() == 0) throw ContractViolation("snippet has no statements");
  return Search(snippet, cfg, generator, harness).execute();
}

}  // namespace snipexec
