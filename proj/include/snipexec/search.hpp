#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snipexec/generator.hpp"
#include "snipexec/harness.hpp"
#include "snipexec/model.hpp"

namespace snipexec {

struct Candidate {
  std::string id;
  CoverageSet coverage;

  bool operator==(const Candidate&) const = default;
};

/// The greedy prefix set P with its best member.
struct PrefixSelection {
  std::vector<Candidate> members;  // P, in insertion order
  std::optional<std::string> best;

  CoverageSet cumulative() const;
  const Candidate* best_member() const;
  bool operator==(const PrefixSelection&) const = default;
};

/// Adds each candidate, in order, that fires a probe outside the cumulative
/// coverage; a candidate strictly larger than the incumbent best becomes best
/// and is inserted when the additive rule skipped it.
PrefixSelection update_prefixes(PrefixSelection selection, const std::vector<Candidate>& candidates);

/// |union of coverages| / total_statements.
double cumulative_cov(const std::vector<Candidate>& prefixes, int total_statements);

struct SearchRun {
  SearchResult result;
  PrefixTree tree;
  std::vector<double> cumulative_after_step;  // after steps 1, 2 and 3, skipped steps included
};

/// Undefinedness, error and coverage guidance over `snippet`. A generator that
/// becomes unavailable ends the run early with `result.degraded` set.
SearchRun run(const Snippet& snippet, const RunConfig& cfg, Generator& generator, Harness& harness);

}  // namespace snipexec
