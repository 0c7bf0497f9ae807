#include "snipexec/harness.hpp"

#include <algorithm>

#include "snipexec/errors.hpp"

namespace snipexec {

namespace {

int line_count(const std::string& entry) { return static_cast<int>(std::count(entry.begin(), entry.end(), '\n')) + 1; }

// Index of the entry owning a 1-based line of `prefix_program`.
std::optional<std::size_t> entry_at(const std::vector<std::string>& entries, int line) {
  int first = 1;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int last = first + line_count(entries[i]) - 1;
    if (line >= first && line <= last) return i;
    first = last + 1;
  }
  return std::nullopt;
}

void erase_entry(Prefix& prefix, std::size_t index) {
  if (index < prefix.imports.size()) {
    prefix.imports.erase(prefix.imports.begin() + static_cast<std::ptrdiff_t>(index));
  } else {
    index -= prefix.imports.size();
    prefix.initializations.erase(prefix.initializations.begin() + static_cast<std::ptrdiff_t>(index));
  }
}

ExceptionInfo exception_of(const TerminalRecord& record, std::optional<int> line) {
  return ExceptionInfo{record.type_name, record.message, line};
}

}  // namespace

std::string prefix_program(const Prefix& prefix) {
  std::string text = prefix.render();
  if (!text.empty()) text += "\n";
  return text;
}

PostProcessTrace post_process_traced(const Prefix& prefix, ExecBackend& backend, const RunConfig& cfg) {
  cfg.validate();
  PostProcessTrace trace{prefix, 0, {}, std::nullopt, false};
  Prefix& current = trace.prefix;
  while (trace.executions < cfg.postprocess_attempts) {
    const RawOutcome raw = backend.execute(prefix_program(current), cfg.prefix_timeout);
    ++trace.executions;
    if (raw.timed_out) {
      trace.timed_out = true;
      current.status = PrefixStatus::Discarded;
      return trace;
    }
    if (!raw.results.terminal) {
      if (raw.term_signal) {
        trace.last_error = ExceptionInfo{"Crash", "terminated by signal " + std::to_string(*raw.term_signal), std::nullopt};
        current.status = PrefixStatus::Discarded;
        return trace;
      }
      current.status = PrefixStatus::PostProcessed;
      return trace;
    }
    const TerminalRecord& terminal = *raw.results.terminal;
    const std::vector<std::string> entries = current.entries();
    const auto culprit = entry_at(entries, terminal.line);
    trace.last_error = exception_of(terminal, terminal.line > 0 ? std::optional<int>(terminal.line) : std::nullopt);
    if (!culprit) break;
    trace.removed.push_back(entries[*culprit]);
    erase_entry(current, *culprit);
  }
  current.status = PrefixStatus::Discarded;
  return trace;
}

Prefix post_process(const Prefix& prefix, ExecBackend& backend, const RunConfig& cfg) {
  return post_process_traced(prefix, backend, cfg).prefix;
}

ExecutionOutcome to_outcome(const RawOutcome& raw, const Program& program, const Snippet& snippet) {
  ExecutionOutcome outcome;
  for (int id : raw.results.probes) {
    if (id < 1 || id > snippet.total_statements()) {
      throw HarnessError("probe " + std::to_string(id) + " outside the snippet");
    }
    outcome.coverage.fired.insert(id);
  }
  if (raw.results.terminal) {
    const TerminalRecord& t = *raw.results.terminal;
    outcome.exception = exception_of(t, t.line > 0 ? program.snippet_line(t.line) : std::nullopt);
  } else if (raw.term_signal && !raw.timed_out) {
    outcome.exception = ExceptionInfo{"Crash", "terminated by signal " + std::to_string(*raw.term_signal), std::nullopt};
  }
  outcome.timed_out = raw.timed_out;
  outcome.wall_time = raw.wall_time;
  return outcome;
}

ExecutionOutcome execute_with_snippet(const Prefix& prefix, const Snippet& snippet, ExecBackend& backend,
                                      const RunConfig& cfg) {
  if (prefix.status != PrefixStatus::PostProcessed) {
    throw ContractViolation("prefix " + prefix.id + " has not been post-processed");
  }
  const Program program = compose(prefix, instrument(snippet));
  return to_outcome(backend.execute(program.text, cfg.prefix_timeout), program, snippet);
}

Harness::Harness(ExecBackend& backend, RunConfig cfg, Installer* installer)
    : backend_(backend), cfg_(std::move(cfg)), installer_(installer) {
  cfg_.validate();
}

Evaluation Harness::evaluate(const Prefix& prefix, const Snippet& snippet) {
  std::string key;
  if (memoize_) {
    key = snippet.source + '\0' + prefix.render();
    if (const auto it = memo_.find(key); it != memo_.end()) {
      ++reused_;
      Evaluation hit = it->second;
      hit.prefix.id = prefix.id;
      hit.prefix.parent = prefix.parent;
      hit.prefix.origin_step = prefix.origin_step;
      return hit;
    }
  }
  Evaluation eval{prefix, std::nullopt, {}};
  try {
    if (cfg_.install_deps && installer_ != nullptr) {
      installer_->install(plan_dependencies(prefix, installer_->env_dir()));
    }
    eval.prefix = post_process(prefix, backend_, cfg_);
    if (eval.prefix.status == PrefixStatus::PostProcessed) {
      eval.outcome = execute_with_snippet(eval.prefix, snippet, backend_, cfg_);
    }
  } catch (const HarnessError& e) {
    eval.failure = e.what();
    eval.outcome.reset();
  }
  if (memoize_ && eval.failure.empty()) memo_.emplace(std::move(key), eval);
  return eval;
}

}  // namespace snipexec
