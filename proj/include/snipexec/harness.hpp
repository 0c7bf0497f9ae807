#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snipexec/dependencies.hpp"
#include "snipexec/exec_backend.hpp"
#include "snipexec/instrumenter.hpp"
#include "snipexec/model.hpp"

namespace snipexec {

/// Program executed to check a prefix on its own.
std::string prefix_program(const Prefix& prefix);

struct PostProcessTrace {
  Prefix prefix;                      // status PostProcessed or Discarded
  int executions = 0;                 // <= postprocess_attempts
  std::vector<std::string> removed;   // entries dropped, in removal order
  std::optional<ExceptionInfo> last_error;  // the error that ended a discarded run
  bool timed_out = false;
};

/// Runs the prefix alone, dropping the entry that raised until a run is clean.
/// Discards on timeout, on an error it cannot attribute to an entry, or when
/// attempts run out. Throws HarnessError when the backend fails.
PostProcessTrace post_process_traced(const Prefix& prefix, ExecBackend& backend, const RunConfig& cfg);
Prefix post_process(const Prefix& prefix, ExecBackend& backend, const RunConfig& cfg);

/// Maps raw probe fires and the terminal record of a composed run onto the
/// snippet. Throws HarnessError for probe ids outside the snippet.
ExecutionOutcome to_outcome(const RawOutcome& raw, const Program& program, const Snippet& snippet);

/// Composes, runs under `cfg.prefix_timeout` and maps the result. Throws
/// ContractViolation unless `prefix` is PostProcessed; HarnessError when the
/// backend fails.
ExecutionOutcome execute_with_snippet(const Prefix& prefix, const Snippet& snippet, ExecBackend& backend,
                                      const RunConfig& cfg);

/// Result of the full execute pipeline for one generated prefix.
struct Evaluation {
  Prefix prefix;
  std::optional<ExecutionOutcome> outcome;  // absent when discarded or the backend failed
  std::string failure;                      // backend failure message
};

/// Dependency installation, post-processing and snippet execution for one run.
class Harness {
 public:
  /// `installer` may be null; it is used only when cfg.install_deps is set.
  Harness(ExecBackend& backend, RunConfig cfg, Installer* installer = nullptr);

  Evaluation evaluate(const Prefix& prefix, const Snippet& snippet);
  ExecBackend& backend() { return backend_; }

  /// When on, a prefix whose text was already evaluated against the same
  /// snippet reuses that evaluation instead of executing again. Backend
  /// failures are never reused.
  void set_memoize(bool on) { memoize_ = on; }
  std::size_t reused() const { return reused_; }

 private:
  ExecBackend& backend_;
  RunConfig cfg_;
  Installer* installer_;
  bool memoize_ = false;
  std::size_t reused_ = 0;
  std::map<std::string, Evaluation> memo_;
};

}  // namespace snipexec
