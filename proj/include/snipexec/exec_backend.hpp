#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snipexec/process.hpp"

namespace snipexec {

/// Exit status the runtime shim uses when its results sink fails.
inline constexpr int kShimSinkFailure = 97;

/// Uncaught exception reported by the shim. `line` is an interpreter line of
/// the executed program; 0 when no program frame was found.
struct TerminalRecord {
  std::string type_name;
  int line = 0;
  std::string message;

  bool operator==(const TerminalRecord&) const = default;
};

/// Contents of a results file: probe fires in order, then at most one terminal record.
struct ResultsFile {
  std::vector<int> probes;
  std::optional<TerminalRecord> terminal;

  bool operator==(const ResultsFile&) const = default;
};

std::string base64_encode(std::string_view bytes);
/// Throws HarnessError on invalid input.
std::string base64_decode(std::string_view text);

/// Parses `P <id>` and `E <type>\t<line>\t<base64>` records. An unterminated
/// final line is dropped (the writer died mid-record). Throws HarnessError on
/// any other malformed record.
ResultsFile parse_results(std::string_view text);
std::string format_results(const ResultsFile& results);

struct RawOutcome {
  ResultsFile results;
  int exit_status = 0;
  std::optional<int> term_signal;
  bool timed_out = false;
  double wall_time = 0.0;
  std::string out;
  std::string err;
};

/// Executes a program text and reports what the runtime recorded.
class ExecBackend {
 public:
  virtual ~ExecBackend() = default;
  /// Throws HarnessError when the backend itself fails.
  virtual RawOutcome execute(const std::string& program, double timeout_seconds) = 0;
};

/// Replays scripted outcomes without any interpreter.
class SimulatedBackend : public ExecBackend {
 public:
  using Script = std::function<RawOutcome(const std::string& program)>;

  explicit SimulatedBackend(Script script) : script_(std::move(script)) {}
  RawOutcome execute(const std::string& program, double timeout_seconds) override;
  int executions() const { return executions_.load(); }

 private:
  Script script_;
  std::atomic<int> executions_{0};
};

struct SubprocessConfig {
  std::string interpreter = "python3";
  std::string shim_path;   // the runtime module file, run as the entry point
  std::size_t capture_limit = 64 * 1024;
  std::vector<std::string> env_deny = {"KEY", "TOKEN", "SECRET", "PASSWORD", "CREDENTIAL"};
};

/// Runs `interpreter shim program results` in a fresh working directory.
class SubprocessBackend : public ExecBackend {
 public:
  explicit SubprocessBackend(SubprocessConfig cfg);
  RawOutcome execute(const std::string& program, double timeout_seconds) override;
  const SubprocessConfig& config() const { return cfg_; }

 private:
  SubprocessConfig cfg_;
};

/// Interpreter inside `env_dir` when it holds one, else "python3".
std::string interpreter_for(const std::string& env_dir);

}  // namespace snipexec
