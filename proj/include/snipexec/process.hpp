#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace snipexec {

struct ProcessSpec {
  std::vector<std::string> argv;  // argv[0] is resolved through PATH of `env`
  std::vector<std::string> env;   // complete environment, "NAME=value"
  std::string workdir;            // empty keeps the current directory
  std::optional<std::chrono::milliseconds> timeout;
  std::size_t capture_limit = 64 * 1024;
};

struct ProcessResult {
  int exit_code = -1;             // valid when exited
  std::optional<int> term_signal;  // set when killed by a signal
  bool timed_out = false;
  std::string out;  // truncated at capture_limit
  std::string err;
  double wall_time = 0.0;

  bool exited() const { return !term_signal.has_value(); }
};

/// Runs a child in its own process group with stdin closed. On timeout the
/// whole group is killed; the child is always reaped. Throws HarnessError when
/// the child cannot be started.
ProcessResult run_process(const ProcessSpec& spec);

/// The current environment minus variables whose name contains any of `deny`
/// (case-insensitive).
std::vector<std::string> filtered_environment(const std::vector<std::string>& deny);

/// Replaces or appends NAME=value.
void set_env(std::vector<std::string>& env, const std::string& name, const std::string& value);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "snipexec");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace snipexec
