#include "snipexec/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "snipexec/errors.hpp"

extern char** environ;

namespace snipexec {

namespace {

std::string read_truncated(const std::string& path, std::size_t limit) {
  std::ifstream in(path, std::ios::binary);
  std::string out(limit, '\0');
  in.read(out.data(), static_cast<std::streamsize>(limit));
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

std::vector<char*> pointers(std::vector<std::string>& strings) {
  std::vector<char*> out;
  for (std::string& s : strings) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

TempDir::TempDir(const std::string& prefix) {
  std::string pattern = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
  if (mkdtemp(pattern.data()) == nullptr) {
    throw HarnessError(std::string("cannot create a temporary directory: ") + std::strerror(errno));
  }
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ignored;
  std::filesystem::remove_all(path_, ignored);
}

std::vector<std::string> filtered_environment(const std::vector<std::string>& deny) {
  std::vector<std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    const std::string name = lower(entry.substr(0, entry.find('=')));
    const bool denied =
        std::any_of(deny.begin(), deny.end(), [&](const std::string& d) { return name.find(lower(d)) != std::string::npos; });
    if (!denied) env.push_back(entry);
  }
  return env;
}

void set_env(std::vector<std::string>& env, const std::string& name, const std::string& value) {
  const std::string key = name + "=";
  for (std::string& entry : env) {
    if (entry.rfind(key, 0) == 0) {
      entry = key + value;
      return;
    }
  }
  env.push_back(key + value);
}

ProcessResult run_process(const ProcessSpec& spec) {
  if (spec.argv.empty()) throw ContractViolation("empty argv");
  TempDir capture("snipexec-io");
  const std::string out_path = capture.path() + "/out";
  const std::string err_path = capture.path() + "/err";

  std::vector<std::string> argv = spec.argv;
  std::vector<std::string> env = spec.env;
  std::vector<char*> argv_ptrs = pointers(argv);
  std::vector<char*> env_ptrs = pointers(env);
  // PATH lookup uses the child's PATH, resolved before fork.
  std::string program = argv[0];
  if (program.find('/') == std::string::npos) {
    std::string path = "/usr/local/bin:/usr/bin:/bin";
    for (const std::string& entry : env) {
      if (entry.rfind("PATH=", 0) == 0) path = entry.substr(5);
    }
    std::size_t start = 0;
    while (start <= path.size()) {
      const std::size_t end = std::min(path.find(':', start), path.size());
      const std::string candidate = path.substr(start, end - start) + "/" + argv[0];
      if (access(candidate.c_str(), X_OK) == 0) {
        program = candidate;
        break;
      }
      start = end + 1;
    }
  }

  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) throw HarnessError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    setpgid(0, 0);
    if (!spec.workdir.empty() && chdir(spec.workdir.c_str()) != 0) _exit(126);
    const int in = open("/dev/null", O_RDONLY);
    const int out = open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    const int err = open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (in < 0 || out < 0 || err < 0) _exit(126);
    dup2(in, 0);
    dup2(out, 1);
    dup2(err, 2);
    execve(program.c_str(), argv_ptrs.data(), env_ptrs.data());
    _exit(127);
  }
  setpgid(pid, pid);

  ProcessResult result;
  int status = 0;
  for (;;) {
    const pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw HarnessError(std::string("waitpid failed: ") + std::strerror(errno));
    if (spec.timeout && std::chrono::steady_clock::now() - started >= *spec.timeout) {
      result.timed_out = true;
      killpg(pid, SIGKILL);
      while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  // Reap stragglers the child left in its group.
  killpg(pid, SIGKILL);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    if (result.exit_code == 127 && !result.timed_out && access(program.c_str(), X_OK) != 0) {
      throw HarnessError("cannot execute " + argv[0]);
    }
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
  }
  result.out = read_truncated(out_path, spec.capture_limit);
  result.err = read_truncated(err_path, spec.capture_limit);
  return result;
}

}  // namespace snipexec
