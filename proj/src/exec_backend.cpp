#include "snipexec/exec_backend.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snipexec/errors.hpp"

namespace snipexec {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw HarnessError("base64 length is not a multiple of 4");
  if (text.empty()) return {};
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw HarnessError("invalid base64");
  // EVP_DecodeBlock counts padding as zero bytes.
  std::size_t size = static_cast<std::size_t>(n);
  for (std::size_t i = text.size(); i > 0 && text[i - 1] == '='; --i) --size;
  out.resize(size);
  return out;
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw HarnessError("malformed " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

ResultsFile parse_results(std::string_view text) {
  ResultsFile results;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) break;
    const std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    if (results.terminal) throw HarnessError("record after the terminal record");
    if (line.substr(0, 2) == "P ") {
      results.probes.push_back(parse_int(line.substr(2), "probe id"));
    } else if (line.substr(0, 2) == "E ") {
      const std::string_view rest = line.substr(2);
      const std::size_t t1 = rest.find('\t');
      const std::size_t t2 = t1 == std::string_view::npos ? t1 : rest.find('\t', t1 + 1);
      if (t2 == std::string_view::npos || rest.find('\t', t2 + 1) != std::string_view::npos) {
        throw HarnessError("malformed terminal record");
      }
      results.terminal = TerminalRecord{std::string(rest.substr(0, t1)),
                                        parse_int(rest.substr(t1 + 1, t2 - t1 - 1), "line"),
                                        base64_decode(rest.substr(t2 + 1))};
      if (results.terminal->type_name.empty()) throw HarnessError("terminal record without a type");
    } else {
      throw HarnessError("unknown record '" + std::string(line) + "'");
    }
  }
  return results;
}

std::string format_results(const ResultsFile& results) {
  std::string out;
  for (int id : results.probes) out += "P " + std::to_string(id) + "\n";
  if (results.terminal) {
    out += "E " + results.terminal->type_name + "\t" + std::to_string(results.terminal->line) + "\t" +
           base64_encode(results.terminal->message) + "\n";
  }
  return out;
}

RawOutcome SimulatedBackend::execute(const std::string& program, double timeout_seconds) {
  if (timeout_seconds <= 0.0) throw ContractViolation("timeout must be positive");
  ++executions_;
  return script_(program);
}

SubprocessBackend::SubprocessBackend(SubprocessConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.shim_path.empty() || !std::filesystem::exists(cfg_.shim_path)) {
    throw HarnessError("runtime shim not found at '" + cfg_.shim_path + "'");
  }
}

RawOutcome SubprocessBackend::execute(const std::string& program, double timeout_seconds) {
  if (timeout_seconds <= 0.0) throw ContractViolation("timeout must be positive");
  TempDir work("snipexec-run");
  const std::string program_path = work.path() + "/program.py";
  const std::string results_path = work.path() + "/results.txt";
  std::ofstream(program_path, std::ios::binary) << program;

  ProcessSpec spec;
  spec.argv = {cfg_.interpreter, std::filesystem::absolute(cfg_.shim_path).string(), program_path, results_path};
  spec.env = filtered_environment(cfg_.env_deny);
  set_env(spec.env, "PYTHONDONTWRITEBYTECODE", "1");
  set_env(spec.env, "PYTHONHASHSEED", "0");
  set_env(spec.env, "PYTHONIOENCODING", "utf-8");
  spec.workdir = work.path();
  spec.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_seconds * 1000.0));
  spec.capture_limit = cfg_.capture_limit;
  const ProcessResult proc = run_process(spec);

  RawOutcome raw;
  raw.exit_status = proc.exit_code;
  raw.term_signal = proc.term_signal;
  raw.timed_out = proc.timed_out;
  raw.wall_time = proc.wall_time;
  raw.out = proc.out;
  raw.err = proc.err;
  if (!proc.timed_out && proc.exited() && proc.exit_code == kShimSinkFailure) {
    throw HarnessError("runtime shim could not write its results");
  }
  std::ifstream in(results_path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  raw.results = parse_results(text.str());
  return raw;
}

std::string interpreter_for(const std::string& env_dir) {
  if (!env_dir.empty()) {
    const auto candidate = std::filesystem::path(env_dir) / "bin" / "python";
    if (std::filesystem::exists(candidate)) return candidate.string();
  }
  return "python3";
}

}  // namespace snipexec
