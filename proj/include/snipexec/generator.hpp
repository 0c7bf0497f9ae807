#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "snipexec/prompts.hpp"
#include "snipexec/scope_analyzer.hpp"

namespace snipexec {

struct GeneratorRequest {
  Conversation conversation;
  int samples = 1;
  /// Distinguishes repeated queries within one step (error index, iteration).
  int attempt = 0;
};

struct GeneratedSample {
  std::string raw;
  std::optional<GeneratorResponse> parsed;  // absent when `raw` fails parse_response

  bool operator==(const GeneratedSample&) const = default;
};

struct GeneratorBatch {
  std::vector<GeneratedSample> responses;  // at most `samples`, in received order
};

/// Produces candidate prefixes for a prompt. Implementations are safe to call
/// from concurrent workers.
class Generator {
 public:
  virtual ~Generator() = default;
  /// Throws ContractViolation on an empty conversation or samples < 1,
  /// GeneratorUnavailable when the backing service cannot be reached.
  virtual GeneratorBatch generate(const GeneratorRequest& request) = 0;
};

/// Wraps `raw` with its parse result.
GeneratedSample make_sample(std::string raw);

/// Deterministic value assignment for every name in `refs`.
GeneratorResponse heuristic_generate(const UndefinedRefs& refs, unsigned seed, int variant);

/// Offline generator: recovers the snippet from the prompt, analyses it and
/// answers with `heuristic_generate` for consecutive variants.
class HeuristicGenerator : public Generator {
 public:
  explicit HeuristicGenerator(unsigned seed = 0) : seed_(seed) {}
  GeneratorBatch generate(const GeneratorRequest& request) override;

 private:
  unsigned seed_;
};

/// Spaces out calls shared by all workers of a run.
class RateLimiter {
 public:
  explicit RateLimiter(double max_per_second = 0.0);
  /// Blocks until the next call slot; no-op when unlimited.
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

struct TransportReply {
  int status = 0;
  std::string body;
};

/// One chat-completions exchange. Throws TransportError when no reply arrives.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply post(const std::string& body) = 0;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LlmConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model;  // required; no default model
  std::string api_key_env = "SNIPEXEC_API_KEY";
  double temperature = 1.0;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};
  bool multi_sample = true;  // one request with `n`, else `samples` requests with n = 1
  std::string audit_path;    // JSON lines of requests and replies when set
};

/// Transport over HTTP(S) using the API key from `cfg.api_key_env`.
std::unique_ptr<Transport> make_http_transport(const LlmConfig& cfg);

class LlmGenerator : public Generator {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// Throws ContractViolation when `cfg.model` is empty.
  LlmGenerator(LlmConfig cfg, std::unique_ptr<Transport> transport, std::shared_ptr<RateLimiter> limiter = nullptr,
               Sleeper sleeper = nullptr);
  GeneratorBatch generate(const GeneratorRequest& request) override;

  /// Chat-completions request body for `samples` completions.
  Json request_body(const Conversation& conversation, int samples) const;

 private:
  std::vector<std::string> exchange(const Conversation& conversation, int samples);
  void audit(const Json& record);

  LlmConfig cfg_;
  std::unique_ptr<Transport> transport_;
  std::shared_ptr<RateLimiter> limiter_;
  Sleeper sleeper_;
};

}  // namespace snipexec
