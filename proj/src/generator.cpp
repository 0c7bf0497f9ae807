#include "snipexec/generator.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "httplib.h"

#include "snipexec/errors.hpp"

namespace snipexec {

GeneratedSample make_sample(std::string raw) {
  GeneratedSample sample{std::move(raw), std::nullopt};
  try {
    sample.parsed = parse_response(sample.raw);
  } catch (const ResponseParseError&) {
  }
  return sample;
}

// ---------------------------------------------------------------------------
// Heuristic generator

namespace {

constexpr int kFamilies = 8;
constexpr const char* kStub = "types.SimpleNamespace";
constexpr const char* kAbsorb = "lambda *args, **kwargs: ";

// Conventional aliases that name a module rather than a value.
const std::map<std::string, std::string>& module_aliases() {
  static const std::map<std::string, std::string> table = {
      {"np", "import numpy as np"},        {"pd", "import pandas as pd"},
      {"plt", "import matplotlib.pyplot as plt"},
      {"os", "import os"},                 {"sys", "import sys"},
      {"re", "import re"},                 {"json", "import json"},
      {"math", "import math"},             {"time", "import time"},
      {"random", "import random"},         {"logging", "import logging"},
      {"datetime", "import datetime"},     {"collections", "import collections"},
      {"itertools", "import itertools"},   {"functools", "import functools"},
      {"string", "import string"},         {"pathlib", "import pathlib"},
      {"subprocess", "import subprocess"}, {"shutil", "import shutil"},
      {"csv", "import csv"},               {"pickle", "import pickle"},
      {"copy", "import copy"},             {"typing", "import typing"},
      {"types", "import types"},
  };
  return table;
}

// Plain value of a family; the stub family yields an empty stub.
std::string plain_value(int family) {
  switch (family) {
    case 0:
      return std::string(kStub) + "()";
    case 1:
      return "''";
    case 2:
      return "'a@b.c'";
    case 3:
      return "0";
    case 4:
      return "1";
    case 5:
      return "[]";
    case 6:
      return "None";
    default:
      return std::string(kAbsorb) + "None";
  }
}

// Each round of kFamilies variants steps the per-name stride, so later rounds
// assign different families to different names.
int family_of(unsigned seed, int variant, std::size_t name_index) {
  const unsigned long long stride = static_cast<unsigned long long>(seed) + static_cast<unsigned>(variant) / kFamilies;
  const unsigned long long offset = stride * (name_index + 1) % kFamilies;
  return static_cast<int>((static_cast<unsigned long long>(variant) + offset) % kFamilies);
}

}  // namespace

GeneratorResponse heuristic_generate(const UndefinedRefs& refs, unsigned seed, int variant) {
  if (variant < 0) throw ContractViolation("variant must be non-negative");
  const std::set<std::string> called(refs.called.begin(), refs.called.end());
  GeneratorResponse out;
  bool uses_stub = false;
  for (std::size_t i = 0; i < refs.variables.size(); ++i) {
    const std::string& name = refs.variables[i];
    if (const auto it = module_aliases().find(name); it != module_aliases().end()) {
      out.imports.push_back(it->second);
      continue;
    }
    const int family = family_of(seed, variant, i);
    if (called.count(name) != 0) {
      const std::string result = family == kFamilies - 1 ? plain_value(0) : plain_value(family);
      uses_stub = uses_stub || result.rfind(kStub, 0) == 0;
      out.initialization.push_back("def " + name + "(*args, **kwargs):\n    return " + result);
      continue;
    }
    if (family != 0) {
      out.initialization.push_back(name + " = " + plain_value(family));
      continue;
    }
    uses_stub = true;
    std::string fields;
    int member_index = 0;
    for (const std::string& member : refs.members) {
      if (member.size() <= name.size() + 1 || member.compare(0, name.size() + 1, name + ".") != 0) continue;
      const int attr_family = (variant + ++member_index) % kFamilies;
      std::string value = plain_value(attr_family);
      if (called.count(member) != 0 && attr_family != kFamilies - 1) value = kAbsorb + value;
      if (!fields.empty()) fields += ", ";
      fields += member.substr(name.size() + 1) + "=" + value;
    }
    out.initialization.push_back(name + " = " + kStub + "(" + fields + ")");
  }
  if (uses_stub) out.imports.insert(out.imports.begin(), "import types");
  return out;
}

GeneratorBatch HeuristicGenerator::generate(const GeneratorRequest& request) {
  if (request.conversation.messages.empty()) throw ContractViolation("empty conversation");
  if (request.samples < 1) throw ContractViolation("samples must be at least 1");
  if (request.attempt < 0) throw ContractViolation("attempt must be non-negative");
  UndefinedRefs refs;
  if (const auto source = extract_snippet(request.conversation)) {
    try {
      refs = get_undefined_refs(*source);
    } catch (const AnalysisError&) {
    }
  }
  // Later steps start past the variants an earlier step already tried.
  int base = 0;
  switch (prompt_step(request.conversation.messages.back()).value_or(Step::Undefinedness)) {
    case Step::Undefinedness:
      base = 0;
      break;
    case Step::Error:
      base = 1;
      break;
    case Step::Coverage:
      base = 3;
      break;
  }
  GeneratorBatch batch;
  for (int i = 0; i < request.samples; ++i) {
    batch.responses.push_back(
        make_sample(serialize(heuristic_generate(refs, seed_, base + request.attempt * request.samples + i))));
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Remote generator

RateLimiter::RateLimiter(double max_per_second) {
  if (max_per_second < 0.0) throw ContractViolation("rate must be non-negative");
  if (max_per_second > 0.0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / max_per_second));
  }
}

void RateLimiter::acquire() {
  if (interval_ == std::chrono::steady_clock::duration::zero()) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    slot = std::max(next_, std::chrono::steady_clock::now());
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

namespace {

class HttpTransport : public Transport {
 public:
  HttpTransport(LlmConfig cfg, std::string api_key) : cfg_(std::move(cfg)), api_key_(std::move(api_key)) {}

  TransportReply post(const std::string& body) override {
    httplib::Client client(cfg_.base_url);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto result = client.Post(cfg_.path, headers, body, "application/json");
    if (!result) throw TransportError("request failed: " + httplib::to_string(result.error()));
    return TransportReply{result->status, result->body};
  }

 private:
  LlmConfig cfg_;
  std::string api_key_;
};

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<Transport> make_http_transport(const LlmConfig& cfg) {
  const char* key = std::getenv(cfg.api_key_env.c_str());
  return std::make_unique<HttpTransport>(cfg, key != nullptr ? key : "");
}

LlmGenerator::LlmGenerator(LlmConfig cfg, std::unique_ptr<Transport> transport, std::shared_ptr<RateLimiter> limiter,
                           Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(std::move(limiter)), sleeper_(std::move(sleeper)) {
  if (cfg_.model.empty()) throw ContractViolation("a model name is required");
  if (!transport_) throw ContractViolation("a transport is required");
  if (cfg_.max_retries < 0) throw ContractViolation("max_retries must be non-negative");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Json LlmGenerator::request_body(const Conversation& conversation, int samples) const {
  Json messages = Json::array();
  for (const Message& m : conversation.messages) messages.push_back(m);
  return Json{{"model", cfg_.model},
              {"messages", messages},
              {"n", samples},
              {"temperature", cfg_.temperature},
              {"max_tokens", cfg_.max_tokens}};
}

void LlmGenerator::audit(const Json& record) {
  if (cfg_.audit_path.empty()) return;
  // Generators of concurrent workers may share one audit file.
  static std::mutex audit_mutex;
  std::lock_guard lock(audit_mutex);
  std::ofstream(cfg_.audit_path, std::ios::app) << record.dump() << "\n";
}

std::vector<std::string> LlmGenerator::exchange(const Conversation& conversation, int samples) {
  const std::string body = request_body(conversation, samples).dump();
  std::chrono::milliseconds backoff = cfg_.initial_backoff;
  std::string last_failure;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff);
      backoff = std::min(backoff * 2, cfg_.max_backoff);
    }
    if (limiter_) limiter_->acquire();
    TransportReply reply;
    try {
      reply = transport_->post(body);
    } catch (const TransportError& e) {
      last_failure = e.what();
      audit(Json{{"request", Json::parse(body)}, {"failure", last_failure}});
      continue;
    }
    audit(Json{{"request", Json::parse(body)}, {"status", reply.status}, {"reply", reply.body}});
    if (reply.status != 200) {
      last_failure = "HTTP status " + std::to_string(reply.status);
      if (retryable(reply.status)) continue;
      throw GeneratorUnavailable(last_failure);
    }
    const Json parsed = Json::parse(reply.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array()) {
      last_failure = "malformed completion payload";
      continue;
    }
    std::vector<std::string> texts;
    for (const Json& choice : parsed["choices"]) {
      const Json* content = nullptr;
      if (choice.contains("message") && choice["message"].contains("content")) content = &choice["message"]["content"];
      texts.push_back(content != nullptr && content->is_string() ? content->get<std::string>() : std::string());
      if (static_cast<int>(texts.size()) == samples) break;
    }
    return texts;
  }
  throw GeneratorUnavailable("generator unavailable after " + std::to_string(cfg_.max_retries + 1) +
                             " attempts: " + last_failure);
}

GeneratorBatch LlmGenerator::generate(const GeneratorRequest& request) {
  if (request.conversation.messages.empty()) throw ContractViolation("empty conversation");
  if (request.samples < 1) throw ContractViolation("samples must be at least 1");
  GeneratorBatch batch;
  if (cfg_.multi_sample) {
    for (std::string& text : exchange(request.conversation, request.samples)) {
      batch.responses.push_back(make_sample(std::move(text)));
    }
  } else {
    for (int i = 0; i < request.samples; ++i) {
      for (std::string& text : exchange(request.conversation, 1)) batch.responses.push_back(make_sample(std::move(text)));
    }
  }
  return batch;
}

}  // namespace snipexec
