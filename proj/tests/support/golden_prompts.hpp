#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snipexec/prompts.hpp"
#include "snipexec/scope_analyzer.hpp"

#ifndef SNIPEXEC_SOURCE_DIR
#error "SNIPEXEC_SOURCE_DIR must point at the project root"
#endif

namespace golden {

inline std::string root() { return SNIPEXEC_SOURCE_DIR; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Inputs of the step-2 and step-3 prompts for one corpus snippet.
struct PromptCase {
  std::string snippet;
  std::string assistant;  // step-1 reply the erroneous prefix came from
  snipexec::ExceptionInfo error;
  std::set<int> covered;
};

inline const std::vector<PromptCase>& cases() {
  static const std::vector<PromptCase> all = {
      {"s01_register",
       R"J({"imports":[],"initialization":["class Self:\n    user_type = 'admin'\n    name = 'n'\n    alias = 'a'\nself = Self()","def dummy_register_func(name, alias):\n    return name + '@' + alias","def get_register_func(user_type):\n    return dummy_register_func"]})J",
       {"TypeError", "dummy_register_func() missing 1 required positional argument: 'alias'", 2},
       {1, 2, 3, 4, 5, 6}},
      {"s02_dataframe", R"J({"imports":["import pandas as pd"],"initialization":["data = {}"]})J",
       {"KeyError", "'price'", 2}, {1}},
      {"s05_user", R"J({"imports":[],"initialization":["user = None"]})J",
       {"AttributeError", "'NoneType' object has no attribute 'is_authenticated'", 1}, {}},
      {"s09_retry", R"J({"imports":[],"initialization":["max_attempts = 3","fetch = 5"]})J",
       {"TypeError", "'int' object is not callable", 4}, {1, 2, 8}},
      {"s14_json", R"J({"imports":["import json"],"initialization":["raw = 'x'"]})J",
       {"JSONDecodeError", "Expecting value: line 1 column 1 (char 0)", std::nullopt}, {1, 2, 4, 6, 7}},
  };
  return all;
}

struct Rendered {
  std::string step1, step2, step3;
};

inline Rendered render_case(const PromptCase& c) {
  using namespace snipexec;
  const Snippet s = make_snippet(c.snippet, read_file(root() + "/corpus/mini/" + c.snippet + ".py"));
  const Conversation first = gen_prompt1(s, get_undefined_refs(s));
  Conversation history = first;
  history.messages.push_back(Message{Role::Assistant, c.assistant});
  ExecutionOutcome outcome;
  outcome.exception = c.error;
  const Conversation second = gen_prompt2(history, s, outcome);
  const Conversation third = gen_prompt3(annotate_uncovered(s, CoverageSet{c.covered}));
  return {render(first), render(second), render(third)};
}

inline std::string fixture_path(const std::string& snippet, int step) {
  return root() + "/tests/fixtures/prompts/" + snippet + ".step" + std::to_string(step) + ".txt";
}

// Compares every case against its committed fixture; rewrites fixtures
// instead when SNIPEXEC_UPDATE_GOLDEN is set. Returns mismatch descriptions.
inline std::vector<std::string> check_all() {
  const bool update = std::getenv("SNIPEXEC_UPDATE_GOLDEN") != nullptr;
  std::vector<std::string> mismatches;
  for (const PromptCase& c : cases()) {
    const Rendered r = render_case(c);
    const std::string* texts[] = {&r.step1, &r.step2, &r.step3};
    for (int step = 1; step <= 3; ++step) {
      const std::string path = fixture_path(c.snippet, step);
      if (update) {
        std::ofstream(path, std::ios::binary) << *texts[step - 1];
      } else if (read_file(path) != *texts[step - 1]) {
        mismatches.push_back(path);
      }
    }
  }
  return mismatches;
}

}  // namespace golden
