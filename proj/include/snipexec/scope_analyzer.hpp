#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "snipexec/model.hpp"

namespace snipexec {

/// Names a snippet reads without a visible definition, plus one-level member
/// accesses rooted at them. Lists are ordered by first source position.
struct UndefinedRefs {
  std::vector<std::string> variables;
  std::vector<std::string> members;  // "base.attr", base in variables
  /// Entries of variables or members that are used as call targets.
  std::vector<std::string> called;

  bool empty() const { return variables.empty() && members.empty(); }
  bool operator==(const UndefinedRefs&) const = default;
};

/// Throws AnalysisError when `source` does not parse.
UndefinedRefs get_undefined_refs(std::string_view source);
UndefinedRefs get_undefined_refs(const Snippet& snippet);

/// Builtin names of the targeted interpreter version (3.10 plus exception groups).
const std::vector<std::string_view>& builtin_names();
bool is_builtin(std::string_view name);

void to_json(Json& j, const UndefinedRefs& v);
void from_json(const Json& j, UndefinedRefs& v);

}  // namespace snipexec
