#pragma once

#include <string_view>

#include "snipexec/python/ast.hpp"

namespace snipexec::python {

/// Parses a Python 3 module. Throws ParseError on invalid syntax.
Module parse_module(std::string_view source);

/// True when `source` parses as a module.
bool parses(std::string_view source) noexcept;

/// Calls `fn` on every statement in source order (headers before bodies).
template <typename Fn>
void walk_statements(const std::vector<StmtPtr>& body, Fn&& fn) {
  for (const auto& stmt : body) {
    fn(*stmt);
    for (const auto& clause : stmt->clauses) walk_statements(clause.body.body, fn);
  }
}

}  // namespace snipexec::python
