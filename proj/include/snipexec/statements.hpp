#pragma once

#include <vector>

#include "snipexec/python/ast.hpp"

namespace snipexec {

/// How a unit's probe is attached to the statement it credits.
enum class ProbeSite {
  After,       // simple statement: probe follows it
  Before,      // break, continue, bare return/raise: cannot fail once reached
  WrapValue,   // return/raise with a value: probe wraps the value
  WrapTest,    // if/elif/while test, for iterable, match subject
  SuiteEntry,  // try, with, except, case: probe opens the suite
  Trailing,    // def/class: probe follows the whole definition
};

struct StatementUnit {
  int probe_id = 0;
  int line = 0;  // first source line; the decorator line for decorated definitions
  ProbeSite site = ProbeSite::After;
  const python::Stmt* stmt = nullptr;
  const python::Clause* clause = nullptr;  // set for clause headers
};

/// Enumerates executable statements in source pre-order and numbers them from 1.
/// Units are simple statements, compound headers (including elif, except and
/// case clauses); else and finally introduce no unit of their own.
std::vector<StatementUnit> index_statements(const python::Module& module);

}  // namespace snipexec
