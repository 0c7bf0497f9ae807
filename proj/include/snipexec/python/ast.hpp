#pragma once

#include <memory>
#include <string>
#include <vector>

#include "snipexec/python/lexer.hpp"

namespace snipexec::python {

enum class ExprContext { Load, Store, Del };

enum class ExprKind {
  Name,
  Attribute,    // children[0] = value; identifier = attribute name
  Call,         // children[0] = callee, then arguments in source order
  Keyword,      // call keyword argument; identifier = name (empty for **)
  Subscript,    // children[0] = value, children[1] = index
  Slice,
  Starred,
  NamedExpr,    // children[0] = target Name, children[1] = value
  Lambda,       // args, children[0] = body
  Comprehension,// list/set/dict comprehension or generator expression
  Constant,
  String,       // children = expressions embedded in f-strings
  Tuple,
  List,
  Set,
  Dict,         // children alternate key, value; a null key marks ** unpacking
  IfExp,        // children = test, body, orelse
  Await,
  Yield,
  YieldFrom,
  Operation,    // any other operator; children in evaluation order
  Pattern,      // structural pattern; captures appear as Name/Store children
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Comprehension {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> ifs;
};

enum class ParamKind { Positional, VarPositional, KeywordOnly, VarKeyword };

struct Parameter {
  std::string name;
  Position position;
  ParamKind kind = ParamKind::Positional;
  ExprPtr annotation;
  ExprPtr default_value;
};

struct Arguments {
  std::vector<Parameter> params;
};

struct Expr {
  ExprKind kind = ExprKind::Operation;
  Position begin;
  std::size_t end = 0;
  ExprContext ctx = ExprContext::Load;
  std::string identifier;
  bool parenthesized = false;
  std::vector<ExprPtr> children;
  std::unique_ptr<Arguments> args;           // Lambda
  std::vector<Comprehension> generators;     // Comprehension
};

enum class StmtKind {
  Expr,
  Assign,
  AugAssign,
  AnnAssign,
  Pass,
  Break,
  Continue,
  Return,
  Raise,
  Global,
  Nonlocal,
  Delete,
  Assert,
  Import,
  ImportFrom,
  TypeAlias,
  If,
  While,
  For,
  Try,
  With,
  FunctionDef,
  ClassDef,
  Match,
};

enum class ClauseKind { If, Elif, Else, While, For, Try, Except, Finally, With, Def, Class, Case };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Suite {
  bool inline_suite = false;  // statements on the header line
  std::vector<StmtPtr> body;
};

struct WithItem {
  ExprPtr context;
  ExprPtr target;
};

struct Alias {
  std::string name;    // dotted module name or imported symbol
  std::string asname;
  Position position;
};

struct Clause {
  ClauseKind kind = ClauseKind::If;
  Position keyword;
  std::size_t colon_end = 0;       // one past ':'
  std::size_t header_newline = 0;  // NEWLINE ending the header (block suites)
  ExprPtr test;                    // if/elif/while test, for iterable, except type, case guard
  ExprPtr target;                  // for target, except alias, case pattern
  std::vector<WithItem> items;
  Suite body;
};

struct Stmt {
  StmtKind kind = StmtKind::Pass;
  Position begin;
  std::size_t end = 0;       // one past the last token of a simple statement
  std::size_t line_end = 0;  // NEWLINE token that terminates the statement's last line

  std::vector<ExprPtr> targets;
  ExprPtr value;
  ExprPtr extra;  // annotation, raise cause, assert message

  std::vector<Alias> names;
  std::string module;
  int level = 0;

  std::string name;
  Position name_position;
  std::vector<ExprPtr> decorators;
  std::vector<std::string> type_params;
  std::unique_ptr<Arguments> args;
  ExprPtr returns;
  std::vector<ExprPtr> bases;

  std::vector<Clause> clauses;
  std::size_t match_colon_end = 0;
  std::size_t match_header_newline = 0;
  std::string augmented_op;

  bool is_simple() const { return kind < StmtKind::If; }
};

struct Module {
  std::vector<StmtPtr> body;
};

}  // namespace snipexec::python
