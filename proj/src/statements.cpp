#include "snipexec/statements.hpp"

namespace snipexec {

namespace {

using python::ClauseKind;
using python::Stmt;
using python::StmtKind;

ProbeSite simple_site(const Stmt& stmt) {
  switch (stmt.kind) {
    case StmtKind::Break:
    case StmtKind::Continue:
      return ProbeSite::Before;
    case StmtKind::Return:
    case StmtKind::Raise:
      return stmt.value ? ProbeSite::WrapValue : ProbeSite::Before;
    default:
      return ProbeSite::After;
  }
}

class Indexer {
 public:
  explicit Indexer(std::vector<StatementUnit>& out) : out_(out) {}

  void body(const std::vector<python::StmtPtr>& stmts) {
    for (const auto& stmt : stmts) statement(*stmt);
  }

 private:
  void add(const Stmt& stmt, const python::Clause* clause, int line, ProbeSite site) {
    StatementUnit unit;
    unit.probe_id = static_cast<int>(out_.size()) + 1;
    unit.line = line;
    unit.site = site;
    unit.stmt = &stmt;
    unit.clause = clause;
    out_.push_back(unit);
  }

  void statement(const Stmt& stmt) {
    if (stmt.is_simple()) {
      add(stmt, nullptr, stmt.begin.line, simple_site(stmt));
      return;
    }
    switch (stmt.kind) {
      case StmtKind::FunctionDef:
      case StmtKind::ClassDef:
        add(stmt, nullptr, stmt.begin.line, ProbeSite::Trailing);
        break;
      case StmtKind::Match:
        add(stmt, nullptr, stmt.begin.line, ProbeSite::WrapTest);
        break;
      default:
        break;
    }
    for (const auto& clause : stmt.clauses) {
      switch (clause.kind) {
        case ClauseKind::If:
        case ClauseKind::Elif:
        case ClauseKind::While:
        case ClauseKind::For:
          add(stmt, &clause, clause.keyword.line, ProbeSite::WrapTest);
          break;
        case ClauseKind::Try:
        case ClauseKind::With:
        case ClauseKind::Except:
        case ClauseKind::Case:
          add(stmt, &clause, clause.keyword.line, ProbeSite::SuiteEntry);
          break;
        default:
          break;
      }
      body(clause.body.body);
    }
  }

  std::vector<StatementUnit>& out_;
};

}  // namespace

std::vector<StatementUnit> index_statements(const python::Module& module) {
  std::vector<StatementUnit> units;
  Indexer(units).body(module.body);
  return units;
}

}  // namespace snipexec
