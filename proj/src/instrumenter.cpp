#include "snipexec/instrumenter.hpp"

#include <algorithm>

#include "snipexec/errors.hpp"
#include "snipexec/python/parser.hpp"
#include "snipexec/statements.hpp"

namespace snipexec {

namespace {

using namespace python;

struct Edit {
  std::size_t offset;
  std::size_t length;
  std::string text;
};

std::string probe(int id) { return std::string(kProbeName) + "(" + std::to_string(id) + ")"; }

class Rewriter {
 public:
  Rewriter(std::string_view source, const std::vector<StatementUnit>& units) : src_(source) {
    for (const StatementUnit& u : units) {
      ids_[{u.stmt, u.clause}] = u.probe_id;
      sites_[u.probe_id] = u.site;
    }
  }

  InstrumentedSnippet run(const Module& module) {
    suite(module.body, "");
    return apply();
  }

 private:
  int id_of(const Stmt* s, const Clause* c) const {
    const auto it = ids_.find({s, c});
    return it == ids_.end() ? 0 : it->second;
  }

  void insert(std::size_t offset, std::string text) { edits_.push_back({offset, 0, std::move(text)}); }
  void replace(std::size_t from, std::size_t to, std::string text) { edits_.push_back({from, to - from, std::move(text)}); }

  std::string line_indent(const Position& p) const {
    return std::string(src_.substr(p.offset - static_cast<std::size_t>(p.column), static_cast<std::size_t>(p.column)));
  }

  void wrap(const Expr& value, int id) {
    const bool bare_tuple = value.kind == ExprKind::Tuple && !value.parenthesized;
    insert(value.begin.offset, std::string(kProbeName) + "(" + std::to_string(id) + ", " + (bare_tuple ? "(" : ""));
    insert(value.end, bare_tuple ? "))" : ")");
  }

  void suite(const std::vector<StmtPtr>& body, const std::string& indent) {
    std::size_t i = 0;
    while (i < body.size()) {
      if (!body[i]->is_simple()) {
        compound(*body[i], indent);
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < body.size() && body[j + 1]->is_simple() && body[j + 1]->line_end == body[i]->line_end) ++j;
      simple_line(body, i, j, indent);
      i = j + 1;
    }
  }

  void simple_line(const std::vector<StmtPtr>& body, std::size_t first, std::size_t last, const std::string& indent) {
    for (std::size_t k = first; k <= last; ++k) {
      const Stmt& s = *body[k];
      const int id = id_of(&s, nullptr);
      const ProbeSite site = sites_.at(id);
      if (site == ProbeSite::Before) insert(s.begin.offset, probe(id) + "\n" + indent);
      if (site == ProbeSite::WrapValue) wrap(*s.value, id);
      const std::string trailing = site == ProbeSite::After ? "\n" + indent + probe(id) : "";
      if (k < last) {
        replace(s.end, body[k + 1]->begin.offset, trailing + "\n" + indent);
      } else if (!trailing.empty()) {
        insert(s.line_end, trailing);
      }
    }
  }

  void clause_body(const Clause& clause, const std::string& indent, int entry_probe) {
    const auto& body = clause.body.body;
    std::string body_indent;
    if (clause.body.inline_suite) {
      body_indent = indent + "    ";
      std::string text = "\n" + body_indent;
      if (entry_probe != 0) text += probe(entry_probe) + "\n" + body_indent;
      replace(clause.colon_end, body.front()->begin.offset, text);
    } else {
      body_indent = line_indent(body.front()->begin);
      if (entry_probe != 0) insert(clause.header_newline, "\n" + body_indent + probe(entry_probe));
    }
    suite(body, body_indent);
  }

  void compound(const Stmt& s, const std::string& indent) {
    const int own = id_of(&s, nullptr);
    if (s.kind == StmtKind::Match) wrap(*s.value, own);
    for (const Clause& clause : s.clauses) {
      const int id = id_of(&s, &clause);
      int entry = 0;
      if (id != 0 && sites_.at(id) == ProbeSite::WrapTest) wrap(*clause.test, id);
      if (id != 0 && sites_.at(id) == ProbeSite::SuiteEntry) entry = id;
      clause_body(clause, line_indent(clause.keyword), entry);
    }
    if (own != 0 && sites_.at(own) == ProbeSite::Trailing) insert(s.line_end, "\n" + indent + probe(own));
  }

  InstrumentedSnippet apply() {
    std::stable_sort(edits_.begin(), edits_.end(), [](const Edit& a, const Edit& b) { return a.offset < b.offset; });
    InstrumentedSnippet out;
    int original_line = 1;
    out.line_map.push_back(1);
    auto emit = [&](std::string_view text, bool original) {
      for (char c : text) {
        out.source.push_back(c);
        if (c != '\n') continue;
        if (original) ++original_line;
        out.line_map.push_back(original_line);
      }
    };
    std::size_t cursor = 0;
    for (const Edit& e : edits_) {
      if (e.offset < cursor) throw InstrumentError("overlapping instrumentation edits");
      emit(src_.substr(cursor, e.offset - cursor), true);
      emit(e.text, false);
      cursor = e.offset + e.length;
    }
    emit(src_.substr(cursor), true);
    if (!out.source.empty() && out.source.back() != '\n') emit("\n", false);
    out.line_map.pop_back();  // the position after the final newline starts no line
    return out;
  }

  std::string_view src_;
  std::map<std::pair<const Stmt*, const Clause*>, int> ids_;
  std::map<int, ProbeSite> sites_;
  std::vector<Edit> edits_;
};

}  // namespace

std::optional<int> Program::snippet_line(int program_line) const {
  const int body_line = program_line - prelude_lines;
  if (body_line < 1 || body_line > static_cast<int>(line_map.size())) return std::nullopt;
  return line_map[static_cast<std::size_t>(body_line - 1)];
}

InstrumentedSnippet instrument(std::string_view source) {
  std::vector<Token> tokens;
  Module module;
  try {
    tokens = tokenize(source);
    module = parse_module(source);
  } catch (const ParseError& e) {
    throw InstrumentError(std::string("cannot instrument: ") + e.what());
  }
  for (const Token& t : tokens) {
    if (t.kind == TokenKind::Name && t.text == kProbeName) {
      throw InstrumentError("snippet already uses the probe name at line " + std::to_string(t.begin.line));
    }
  }
  const std::vector<StatementUnit> units = index_statements(module);
  InstrumentedSnippet out = Rewriter(source, units).run(module);
  for (const StatementUnit& u : units) out.source_map[u.probe_id] = u.line;
  return out;
}

InstrumentedSnippet instrument(const Snippet& snippet) { return instrument(snippet.source); }

Program compose(const Prefix& prefix, const InstrumentedSnippet& instrumented) {
  Program program;
  program.text = "from " + std::string(kRuntimeModule) + " import " + std::string(kProbeName) + "\n";
  for (const std::string& entry : prefix.entries()) {
    program.text += entry;
    if (entry.empty() || entry.back() != '\n') program.text += '\n';
  }
  program.prelude_lines = static_cast<int>(std::count(program.text.begin(), program.text.end(), '\n'));
  program.text += instrumented.source;
  program.line_map = instrumented.line_map;
  return program;
}

}  // namespace snipexec
