#include "snipexec/python/parser.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace snipexec::python {

namespace {

constexpr std::string_view kAugmentedOps[] = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                              "&=", "|=", "^=", ">>=", "<<=", "**="};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string_view source)
      : tokens_(std::move(tokens)), source_(source) {}

  Module parse_module() {
    Module module;
    while (peek().kind != TokenKind::EndMarker) {
      if (peek().kind == TokenKind::Indent) fail("unexpected indent");
      parse_statement(module.body);
    }
    return module;
  }

  ExprPtr parse_embedded_expression() {
    auto expr = parse_star_expressions(/*allow_named=*/true);
    if (peek().kind != TokenKind::EndMarker) fail("invalid f-string expression");
    return expr;
  }

 private:
  // ---------------------------------------------------------------- tokens

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(index_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }

  const Token& advance() {
    const Token& t = tokens_[index_];
    if (index_ + 1 < tokens_.size()) ++index_;
    prev_end_ = t.end;
    return t;
  }

  bool at_op(std::string_view op) const { return peek().is_op(op); }
  bool at_keyword(std::string_view kw) const { return peek().is_name(kw); }

  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    advance();
    return true;
  }

  bool accept_keyword(std::string_view kw) {
    if (!at_keyword(kw)) return false;
    advance();
    return true;
  }

  const Token& expect_op(std::string_view op) {
    if (!at_op(op)) fail("expected '" + std::string(op) + "'");
    return advance();
  }

  const Token& expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail("expected '" + std::string(kw) + "'");
    return advance();
  }

  const Token& expect_kind(TokenKind kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what);
    return advance();
  }

  bool at_identifier(std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::Name && !is_keyword(t.text);
  }

  const Token& expect_identifier() {
    if (!at_identifier()) fail("expected identifier");
    return advance();
  }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    std::string near = t.kind == TokenKind::Newline     ? "newline"
                       : t.kind == TokenKind::EndMarker ? "end of input"
                       : t.kind == TokenKind::Indent    ? "indent"
                       : t.kind == TokenKind::Dedent    ? "dedent"
                                                        : "'" + std::string(t.text) + "'";
    throw ParseError(message + " near " + near, t.begin.line, t.begin.column);
  }

  bool starts_expression(const Token& t) const {
    switch (t.kind) {
      case TokenKind::Number:
      case TokenKind::String:
        return true;
      case TokenKind::Name:
        return !is_keyword(t.text) || t.text == "not" || t.text == "lambda" || t.text == "await" ||
               t.text == "None" || t.text == "True" || t.text == "False";
      case TokenKind::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  ExprPtr make_expr(ExprKind kind, Position begin) const {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->begin = begin;
    return e;
  }

  ExprPtr finish(ExprPtr e) const {
    e->end = prev_end_;
    return e;
  }

  StmtPtr make_stmt(StmtKind kind, Position begin) const {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->begin = begin;
    return s;
  }

  // ------------------------------------------------------------ statements

  void parse_statement(std::vector<StmtPtr>& out) {
    const Token& t = peek();
    if (t.kind == TokenKind::Name) {
      if (t.text == "if") return out.push_back(parse_if());
      if (t.text == "while") return out.push_back(parse_while());
      if (t.text == "for") return out.push_back(parse_for(t.begin));
      if (t.text == "try") return out.push_back(parse_try());
      if (t.text == "with") return out.push_back(parse_with(t.begin));
      if (t.text == "def") return out.push_back(parse_funcdef(t.begin, {}));
      if (t.text == "class") return out.push_back(parse_classdef(t.begin, {}));
      if (t.text == "async") {
        const Position begin = t.begin;
        const Token& next = peek(1);
        if (next.is_name("def")) {
          advance();
          return out.push_back(parse_funcdef(begin, {}));
        }
        if (next.is_name("for")) {
          advance();
          return out.push_back(parse_for(begin));
        }
        if (next.is_name("with")) {
          advance();
          return out.push_back(parse_with(begin));
        }
      }
      if (t.text == "match") {
        if (auto match = try_parse_match()) return out.push_back(std::move(match));
      }
    } else if (t.is_op("@")) {
      return out.push_back(parse_decorated());
    }
    parse_simple_line(out);
  }

  void parse_simple_line(std::vector<StmtPtr>& out) {
    const std::size_t first = out.size();
    while (true) {
      out.push_back(parse_small_statement());
      if (!accept_op(";")) break;
      if (peek().kind == TokenKind::Newline) break;
    }
    const Token& nl = expect_kind(TokenKind::Newline, "end of statement");
    for (std::size_t i = first; i < out.size(); ++i) out[i]->line_end = nl.begin.offset;
  }

  void parse_suite(Clause& clause) {
    clause.colon_end = expect_op(":").end;
    Suite& suite = clause.body;
    if (peek().kind == TokenKind::Newline) {
      clause.header_newline = advance().begin.offset;
      expect_kind(TokenKind::Indent, "an indented block");
      while (peek().kind != TokenKind::Dedent && peek().kind != TokenKind::EndMarker) {
        parse_statement(suite.body);
      }
      expect_kind(TokenKind::Dedent, "dedent");
    } else {
      suite.inline_suite = true;
      parse_simple_line(suite.body);
    }
    if (suite.body.empty()) fail("expected an indented block");
  }

  Clause& open_clause(Stmt& stmt, ClauseKind kind) {
    Clause clause;
    clause.kind = kind;
    clause.keyword = peek().begin;
    advance();
    stmt.clauses.push_back(std::move(clause));
    return stmt.clauses.back();
  }

  static void close_compound(Stmt& stmt) {
    const Stmt& last = *stmt.clauses.back().body.body.back();
    stmt.line_end = last.line_end;
    stmt.end = last.line_end;
  }

  StmtPtr parse_if() {
    auto stmt = make_stmt(StmtKind::If, peek().begin);
    {
      Clause& c = open_clause(*stmt, ClauseKind::If);
      c.test = parse_named_expression();
      parse_suite(c);
    }
    while (at_keyword("elif")) {
      Clause& c = open_clause(*stmt, ClauseKind::Elif);
      c.test = parse_named_expression();
      parse_suite(c);
    }
    parse_else(*stmt);
    close_compound(*stmt);
    return stmt;
  }

  void parse_else(Stmt& stmt) {
    if (at_keyword("else")) {
      Clause& c = open_clause(stmt, ClauseKind::Else);
      parse_suite(c);
    }
  }

  StmtPtr parse_while() {
    auto stmt = make_stmt(StmtKind::While, peek().begin);
    Clause& c = open_clause(*stmt, ClauseKind::While);
    c.test = parse_named_expression();
    parse_suite(c);
    parse_else(*stmt);
    close_compound(*stmt);
    return stmt;
  }

  StmtPtr parse_for(Position begin) {
    auto stmt = make_stmt(StmtKind::For, begin);
    Clause& c = open_clause(*stmt, ClauseKind::For);
    c.keyword = begin;
    c.target = parse_target_list();
    set_context(*c.target, ExprContext::Store);
    expect_keyword("in");
    c.test = parse_star_expressions(false);
    parse_suite(c);
    parse_else(*stmt);
    close_compound(*stmt);
    return stmt;
  }

  StmtPtr parse_try() {
    auto stmt = make_stmt(StmtKind::Try, peek().begin);
    {
      Clause& c = open_clause(*stmt, ClauseKind::Try);
      parse_suite(c);
    }
    bool handlers = false;
    while (at_keyword("except")) {
      handlers = true;
      Clause& c = open_clause(*stmt, ClauseKind::Except);
      accept_op("*");
      if (!at_op(":")) {
        c.test = parse_expression();
        if (at_op(",")) {
          auto tuple = make_expr(ExprKind::Tuple, c.test->begin);
          tuple->children.push_back(std::move(c.test));
          while (accept_op(",")) tuple->children.push_back(parse_expression());
          c.test = finish(std::move(tuple));
        }
        if (accept_keyword("as")) {
          const Token& name = expect_identifier();
          auto target = make_expr(ExprKind::Name, name.begin);
          target->identifier = std::string(name.text);
          target->ctx = ExprContext::Store;
          c.target = finish(std::move(target));
        }
      }
      parse_suite(c);
    }
    if (handlers) parse_else(*stmt);
    if (at_keyword("finally")) {
      Clause& c = open_clause(*stmt, ClauseKind::Finally);
      parse_suite(c);
    } else if (!handlers) {
      fail("expected 'except' or 'finally' block");
    }
    close_compound(*stmt);
    return stmt;
  }

  StmtPtr parse_with(Position begin) {
    auto stmt = make_stmt(StmtKind::With, begin);
    Clause& c = open_clause(*stmt, ClauseKind::With);
    c.keyword = begin;
    bool parsed = false;
    if (at_op("(")) {
      const std::size_t saved = index_;
      const std::size_t saved_end = prev_end_;
      try {
        advance();
        std::vector<WithItem> items;
        while (!at_op(")")) {
          items.push_back(parse_with_item());
          if (!accept_op(",")) break;
        }
        expect_op(")");
        if (!at_op(":")) fail("not a parenthesized with");
        c.items = std::move(items);
        parsed = true;
      } catch (const ParseError&) {
        index_ = saved;
        prev_end_ = saved_end;
      }
    }
    if (!parsed) {
      do {
        c.items.push_back(parse_with_item());
      } while (accept_op(","));
    }
    parse_suite(c);
    close_compound(*stmt);
    return stmt;
  }

  WithItem parse_with_item() {
    WithItem item;
    item.context = parse_expression();
    if (accept_keyword("as")) {
      item.target = parse_target_element();
      set_context(*item.target, ExprContext::Store);
    }
    return item;
  }

  StmtPtr parse_decorated() {
    const Position begin = peek().begin;
    std::vector<ExprPtr> decorators;
    while (accept_op("@")) {
      decorators.push_back(parse_named_expression());
      expect_kind(TokenKind::Newline, "newline after decorator");
    }
    if (at_keyword("def")) return parse_funcdef(begin, std::move(decorators));
    if (at_keyword("class")) return parse_classdef(begin, std::move(decorators));
    if (at_keyword("async") && peek(1).is_name("def")) {
      advance();
      return parse_funcdef(begin, std::move(decorators));
    }
    fail("expected function or class definition after decorator");
  }

  void parse_type_params(Stmt& stmt) {
    if (!accept_op("[")) return;
    while (!at_op("]")) {
      accept_op("*") || accept_op("**");
      stmt.type_params.emplace_back(expect_identifier().text);
      if (accept_op(":")) stmt.bases.push_back(parse_expression());
      if (accept_op("=")) stmt.bases.push_back(parse_expression());
      if (!accept_op(",")) break;
    }
    expect_op("]");
  }

  StmtPtr parse_funcdef(Position begin, std::vector<ExprPtr> decorators) {
    auto stmt = make_stmt(StmtKind::FunctionDef, begin);
    stmt->decorators = std::move(decorators);
    Clause& c = open_clause(*stmt, ClauseKind::Def);
    const Token& name = expect_identifier();
    stmt->name = std::string(name.text);
    stmt->name_position = name.begin;
    parse_type_params(*stmt);
    expect_op("(");
    stmt->args = parse_parameters(")", /*annotations=*/true);
    expect_op(")");
    if (accept_op("->")) stmt->returns = parse_expression();
    parse_suite(c);
    close_compound(*stmt);
    return stmt;
  }

  StmtPtr parse_classdef(Position begin, std::vector<ExprPtr> decorators) {
    auto stmt = make_stmt(StmtKind::ClassDef, begin);
    stmt->decorators = std::move(decorators);
    Clause& c = open_clause(*stmt, ClauseKind::Class);
    const Token& name = expect_identifier();
    stmt->name = std::string(name.text);
    stmt->name_position = name.begin;
    parse_type_params(*stmt);
    if (accept_op("(")) {
      parse_call_arguments(stmt->bases);
      expect_op(")");
    }
    parse_suite(c);
    close_compound(*stmt);
    return stmt;
  }

  std::unique_ptr<Arguments> parse_parameters(std::string_view closing, bool annotations) {
    auto args = std::make_unique<Arguments>();
    ParamKind mode = ParamKind::Positional;
    while (!at_op(closing)) {
      if (accept_op("/")) {
      } else if (at_op("**")) {
        advance();
        Parameter p = parse_parameter(annotations, ParamKind::VarKeyword, /*star=*/true);
        args->params.push_back(std::move(p));
      } else if (at_op("*")) {
        advance();
        mode = ParamKind::KeywordOnly;
        if (at_identifier()) args->params.push_back(parse_parameter(annotations, ParamKind::VarPositional, true));
      } else {
        args->params.push_back(parse_parameter(annotations, mode, false));
      }
      if (!accept_op(",")) break;
    }
    return args;
  }

  Parameter parse_parameter(bool annotations, ParamKind kind, bool star) {
    Parameter p;
    const Token& name = expect_identifier();
    p.name = std::string(name.text);
    p.position = name.begin;
    p.kind = kind;
    if (annotations && accept_op(":")) {
      if (star && at_op("*")) {
        const Position b = peek().begin;
        advance();
        auto s = make_expr(ExprKind::Starred, b);
        s->children.push_back(parse_expression());
        p.annotation = finish(std::move(s));
      } else {
        p.annotation = parse_expression();
      }
    }
    if (!star && accept_op("=")) p.default_value = parse_expression();
    return p;
  }

  StmtPtr try_parse_match() {
    const std::size_t saved = index_;
    const std::size_t saved_end = prev_end_;
    auto stmt = make_stmt(StmtKind::Match, peek().begin);
    try {
      advance();
      stmt->value = parse_star_expressions(true);
      stmt->match_colon_end = expect_op(":").end;
      stmt->match_header_newline = expect_kind(TokenKind::Newline, "newline").begin.offset;
      expect_kind(TokenKind::Indent, "indent");
      if (!at_keyword("case")) fail("expected 'case'");
    } catch (const ParseError&) {
      index_ = saved;
      prev_end_ = saved_end;
      return nullptr;
    }
    while (at_keyword("case")) {
      Clause& c = open_clause(*stmt, ClauseKind::Case);
      c.target = parse_patterns();
      if (accept_keyword("if")) c.test = parse_named_expression();
      parse_suite(c);
    }
    expect_kind(TokenKind::Dedent, "dedent");
    close_compound(*stmt);
    return stmt;
  }

  StmtPtr parse_small_statement() {
    const Token& t = peek();
    const Position begin = t.begin;
    if (t.kind == TokenKind::Name) {
      if (t.text == "pass" || t.text == "break" || t.text == "continue") {
        const StmtKind kind = t.text == "pass"    ? StmtKind::Pass
                              : t.text == "break" ? StmtKind::Break
                                                  : StmtKind::Continue;
        advance();
        return finish_stmt(make_stmt(kind, begin));
      }
      if (t.text == "return") {
        advance();
        auto stmt = make_stmt(StmtKind::Return, begin);
        if (starts_expression(peek())) stmt->value = parse_star_expressions(false);
        return finish_stmt(std::move(stmt));
      }
      if (t.text == "raise") {
        advance();
        auto stmt = make_stmt(StmtKind::Raise, begin);
        if (starts_expression(peek())) {
          stmt->value = parse_expression();
          if (accept_keyword("from")) stmt->extra = parse_expression();
        }
        return finish_stmt(std::move(stmt));
      }
      if (t.text == "global" || t.text == "nonlocal") {
        auto stmt = make_stmt(t.text == "global" ? StmtKind::Global : StmtKind::Nonlocal, begin);
        advance();
        do {
          const Token& name = expect_identifier();
          stmt->names.push_back(Alias{std::string(name.text), "", name.begin});
        } while (accept_op(","));
        return finish_stmt(std::move(stmt));
      }
      if (t.text == "del") {
        advance();
        auto stmt = make_stmt(StmtKind::Delete, begin);
        auto targets = parse_star_expressions(false);
        set_context(*targets, ExprContext::Del);
        stmt->targets.push_back(std::move(targets));
        return finish_stmt(std::move(stmt));
      }
      if (t.text == "assert") {
        advance();
        auto stmt = make_stmt(StmtKind::Assert, begin);
        stmt->value = parse_expression();
        if (accept_op(",")) stmt->extra = parse_expression();
        return finish_stmt(std::move(stmt));
      }
      if (t.text == "import") return parse_import();
      if (t.text == "from") return parse_from_import();
      if (t.text == "type" && at_identifier(1) && (peek(2).is_op("=") || peek(2).is_op("["))) {
        advance();
        auto stmt = make_stmt(StmtKind::TypeAlias, begin);
        const Token& name = expect_identifier();
        stmt->name = std::string(name.text);
        stmt->name_position = name.begin;
        parse_type_params(*stmt);
        expect_op("=");
        stmt->value = parse_expression();
        return finish_stmt(std::move(stmt));
      }
    }
    return parse_expression_statement();
  }

  StmtPtr finish_stmt(StmtPtr stmt) const {
    stmt->end = prev_end_;
    return stmt;
  }

  std::string parse_dotted_name() {
    std::string name(expect_identifier().text);
    while (accept_op(".")) {
      name += '.';
      name += expect_identifier().text;
    }
    return name;
  }

  StmtPtr parse_import() {
    auto stmt = make_stmt(StmtKind::Import, peek().begin);
    advance();
    do {
      Alias alias;
      alias.position = peek().begin;
      alias.name = parse_dotted_name();
      if (accept_keyword("as")) alias.asname = std::string(expect_identifier().text);
      stmt->names.push_back(std::move(alias));
    } while (accept_op(","));
    return finish_stmt(std::move(stmt));
  }

  StmtPtr parse_from_import() {
    auto stmt = make_stmt(StmtKind::ImportFrom, peek().begin);
    advance();
    while (at_op(".") || at_op("...")) stmt->level += static_cast<int>(advance().text.size());
    if (!at_keyword("import")) stmt->module = parse_dotted_name();
    expect_keyword("import");
    if (at_op("*")) {
      stmt->names.push_back(Alias{"*", "", advance().begin});
      return finish_stmt(std::move(stmt));
    }
    const bool parens = accept_op("(");
    do {
      if (parens && at_op(")")) break;
      Alias alias;
      const Token& name = expect_identifier();
      alias.position = name.begin;
      alias.name = std::string(name.text);
      if (accept_keyword("as")) alias.asname = std::string(expect_identifier().text);
      stmt->names.push_back(std::move(alias));
    } while (accept_op(","));
    if (parens) expect_op(")");
    return finish_stmt(std::move(stmt));
  }

  ExprPtr parse_assignment_value() {
    if (at_keyword("yield")) return parse_yield();
    return parse_star_expressions(true);
  }

  StmtPtr parse_expression_statement() {
    const Position begin = peek().begin;
    ExprPtr first = parse_assignment_value();
    if (at_op(":")) {
      advance();
      auto stmt = make_stmt(StmtKind::AnnAssign, begin);
      set_context(*first, ExprContext::Store);
      stmt->targets.push_back(std::move(first));
      stmt->extra = parse_expression();
      if (accept_op("=")) stmt->value = parse_assignment_value();
      return finish_stmt(std::move(stmt));
    }
    for (std::string_view op : kAugmentedOps) {
      if (at_op(op)) {
        advance();
        auto stmt = make_stmt(StmtKind::AugAssign, begin);
        stmt->augmented_op = std::string(op);
        set_context(*first, ExprContext::Store);
        stmt->targets.push_back(std::move(first));
        stmt->value = parse_assignment_value();
        return finish_stmt(std::move(stmt));
      }
    }
    if (at_op("=")) {
      auto stmt = make_stmt(StmtKind::Assign, begin);
      std::vector<ExprPtr> chain;
      chain.push_back(std::move(first));
      while (accept_op("=")) chain.push_back(parse_assignment_value());
      stmt->value = std::move(chain.back());
      chain.pop_back();
      for (auto& target : chain) {
        set_context(*target, ExprContext::Store);
        stmt->targets.push_back(std::move(target));
      }
      return finish_stmt(std::move(stmt));
    }
    auto stmt = make_stmt(StmtKind::Expr, begin);
    stmt->value = std::move(first);
    return finish_stmt(std::move(stmt));
  }

  void set_context(Expr& e, ExprContext ctx) {
    switch (e.kind) {
      case ExprKind::Name:
      case ExprKind::Attribute:
      case ExprKind::Subscript:
        e.ctx = ctx;
        return;
      case ExprKind::Starred:
        e.ctx = ctx;
        set_context(*e.children.front(), ctx);
        return;
      case ExprKind::Tuple:
      case ExprKind::List:
        e.ctx = ctx;
        for (auto& child : e.children) set_context(*child, ctx);
        return;
      default:
        throw ParseError("cannot assign to expression", e.begin.line, e.begin.column);
    }
  }

  // ----------------------------------------------------------- expressions

  ExprPtr parse_star_expressions(bool allow_named) {
    const Position begin = peek().begin;
    ExprPtr first = parse_star_expression(allow_named);
    if (!at_op(",")) return first;
    auto tuple = make_expr(ExprKind::Tuple, begin);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression(peek())) break;
      tuple->children.push_back(parse_star_expression(allow_named));
    }
    return finish(std::move(tuple));
  }

  ExprPtr parse_star_expression(bool allow_named) {
    if (at_op("*")) {
      const Position begin = advance().begin;
      auto starred = make_expr(ExprKind::Starred, begin);
      starred->children.push_back(parse_bitwise_or());
      return finish(std::move(starred));
    }
    return allow_named ? parse_named_expression() : parse_expression();
  }

  ExprPtr parse_named_expression() {
    if (at_identifier() && peek(1).is_op(":=")) {
      const Token& name = advance();
      auto target = make_expr(ExprKind::Name, name.begin);
      target->identifier = std::string(name.text);
      target->ctx = ExprContext::Store;
      target = finish(std::move(target));
      advance();
      auto named = make_expr(ExprKind::NamedExpr, name.begin);
      named->children.push_back(std::move(target));
      named->children.push_back(parse_expression());
      return finish(std::move(named));
    }
    return parse_expression();
  }

  ExprPtr parse_expression() {
    if (at_keyword("lambda")) return parse_lambda();
    const Position begin = peek().begin;
    ExprPtr body = parse_disjunction();
    if (at_keyword("if")) {
      advance();
      auto ifexp = make_expr(ExprKind::IfExp, begin);
      ifexp->children.push_back(parse_disjunction());
      expect_keyword("else");
      ifexp->children.push_back(std::move(body));
      ifexp->children.push_back(parse_expression());
      return finish(std::move(ifexp));
    }
    return body;
  }

  ExprPtr parse_lambda() {
    const Position begin = advance().begin;
    auto lambda = make_expr(ExprKind::Lambda, begin);
    lambda->args = parse_parameters(":", /*annotations=*/false);
    expect_op(":");
    lambda->children.push_back(parse_expression());
    return finish(std::move(lambda));
  }

  ExprPtr binary(ExprPtr left, ExprPtr right) {
    auto op = make_expr(ExprKind::Operation, left->begin);
    op->children.push_back(std::move(left));
    op->children.push_back(std::move(right));
    return finish(std::move(op));
  }

  ExprPtr parse_disjunction() {
    ExprPtr left = parse_conjunction();
    while (accept_keyword("or")) left = binary(std::move(left), parse_conjunction());
    return left;
  }

  ExprPtr parse_conjunction() {
    ExprPtr left = parse_inversion();
    while (accept_keyword("and")) left = binary(std::move(left), parse_inversion());
    return left;
  }

  ExprPtr parse_inversion() {
    if (at_keyword("not")) {
      const Position begin = advance().begin;
      auto op = make_expr(ExprKind::Operation, begin);
      op->children.push_back(parse_inversion());
      return finish(std::move(op));
    }
    return parse_comparison();
  }

  bool accept_comparison_operator() {
    const Token& t = peek();
    if (t.kind == TokenKind::Op &&
        (t.text == "<" || t.text == ">" || t.text == "==" || t.text == ">=" || t.text == "<=" || t.text == "!=")) {
      advance();
      return true;
    }
    if (t.is_name("in")) {
      advance();
      return true;
    }
    if (t.is_name("not") && peek(1).is_name("in")) {
      advance();
      advance();
      return true;
    }
    if (t.is_name("is")) {
      advance();
      accept_keyword("not");
      return true;
    }
    return false;
  }

  ExprPtr parse_comparison() {
    ExprPtr left = parse_bitwise_or();
    if (!at_op("<") && !at_op(">") && !at_op("==") && !at_op(">=") && !at_op("<=") && !at_op("!=") &&
        !at_keyword("in") && !at_keyword("is") && !(at_keyword("not") && peek(1).is_name("in"))) {
      return left;
    }
    auto cmp = make_expr(ExprKind::Operation, left->begin);
    cmp->children.push_back(std::move(left));
    while (accept_comparison_operator()) cmp->children.push_back(parse_bitwise_or());
    return finish(std::move(cmp));
  }

  template <typename Next>
  ExprPtr parse_binary_level(std::initializer_list<std::string_view> ops, Next next) {
    ExprPtr left = (this->*next)();
    while (true) {
      bool matched = false;
      for (std::string_view op : ops) {
        if (at_op(op)) {
          advance();
          left = binary(std::move(left), (this->*next)());
          matched = true;
          break;
        }
      }
      if (!matched) return left;
    }
  }

  ExprPtr parse_bitwise_or() { return parse_binary_level({"|"}, &Parser::parse_bitwise_xor); }
  ExprPtr parse_bitwise_xor() { return parse_binary_level({"^"}, &Parser::parse_bitwise_and); }
  ExprPtr parse_bitwise_and() { return parse_binary_level({"&"}, &Parser::parse_shift); }
  ExprPtr parse_shift() { return parse_binary_level({"<<", ">>"}, &Parser::parse_sum); }
  ExprPtr parse_sum() { return parse_binary_level({"+", "-"}, &Parser::parse_term); }
  ExprPtr parse_term() { return parse_binary_level({"*", "/", "//", "%", "@"}, &Parser::parse_factor); }

  ExprPtr parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Position begin = advance().begin;
      auto op = make_expr(ExprKind::Operation, begin);
      op->children.push_back(parse_factor());
      return finish(std::move(op));
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base;
    if (at_keyword("await")) {
      const Position begin = advance().begin;
      auto await = make_expr(ExprKind::Await, begin);
      await->children.push_back(parse_primary());
      base = finish(std::move(await));
    } else {
      base = parse_primary();
    }
    if (accept_op("**")) return binary(std::move(base), parse_factor());
    return base;
  }

  ExprPtr parse_primary() {
    ExprPtr e = parse_atom();
    while (true) {
      if (at_op(".")) {
        advance();
        const Token& name = expect_identifier_or_keyword();
        auto attr = make_expr(ExprKind::Attribute, e->begin);
        attr->identifier = std::string(name.text);
        attr->children.push_back(std::move(e));
        e = finish(std::move(attr));
      } else if (at_op("(")) {
        advance();
        auto call = make_expr(ExprKind::Call, e->begin);
        call->children.push_back(std::move(e));
        parse_call_arguments(call->children);
        expect_op(")");
        e = finish(std::move(call));
      } else if (at_op("[")) {
        advance();
        auto sub = make_expr(ExprKind::Subscript, e->begin);
        sub->children.push_back(std::move(e));
        sub->children.push_back(parse_slices());
        expect_op("]");
        e = finish(std::move(sub));
      } else {
        return e;
      }
    }
  }

  const Token& expect_identifier_or_keyword() {
    if (peek().kind != TokenKind::Name) fail("expected attribute name");
    return advance();
  }

  void parse_call_arguments(std::vector<ExprPtr>& out) {
    const std::size_t first = out.size();
    while (!at_op(")")) {
      const Position begin = peek().begin;
      if (at_op("*")) {
        advance();
        auto starred = make_expr(ExprKind::Starred, begin);
        starred->children.push_back(parse_expression());
        out.push_back(finish(std::move(starred)));
      } else if (at_op("**")) {
        advance();
        auto kw = make_expr(ExprKind::Keyword, begin);
        kw->children.push_back(parse_expression());
        out.push_back(finish(std::move(kw)));
      } else if (at_identifier() && peek(1).is_op("=")) {
        const Token& name = advance();
        advance();
        auto kw = make_expr(ExprKind::Keyword, begin);
        kw->identifier = std::string(name.text);
        kw->children.push_back(parse_expression());
        out.push_back(finish(std::move(kw)));
      } else {
        ExprPtr arg = parse_named_expression();
        if (at_keyword("for") || (at_keyword("async") && peek(1).is_name("for"))) {
          if (out.size() != first) fail("generator expression must be parenthesized");
          auto comp = make_expr(ExprKind::Comprehension, begin);
          comp->children.push_back(std::move(arg));
          parse_generators(*comp);
          out.push_back(finish(std::move(comp)));
        } else {
          out.push_back(std::move(arg));
        }
      }
      if (!accept_op(",")) break;
    }
  }

  ExprPtr parse_slice() {
    const Position begin = peek().begin;
    ExprPtr lower;
    if (!at_op(":")) {
      if (at_op("*")) return parse_star_expression(true);
      lower = parse_named_expression();
      if (!at_op(":")) return lower;
    }
    auto slice = make_expr(ExprKind::Slice, begin);
    if (lower) slice->children.push_back(std::move(lower));
    expect_op(":");
    if (!at_op(":") && !at_op("]") && !at_op(",")) slice->children.push_back(parse_expression());
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) slice->children.push_back(parse_expression());
    }
    return finish(std::move(slice));
  }

  ExprPtr parse_slices() {
    const Position begin = peek().begin;
    ExprPtr first = parse_slice();
    if (!at_op(",")) return first;
    auto tuple = make_expr(ExprKind::Tuple, begin);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      tuple->children.push_back(parse_slice());
    }
    return finish(std::move(tuple));
  }

  void parse_generators(Expr& comp) {
    while (at_keyword("for") || (at_keyword("async") && peek(1).is_name("for"))) {
      accept_keyword("async");
      expect_keyword("for");
      Comprehension gen;
      gen.target = parse_target_list();
      set_context(*gen.target, ExprContext::Store);
      expect_keyword("in");
      gen.iter = parse_disjunction();
      while (accept_keyword("if")) gen.ifs.push_back(parse_disjunction());
      comp.generators.push_back(std::move(gen));
    }
  }

  ExprPtr parse_target_element() {
    if (at_op("*")) {
      const Position begin = advance().begin;
      auto starred = make_expr(ExprKind::Starred, begin);
      starred->children.push_back(parse_bitwise_or());
      return finish(std::move(starred));
    }
    return parse_bitwise_or();
  }

  ExprPtr parse_target_list() {
    const Position begin = peek().begin;
    ExprPtr first = parse_target_element();
    if (!at_op(",")) return first;
    auto tuple = make_expr(ExprKind::Tuple, begin);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_keyword("in") || at_op("=") || at_op(":")) break;
      tuple->children.push_back(parse_target_element());
    }
    return finish(std::move(tuple));
  }

  ExprPtr parse_yield() {
    const Position begin = advance().begin;
    if (accept_keyword("from")) {
      auto y = make_expr(ExprKind::YieldFrom, begin);
      y->children.push_back(parse_expression());
      return finish(std::move(y));
    }
    auto y = make_expr(ExprKind::Yield, begin);
    if (starts_expression(peek())) y->children.push_back(parse_star_expressions(false));
    return finish(std::move(y));
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    const Position begin = t.begin;
    switch (t.kind) {
      case TokenKind::Number: {
        advance();
        return finish(make_expr(ExprKind::Constant, begin));
      }
      case TokenKind::String:
        return parse_strings();
      case TokenKind::Name: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          advance();
          auto c = make_expr(ExprKind::Constant, begin);
          c->identifier = std::string(t.text);
          return finish(std::move(c));
        }
        if (is_keyword(t.text)) fail("invalid syntax");
        advance();
        auto name = make_expr(ExprKind::Name, begin);
        name->identifier = std::string(t.text);
        return finish(std::move(name));
      }
      case TokenKind::Op:
        break;
      default:
        fail("invalid syntax");
    }
    if (t.text == "...") {
      advance();
      return finish(make_expr(ExprKind::Constant, begin));
    }
    if (t.text == "(") return parse_parenthesized();
    if (t.text == "[") return parse_list();
    if (t.text == "{") return parse_brace();
    fail("invalid syntax");
  }

  ExprPtr parse_parenthesized() {
    const Position begin = advance().begin;
    if (accept_op(")")) {
      auto tuple = make_expr(ExprKind::Tuple, begin);
      tuple->parenthesized = true;
      return finish(std::move(tuple));
    }
    if (at_keyword("yield")) {
      ExprPtr y = parse_yield();
      expect_op(")");
      y->parenthesized = true;
      y->begin = begin;
      y->end = prev_end_;
      return y;
    }
    ExprPtr first = parse_star_expression(true);
    if (at_keyword("for") || (at_keyword("async") && peek(1).is_name("for"))) {
      auto comp = make_expr(ExprKind::Comprehension, begin);
      comp->children.push_back(std::move(first));
      parse_generators(*comp);
      expect_op(")");
      comp->parenthesized = true;
      return finish(std::move(comp));
    }
    if (at_op(",")) {
      auto tuple = make_expr(ExprKind::Tuple, begin);
      tuple->children.push_back(std::move(first));
      while (accept_op(",")) {
        if (at_op(")")) break;
        tuple->children.push_back(parse_star_expression(true));
      }
      expect_op(")");
      tuple->parenthesized = true;
      return finish(std::move(tuple));
    }
    expect_op(")");
    first->parenthesized = true;
    first->begin = begin;
    first->end = prev_end_;
    return first;
  }

  ExprPtr parse_list() {
    const Position begin = advance().begin;
    if (accept_op("]")) return finish(make_expr(ExprKind::List, begin));
    ExprPtr first = parse_star_expression(true);
    if (at_keyword("for") || (at_keyword("async") && peek(1).is_name("for"))) {
      auto comp = make_expr(ExprKind::Comprehension, begin);
      comp->children.push_back(std::move(first));
      parse_generators(*comp);
      expect_op("]");
      return finish(std::move(comp));
    }
    auto list = make_expr(ExprKind::List, begin);
    list->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      list->children.push_back(parse_star_expression(true));
    }
    expect_op("]");
    return finish(std::move(list));
  }

  ExprPtr parse_brace() {
    const Position begin = advance().begin;
    if (accept_op("}")) return finish(make_expr(ExprKind::Dict, begin));
    if (at_op("**")) {
      auto dict = make_expr(ExprKind::Dict, begin);
      parse_dict_items(*dict);
      expect_op("}");
      return finish(std::move(dict));
    }
    ExprPtr first = parse_star_expression(true);
    if (accept_op(":")) {
      ExprPtr value = parse_expression();
      if (at_keyword("for") || (at_keyword("async") && peek(1).is_name("for"))) {
        auto comp = make_expr(ExprKind::Comprehension, begin);
        comp->children.push_back(std::move(first));
        comp->children.push_back(std::move(value));
        parse_generators(*comp);
        expect_op("}");
        return finish(std::move(comp));
      }
      auto dict = make_expr(ExprKind::Dict, begin);
      dict->children.push_back(std::move(first));
      dict->children.push_back(std::move(value));
      if (accept_op(",")) parse_dict_items(*dict);
      expect_op("}");
      return finish(std::move(dict));
    }
    if (at_keyword("for") || (at_keyword("async") && peek(1).is_name("for"))) {
      auto comp = make_expr(ExprKind::Comprehension, begin);
      comp->children.push_back(std::move(first));
      parse_generators(*comp);
      expect_op("}");
      return finish(std::move(comp));
    }
    auto set = make_expr(ExprKind::Set, begin);
    set->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("}")) break;
      set->children.push_back(parse_star_expression(true));
    }
    expect_op("}");
    return finish(std::move(set));
  }

  void parse_dict_items(Expr& dict) {
    while (!at_op("}")) {
      if (accept_op("**")) {
        dict.children.push_back(nullptr);
        dict.children.push_back(parse_bitwise_or());
      } else {
        dict.children.push_back(parse_expression());
        expect_op(":");
        dict.children.push_back(parse_expression());
      }
      if (!accept_op(",")) break;
    }
  }

  // --------------------------------------------------------------- strings

  ExprPtr parse_strings() {
    auto str = make_expr(ExprKind::String, peek().begin);
    while (peek().kind == TokenKind::String) {
      const Token& t = advance();
      parse_fstring_fields(t, *str);
    }
    return finish(std::move(str));
  }

  static Position position_within(const Token& t, std::size_t index) {
    Position p = t.begin;
    for (std::size_t i = 0; i < index; ++i) {
      if (t.text[i] == '\n') {
        ++p.line;
        p.column = 0;
      } else {
        ++p.column;
      }
    }
    p.offset = t.begin.offset + index;
    return p;
  }

  void parse_fstring_fields(const Token& t, Expr& out) {
    const std::string_view text = t.text;
    const std::size_t quote = text.find_first_of("'\"");
    bool formatted = false;
    for (std::size_t i = 0; i < quote; ++i) formatted |= (text[i] == 'f' || text[i] == 'F');
    if (!formatted) return;
    const bool triple = text.size() >= quote + 6 && text.substr(quote, 3) == std::string(3, text[quote]);
    const std::size_t body_begin = quote + (triple ? 3 : 1);
    const std::size_t body_end = text.size() - (triple ? 3 : 1);
    std::size_t i = body_begin;
    while (i < body_end) {
      if (text[i] == '{') {
        if (i + 1 < body_end && text[i + 1] == '{') {
          i += 2;
          continue;
        }
        i = parse_fstring_field(t, i, body_end, out);
      } else {
        ++i;
      }
    }
  }

  // `open` indexes a '{' in t.text; returns the index one past the matching '}'.
  std::size_t parse_fstring_field(const Token& t, std::size_t open, std::size_t limit, Expr& out) {
    const std::string_view text = t.text;
    std::size_t i = open + 1;
    int depth = 0;
    while (i < limit) {
      const char c = text[i];
      if (c == '\'' || c == '"') {
        const char q = c;
        ++i;
        while (i < limit && text[i] != q) i += (text[i] == '\\') ? 2 : 1;
        ++i;
        continue;
      }
      if (c == '(' || c == '[' || c == '{') ++depth;
      if ((c == ')' || c == ']' || c == '}') && depth > 0) {
        --depth;
        ++i;
        continue;
      }
      if (depth == 0 && (c == '}' || c == ':' || (c == '!' && (i + 1 >= limit || text[i + 1] != '=')))) break;
      ++i;
    }
    if (i >= limit) throw ParseError("f-string: expecting '}'", t.begin.line, t.begin.column);
    std::size_t expr_end = i;
    while (expr_end > open + 1 && (text[expr_end - 1] == ' ' || text[expr_end - 1] == '\t' || text[expr_end - 1] == '\n')) --expr_end;
    if (expr_end > open + 1 && text[expr_end - 1] == '=' &&
        (expr_end < open + 3 || std::string_view("=!<>").find(text[expr_end - 2]) == std::string_view::npos)) {
      --expr_end;
    }
    const std::string_view expr_text = text.substr(open + 1, expr_end - open - 1);
    LexOptions options;
    options.bracketed = true;
    options.origin = position_within(t, open + 1);
    Parser sub(tokenize(expr_text, options), source_);
    if (sub.peek().kind == TokenKind::EndMarker) {
      throw ParseError("f-string: empty expression not allowed", t.begin.line, t.begin.column);
    }
    out.children.push_back(sub.parse_embedded_expression());

    if (text[i] == '!') {
      while (i < limit && text[i] != ':' && text[i] != '}') ++i;
    }
    if (i < limit && text[i] == ':') {
      ++i;
      while (i < limit && text[i] != '}') {
        if (text[i] == '{') {
          i = parse_fstring_field(t, i, limit, out);
        } else {
          ++i;
        }
      }
    }
    if (i >= limit || text[i] != '}') throw ParseError("f-string: expecting '}'", t.begin.line, t.begin.column);
    return i + 1;
  }

  // -------------------------------------------------------------- patterns

  ExprPtr capture(const Token& name) {
    auto e = make_expr(ExprKind::Name, name.begin);
    e->identifier = std::string(name.text);
    e->ctx = ExprContext::Store;
    e->end = name.end;
    return e;
  }

  ExprPtr parse_patterns() {
    const Position begin = peek().begin;
    ExprPtr first = parse_as_pattern();
    if (!at_op(",")) return first;
    auto seq = make_expr(ExprKind::Pattern, begin);
    seq->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op(":") || at_keyword("if")) break;
      seq->children.push_back(parse_as_pattern());
    }
    return finish(std::move(seq));
  }

  ExprPtr parse_as_pattern() {
    const Position begin = peek().begin;
    ExprPtr pattern = parse_or_pattern();
    if (accept_keyword("as")) {
      auto as = make_expr(ExprKind::Pattern, begin);
      as->children.push_back(std::move(pattern));
      as->children.push_back(capture(expect_identifier()));
      return finish(std::move(as));
    }
    return pattern;
  }

  ExprPtr parse_or_pattern() {
    const Position begin = peek().begin;
    ExprPtr first = parse_closed_pattern();
    if (!at_op("|")) return first;
    auto alt = make_expr(ExprKind::Pattern, begin);
    alt->children.push_back(std::move(first));
    while (accept_op("|")) alt->children.push_back(parse_closed_pattern());
    return finish(std::move(alt));
  }

  ExprPtr parse_closed_pattern() {
    const Token& t = peek();
    const Position begin = t.begin;
    if (t.is_op("*")) {
      advance();
      const Token& name = expect_identifier();
      auto star = make_expr(ExprKind::Pattern, begin);
      if (name.text != "_") star->children.push_back(capture(name));
      return finish(std::move(star));
    }
    if (t.kind == TokenKind::Number || t.kind == TokenKind::String || t.is_op("-") || t.is_name("None") ||
        t.is_name("True") || t.is_name("False")) {
      return parse_sum();
    }
    if (t.is_op("(") || t.is_op("[")) {
      const std::string_view close = t.is_op("(") ? ")" : "]";
      advance();
      auto seq = make_expr(ExprKind::Pattern, begin);
      while (!at_op(close)) {
        seq->children.push_back(parse_as_pattern());
        if (!accept_op(",")) break;
      }
      expect_op(close);
      return finish(std::move(seq));
    }
    if (t.is_op("{")) {
      advance();
      auto mapping = make_expr(ExprKind::Pattern, begin);
      while (!at_op("}")) {
        if (accept_op("**")) {
          mapping->children.push_back(capture(expect_identifier()));
        } else {
          mapping->children.push_back(parse_sum());
          expect_op(":");
          mapping->children.push_back(parse_as_pattern());
        }
        if (!accept_op(",")) break;
      }
      expect_op("}");
      return finish(std::move(mapping));
    }
    if (at_identifier()) {
      const Token& name = advance();
      if (!at_op(".") && !at_op("(")) {
        if (name.text == "_") return finish(make_expr(ExprKind::Pattern, begin));
        return capture(name);
      }
      auto value = make_expr(ExprKind::Name, name.begin);
      value->identifier = std::string(name.text);
      value = finish(std::move(value));
      while (accept_op(".")) {
        const Token& attr_name = expect_identifier();
        auto attr = make_expr(ExprKind::Attribute, begin);
        attr->identifier = std::string(attr_name.text);
        attr->children.push_back(std::move(value));
        value = finish(std::move(attr));
      }
      if (!accept_op("(")) return value;
      auto cls = make_expr(ExprKind::Pattern, begin);
      cls->children.push_back(std::move(value));
      while (!at_op(")")) {
        if (at_identifier() && peek(1).is_op("=")) {
          advance();
          advance();
        }
        cls->children.push_back(parse_as_pattern());
        if (!accept_op(",")) break;
      }
      expect_op(")");
      return finish(std::move(cls));
    }
    fail("invalid pattern");
  }

  std::vector<Token> tokens_;
  std::string_view source_;
  std::size_t index_ = 0;
  std::size_t prev_end_ = 0;
};

}  // namespace

Module parse_module(std::string_view source) {
  Parser parser(tokenize(source), source);
  return parser.parse_module();
}

bool parses(std::string_view source) noexcept {
  try {
    parse_module(source);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace snipexec::python
