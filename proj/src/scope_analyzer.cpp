#include "snipexec/scope_analyzer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "snipexec/errors.hpp"
#include "snipexec/python/parser.hpp"

namespace snipexec {

namespace {

using namespace python;

constexpr std::string_view kBuiltins[] = {
    "ArithmeticError", "AssertionError", "AttributeError", "BaseException", "BaseExceptionGroup",
    "BlockingIOError", "BrokenPipeError", "BufferError", "BytesWarning", "ChildProcessError",
    "ConnectionAbortedError", "ConnectionError", "ConnectionRefusedError", "ConnectionResetError",
    "DeprecationWarning", "EOFError", "Ellipsis", "EncodingWarning", "EnvironmentError", "Exception",
    "ExceptionGroup", "False", "FileExistsError", "FileNotFoundError", "FloatingPointError", "FutureWarning",
    "GeneratorExit", "IOError", "ImportError", "ImportWarning", "IndentationError", "IndexError",
    "InterruptedError", "IsADirectoryError", "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError",
    "ModuleNotFoundError", "NameError", "None", "NotADirectoryError", "NotImplemented",
    "NotImplementedError", "OSError", "OverflowError", "PendingDeprecationWarning", "PermissionError",
    "ProcessLookupError", "RecursionError", "ReferenceError", "ResourceWarning", "RuntimeError",
    "RuntimeWarning", "StopAsyncIteration", "StopIteration", "SyntaxError", "SyntaxWarning", "SystemError",
    "SystemExit", "TabError", "TimeoutError", "True", "TypeError", "UnboundLocalError",
    "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError", "UnicodeWarning",
    "UserWarning", "ValueError", "Warning", "ZeroDivisionError", "__build_class__", "__debug__", "__doc__",
    "__import__", "__loader__", "__name__", "__package__", "__spec__", "abs", "aiter", "all", "anext",
    "any", "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes", "callable", "chr", "classmethod",
    "compile", "complex", "copyright", "credits", "delattr", "dict", "dir", "divmod", "enumerate", "eval",
    "exec", "exit", "filter", "float", "format", "frozenset", "getattr", "globals", "hasattr", "hash",
    "help", "hex", "id", "input", "int", "isinstance", "issubclass", "iter", "len", "license", "list",
    "locals", "map", "max", "memoryview", "min", "next", "object", "oct", "open", "ord", "pow", "print",
    "property", "quit", "range", "repr", "reversed", "round", "set", "setattr", "slice", "sorted",
    "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip"};

// Present in every module namespace besides the builtins.
constexpr std::string_view kModuleNames[] = {"__builtins__", "__file__", "__annotations__", "__cached__"};
constexpr std::string_view kClassNames[] = {"__module__", "__qualname__"};

enum class ScopeKind { Module, Function, Lambda, Comprehension, Class };

struct Binding {
  long seq;
  std::vector<int> loops;
};

struct Scope {
  ScopeKind kind;
  int parent;
  std::map<std::string, std::vector<Binding>> bindings;
  std::set<std::string> locals;
  std::set<std::string> globals;
  std::set<std::string> nonlocals;

  bool deferred() const { return kind == ScopeKind::Function || kind == ScopeKind::Lambda; }
  bool function_like() const { return kind != ScopeKind::Module && kind != ScopeKind::Class; }
};

struct Read {
  std::string name;
  int scope;
  long seq;
  std::vector<int> loops;
  std::size_t offset;
  bool called = false;
};

struct MemberUse {
  std::size_t read;  // index of the base read
  std::string path;
  std::size_t offset;
  long seq;
  bool store;
  bool called;
};

bool share_loop(const std::vector<int>& a, const std::vector<int>& b) {
  return std::any_of(a.begin(), a.end(), [&](int id) { return std::find(b.begin(), b.end(), id) != b.end(); });
}

template <std::size_t N>
bool contains(const std::string_view (&table)[N], std::string_view name) {
  return std::find(std::begin(table), std::end(table), name) != std::end(table);
}

class Analyzer {
 public:
  UndefinedRefs run(const Module& module) {
    scopes_.push_back(Scope{ScopeKind::Module, -1, {}, {}, {}, {}});
    body(module.body);
    return resolve();
  }

 private:
  // ------------------------------------------------------------ recording

  void bind(const std::string& name) {
    int s = current_;
    if (scopes_[s].globals.count(name) != 0) {
      s = 0;
    } else if (scopes_[s].nonlocals.count(name) != 0) {
      s = enclosing_function(s, name);
    } else {
      scopes_[s].locals.insert(name);
    }
    scopes_[s].bindings[name].push_back(Binding{++seq_, loops_});
  }

  int enclosing_function(int s, const std::string& name) const {
    for (int p = scopes_[s].parent; p > 0; p = scopes_[p].parent) {
      if (scopes_[p].function_like() && scopes_[p].locals.count(name) != 0) return p;
    }
    for (int p = scopes_[s].parent; p > 0; p = scopes_[p].parent) {
      if (scopes_[p].function_like()) return p;
    }
    return 0;
  }

  std::size_t read(const Expr& name) {
    reads_.push_back(Read{name.identifier, current_, ++seq_, loops_, name.begin.offset});
    return reads_.size() - 1;
  }

  int open_scope(ScopeKind kind) {
    scopes_.push_back(Scope{kind, current_, {}, {}, {}, {}});
    const int previous = current_;
    current_ = static_cast<int>(scopes_.size()) - 1;
    if (scopes_[current_].deferred()) {
      saved_loops_.push_back(std::move(loops_));
      loops_.clear();
    }
    return previous;
  }

  void close_scope(int previous) {
    if (scopes_[current_].deferred()) {
      loops_ = std::move(saved_loops_.back());
      saved_loops_.pop_back();
    }
    current_ = previous;
  }

  // ----------------------------------------------------------- statements

  void body(const std::vector<StmtPtr>& stmts) {
    for (const auto& stmt : stmts) statement(*stmt);
  }

  void loop_body(const std::vector<StmtPtr>& stmts, const Expr* target) {
    loops_.push_back(++loop_ids_);
    if (target != nullptr) store(*target);
    body(stmts);
    loops_.pop_back();
  }

  void statement(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Expr:
        expr(s.value.get());
        break;
      case StmtKind::Assign:
        expr(s.value.get());
        for (const auto& target : s.targets) store(*target);
        break;
      case StmtKind::AugAssign: {
        expr(s.value.get());
        const Expr& target = *s.targets.front();
        if (target.kind == ExprKind::Name) {
          read(target);
          bind(target.identifier);
        } else {
          store(target);
        }
        break;
      }
      case StmtKind::AnnAssign: {
        expr(s.value.get());
        expr(s.extra.get());
        const Expr& target = *s.targets.front();
        if (s.value) {
          store(target);
        } else if (target.kind == ExprKind::Name) {
          if (scopes_[current_].function_like()) scopes_[current_].locals.insert(target.identifier);
        } else {
          store(target);
        }
        break;
      }
      case StmtKind::Return:
      case StmtKind::Raise:
      case StmtKind::Assert:
        expr(s.value.get());
        expr(s.extra.get());
        break;
      case StmtKind::Delete:
        for (const auto& target : s.targets) deletion(*target);
        break;
      case StmtKind::Global:
        for (const Alias& a : s.names) scopes_[current_].globals.insert(a.name);
        break;
      case StmtKind::Nonlocal:
        for (const Alias& a : s.names) scopes_[current_].nonlocals.insert(a.name);
        break;
      case StmtKind::Import:
        for (const Alias& a : s.names) bind(a.asname.empty() ? a.name.substr(0, a.name.find('.')) : a.asname);
        break;
      case StmtKind::ImportFrom:
        for (const Alias& a : s.names) {
          if (a.name != "*") bind(a.asname.empty() ? a.name : a.asname);
        }
        break;
      case StmtKind::TypeAlias:
        bind(s.name);
        break;
      case StmtKind::Pass:
      case StmtKind::Break:
      case StmtKind::Continue:
        break;
      case StmtKind::If:
        for (const Clause& c : s.clauses) {
          expr(c.test.get());
          body(c.body.body);
        }
        break;
      case StmtKind::While:
        expr(s.clauses[0].test.get());
        loop_body(s.clauses[0].body.body, nullptr);
        if (s.clauses.size() > 1) body(s.clauses[1].body.body);
        break;
      case StmtKind::For:
        expr(s.clauses[0].test.get());
        loop_body(s.clauses[0].body.body, s.clauses[0].target.get());
        if (s.clauses.size() > 1) body(s.clauses[1].body.body);
        break;
      case StmtKind::Try:
        for (const Clause& c : s.clauses) {
          expr(c.test.get());
          if (c.target) store(*c.target);
          body(c.body.body);
        }
        break;
      case StmtKind::With:
        for (const WithItem& item : s.clauses[0].items) {
          expr(item.context.get());
          if (item.target) store(*item.target);
        }
        body(s.clauses[0].body.body);
        break;
      case StmtKind::Match:
        expr(s.value.get());
        for (const Clause& c : s.clauses) {
          pattern(*c.target);
          expr(c.test.get());
          body(c.body.body);
        }
        break;
      case StmtKind::FunctionDef:
        function_def(s);
        break;
      case StmtKind::ClassDef:
        class_def(s);
        break;
    }
  }

  void parameters_outer(const Arguments& args, bool annotations) {
    for (const Parameter& p : args.params) expr(p.default_value.get());
    if (annotations) {
      for (const Parameter& p : args.params) expr(p.annotation.get());
    }
  }

  void function_def(const Stmt& s) {
    for (const auto& d : s.decorators) expr(d.get());
    for (const std::string& t : s.type_params) bind(t);
    for (const auto& b : s.bases) expr(b.get());
    parameters_outer(*s.args, true);
    expr(s.returns.get());
    const int previous = open_scope(ScopeKind::Function);
    for (const Parameter& p : s.args->params) bind(p.name);
    if (in_class_body(previous)) scopes_[current_].bindings["__class__"].push_back(Binding{0, {}});
    body(s.clauses[0].body.body);
    close_scope(previous);
    bind(s.name);
  }

  bool in_class_body(int scope) const {
    for (int p = scope; p >= 0; p = scopes_[p].parent) {
      if (scopes_[p].kind == ScopeKind::Class) return true;
    }
    return false;
  }

  void class_def(const Stmt& s) {
    for (const auto& d : s.decorators) expr(d.get());
    for (const std::string& t : s.type_params) bind(t);
    for (const auto& b : s.bases) expr(b.get());
    const int previous = open_scope(ScopeKind::Class);
    body(s.clauses[0].body.body);
    close_scope(previous);
    bind(s.name);
  }

  void deletion(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Name:
        read(e);
        break;
      case ExprKind::Tuple:
      case ExprKind::List:
        for (const auto& c : e.children) deletion(*c);
        break;
      default:
        expr(&e);
    }
  }

  // Binding targets: names bind, attribute and subscript targets read their parts.
  void store(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Name:
        bind(e.identifier);
        break;
      case ExprKind::Tuple:
      case ExprKind::List:
      case ExprKind::Starred:
        for (const auto& c : e.children) store(*c);
        break;
      case ExprKind::Attribute:
        attribute(e, /*store=*/true, false);
        break;
      default:
        expr(&e);
    }
  }

  void pattern(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Name:
        if (e.ctx == ExprContext::Store) {
          bind(e.identifier);
        } else {
          read(e);
        }
        break;
      case ExprKind::Pattern:
        for (const auto& c : e.children) pattern(*c);
        break;
      default:
        expr(&e);
    }
  }

  // ---------------------------------------------------------- expressions

  void attribute(const Expr& e, bool store, bool called) {
    const Expr& base = *e.children.front();
    if (base.kind == ExprKind::Name) {
      const std::size_t r = read(base);
      members_.push_back(
          MemberUse{r, base.identifier + "." + e.identifier, e.begin.offset, seq_, store, called});
    } else {
      expr(&base);
    }
  }

  void expr(const Expr* e) {
    if (e == nullptr) return;
    switch (e->kind) {
      case ExprKind::Name:
        if (e->ctx == ExprContext::Store) {
          bind(e->identifier);
        } else {
          read(*e);
        }
        return;
      case ExprKind::Attribute:
        attribute(*e, e->ctx == ExprContext::Store, false);
        return;
      case ExprKind::Call: {
        const Expr& callee = *e->children.front();
        if (callee.kind == ExprKind::Name) {
          reads_[read(callee)].called = true;
        } else if (callee.kind == ExprKind::Attribute) {
          attribute(callee, false, true);
        } else {
          expr(&callee);
        }
        for (std::size_t i = 1; i < e->children.size(); ++i) expr(e->children[i].get());
        return;
      }
      case ExprKind::NamedExpr: {
        expr(e->children[1].get());
        const int previous = current_;
        while (scopes_[current_].kind == ScopeKind::Comprehension) current_ = scopes_[current_].parent;
        bind(e->children[0]->identifier);
        current_ = previous;
        return;
      }
      case ExprKind::Lambda: {
        parameters_outer(*e->args, false);
        const int previous = open_scope(ScopeKind::Lambda);
        for (const Parameter& p : e->args->params) bind(p.name);
        expr(e->children.front().get());
        close_scope(previous);
        return;
      }
      case ExprKind::Comprehension:
        comprehension(*e);
        return;
      case ExprKind::IfExp:
        for (const auto& c : e->children) expr(c.get());
        return;
      case ExprKind::Pattern:
        pattern(*e);
        return;
      default:
        for (const auto& c : e->children) expr(c.get());
    }
  }

  void comprehension(const Expr& e) {
    expr(e.generators.front().iter.get());
    const int previous = open_scope(ScopeKind::Comprehension);
    loops_.push_back(++loop_ids_);
    for (std::size_t i = 0; i < e.generators.size(); ++i) {
      const Comprehension& gen = e.generators[i];
      if (i > 0) expr(gen.iter.get());
      store(*gen.target);
      for (const auto& cond : gen.ifs) expr(cond.get());
    }
    for (const auto& c : e.children) expr(c.get());
    loops_.pop_back();
    close_scope(previous);
  }

  // ----------------------------------------------------------- resolution

  bool bound_in(const Scope& scope, const Read& r, bool deferred) const {
    const auto it = scope.bindings.find(r.name);
    if (it == scope.bindings.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [&](const Binding& b) {
      return deferred || b.seq < r.seq || share_loop(b.loops, r.loops);
    });
  }

  int lexical_parent(int s) const {
    int p = scopes_[s].parent;
    while (p > 0 && scopes_[p].kind == ScopeKind::Class) p = scopes_[p].parent;
    return p;
  }

  bool defined(const Read& r) const {
    int s = r.scope;
    bool deferred = false;
    while (true) {
      const Scope& scope = scopes_[s];
      if (scope.globals.count(r.name) != 0) {
        deferred = deferred || scope.deferred();
        s = 0;
        continue;
      }
      if (scope.nonlocals.count(r.name) != 0) {
        deferred = true;
        s = lexical_parent(s);
        continue;
      }
      switch (scope.kind) {
        case ScopeKind::Module:
          return bound_in(scope, r, deferred) || is_builtin(r.name) || contains(kModuleNames, r.name);
        case ScopeKind::Class:
          if (bound_in(scope, r, deferred) || contains(kClassNames, r.name)) return true;
          s = scope.parent;
          break;
        default:
          if (scope.locals.count(r.name) != 0 || scope.bindings.count(r.name) != 0) {
            return bound_in(scope, r, deferred);
          }
          deferred = deferred || scope.deferred();
          s = lexical_parent(s);
      }
    }
  }

  UndefinedRefs resolve() const {
    std::vector<bool> undefined(reads_.size());
    std::vector<std::pair<std::size_t, std::string>> variables;
    std::set<std::string> called_names;
    for (std::size_t i = 0; i < reads_.size(); ++i) {
      undefined[i] = !defined(reads_[i]);
      if (!undefined[i]) continue;
      variables.emplace_back(reads_[i].offset, reads_[i].name);
      if (reads_[i].called) called_names.insert(reads_[i].name);
    }

    std::vector<std::pair<std::size_t, std::string>> members;
    std::set<std::string> called_members;
    for (const MemberUse& m : members_) {
      if (m.store || !undefined[m.read]) continue;
      const bool stored_before = std::any_of(members_.begin(), members_.end(), [&](const MemberUse& o) {
        return o.store && o.path == m.path && o.seq < m.seq;
      });
      if (stored_before) continue;
      members.emplace_back(m.offset, m.path);
      if (m.called) called_members.insert(m.path);
    }

    auto ordered = [](std::vector<std::pair<std::size_t, std::string>> entries) {
      std::stable_sort(entries.begin(), entries.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<std::string> out;
      for (auto& entry : entries) {
        if (std::find(out.begin(), out.end(), entry.second) == out.end()) out.push_back(std::move(entry.second));
      }
      return out;
    };

    UndefinedRefs refs;
    refs.variables = ordered(std::move(variables));
    refs.members = ordered(std::move(members));
    for (const auto& v : refs.variables) {
      if (called_names.count(v) != 0) refs.called.push_back(v);
    }
    for (const auto& m : refs.members) {
      if (called_members.count(m) != 0) refs.called.push_back(m);
    }
    return refs;
  }

  std::vector<Scope> scopes_;
  std::vector<Read> reads_;
  std::vector<MemberUse> members_;
  int current_ = 0;
  long seq_ = 0;
  int loop_ids_ = 0;
  std::vector<int> loops_;
  std::vector<std::vector<int>> saved_loops_;
};

}  // namespace

const std::vector<std::string_view>& builtin_names() {
  static const std::vector<std::string_view> names(std::begin(kBuiltins), std::end(kBuiltins));
  return names;
}

bool is_builtin(std::string_view name) { return contains(kBuiltins, name); }

UndefinedRefs get_undefined_refs(std::string_view source) {
  Module module;
  try {
    module = parse_module(source);
  } catch (const ParseError& e) {
    throw AnalysisError(e.what());
  }
  return Analyzer().run(module);
}

UndefinedRefs get_undefined_refs(const Snippet& snippet) { return get_undefined_refs(snippet.source); }

void to_json(Json& j, const UndefinedRefs& v) {
  j = Json{{"variables", v.variables}, {"members", v.members}, {"called", v.called}};
}

void from_json(const Json& j, UndefinedRefs& v) {
  j.at("variables").get_to(v.variables);
  j.at("members").get_to(v.members);
  j.at("called").get_to(v.called);
}

}  // namespace snipexec
