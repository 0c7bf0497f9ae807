#pragma once

// Generates straight-line snippets and, while emitting them, executes each
// statement on an abstract namespace in which a missing name resolves to a
// recording sentinel. The recorded names are the reference answer for the
// scope analyzer. Statements are chosen so that the equivalent real program,
// run with such a namespace, cannot raise.

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct GeneratedSnippet {
  std::string source;
  std::set<std::string> undefined;  // names whose lookup missed
  std::set<std::string> members;    // base.attr loads on a name's sentinel
};

class StraightLineGenerator {
 public:
  explicit StraightLineGenerator(unsigned seed) : rng_(seed) {}

  GeneratedSnippet next(int statements) {
    env_.clear();
    sentinel_attrs_.clear();
    out_ = GeneratedSnippet{};
    for (int i = 0; i < statements; ++i) statement();
    return out_;
  }

 private:
  enum class Kind { Int, Opaque, Str, List, Obj, Func, Module };

  struct Value {
    Kind kind = Kind::Opaque;
    std::set<std::string> attrs;  // Obj only
    std::string sentinel;         // non-empty: the recording sentinel of that name
  };

  int pick(int n) { return static_cast<int>(rng_() % static_cast<unsigned>(n)); }
  bool chance(int percent) { return pick(100) < percent; }

  static const std::vector<std::string>& pool() {
    static const std::vector<std::string> names{"a", "b", "c", "d", "e", "f", "g", "h"};
    return names;
  }

  std::vector<std::string> names_where(bool (*pred)(const Value*)) const {
    std::vector<std::string> found;
    for (const auto& n : pool()) {
      const auto it = env_.find(n);
      if (pred(it == env_.end() ? nullptr : &it->second)) found.push_back(n);
    }
    return found;
  }

  static bool unbound(const Value* v) { return v == nullptr; }
  static bool numeric(const Value* v) { return v != nullptr && (v->kind == Kind::Int || v->kind == Kind::Opaque); }
  static bool object(const Value* v) { return v != nullptr && v->kind == Kind::Obj && !v->attrs.empty(); }
  static bool bare_object(const Value* v) { return v != nullptr && v->kind == Kind::Obj; }
  static bool callable(const Value* v) { return v != nullptr && v->kind == Kind::Func; }
  static bool sized(const Value* v) { return v != nullptr && (v->kind == Kind::Str || v->kind == Kind::List); }

  std::string choose(const std::vector<std::string>& from) { return from[static_cast<std::size_t>(pick(static_cast<int>(from.size())))]; }

  // Reads `name`; a miss records it and yields its sentinel.
  Value lookup(const std::string& name) {
    const auto it = env_.find(name);
    if (it != env_.end()) return it->second;
    out_.undefined.insert(name);
    Value v;
    v.sentinel = name;
    return v;
  }

  std::string attr() { return std::string(1, "uvw"[pick(3)]); }

  // Attribute load; returns text and sets `kind`.
  std::string attribute_load(Kind& kind) {
    const auto objects = names_where(&object);
    const auto unbound_names = names_where(&unbound);
    const int choice = pick(4);
    if (choice == 0 && !objects.empty()) {
      const std::string base = choose(objects);
      const Value v = lookup(base);
      const std::string a = *std::next(v.attrs.begin(), pick(static_cast<int>(v.attrs.size())));
      kind = Kind::Opaque;
      return base + "." + a;
    }
    if (choice == 1 && env_.count("m") != 0) {
      kind = Kind::Int;
      return std::string("m.") + (chance(50) ? "pi" : "tau");
    }
    if (!unbound_names.empty()) {
      const std::string base = choose(unbound_names);
      const std::string a = attr();
      const Value v = lookup(base);
      if (sentinel_attrs_[v.sentinel].count(a) == 0) out_.members.insert(base + "." + a);
      kind = Kind::Opaque;
      return base + "." + a;
    }
    kind = Kind::Int;
    return std::to_string(pick(9));
  }

  // Numeric atom; `allow_missing_bare` permits a bare missing name.
  std::string atom(Kind& kind, bool allow_missing_bare, int depth) {
    const auto numerics = names_where(&numeric);
    const auto unbound_names = names_where(&unbound);
    const auto functions = names_where(&callable);
    const auto sizes = names_where(&sized);
    switch (pick(depth > 0 ? 6 : 3)) {
      case 0:
        kind = Kind::Int;
        return std::to_string(pick(50));
      case 1:
        if (!numerics.empty()) {
          const std::string n = choose(numerics);
          kind = lookup(n).kind;
          return n;
        }
        [[fallthrough]];
      case 2:
        if (allow_missing_bare && !unbound_names.empty()) {
          const std::string n = choose(unbound_names);
          lookup(n);
          kind = Kind::Opaque;
          return n;
        }
        kind = Kind::Int;
        return std::to_string(pick(50));
      case 3:
        return attribute_load(kind);
      case 4: {
        if (!functions.empty() && chance(60)) {
          const std::string f = choose(functions);
          lookup(f);
          Kind arg;
          const std::string text = f + "(" + expression(arg, true, depth - 1) + ")";
          kind = arg == Kind::Int ? Kind::Int : Kind::Opaque;
          return text;
        }
        if (!unbound_names.empty()) {
          const std::string f = choose(unbound_names);
          lookup(f);
          Kind arg;
          const std::string text = f + "(" + expression(arg, true, depth - 1) + ")";
          kind = Kind::Opaque;
          return text;
        }
        kind = Kind::Int;
        return "1";
      }
      default:
        if (!sizes.empty()) {
          const std::string s = choose(sizes);
          lookup(s);
          kind = Kind::Int;
          return "len(" + s + ")";
        }
        kind = Kind::Int;
        return "2";
    }
  }

  std::string expression(Kind& kind, bool allow_missing_bare, int depth) {
    Kind left;
    std::string text = atom(left, allow_missing_bare, depth);
    kind = left;
    const int terms = pick(3);
    for (int i = 0; i < terms; ++i) {
      Kind right;
      text += " + " + atom(right, true, depth);
      if (right != Kind::Int) kind = Kind::Opaque;
    }
    return text;
  }

  std::string target() { return choose(pool()); }

  void bind(const std::string& name, Kind kind) {
    Value v;
    v.kind = kind;
    env_[name] = v;
  }

  void emit(const std::string& line) { out_.source += line + "\n"; }

  void statement() {
    switch (pick(13)) {
      case 0:
      case 1: {
        Kind k;
        const std::string rhs = expression(k, false, 2);
        const std::string t = target();
        emit(t + " = " + rhs);
        bind(t, k);
        break;
      }
      case 2: {
        std::vector<std::string> candidates = names_where(&numeric);
        for (const auto& n : names_where(&unbound)) candidates.push_back(n);
        const std::string t = choose(candidates);
        const Value before = lookup(t);
        Kind k;
        const std::string rhs = expression(k, true, 1);
        emit(t + " += " + rhs);
        bind(t, before.kind == Kind::Int && before.sentinel.empty() && k == Kind::Int ? Kind::Int : Kind::Opaque);
        break;
      }
      case 3: {
        Kind k;
        std::string args = expression(k, true, 2);
        if (chance(40)) args += ", " + expression(k, true, 1);
        emit("print(" + args + ")");
        break;
      }
      case 4: {
        switch (pick(3)) {
          case 0:
            emit("import math as m");
            bind("m", Kind::Module);
            break;
          case 1:
            emit("from math import pi as " + pool()[0]);
            bind(pool()[0], Kind::Int);
            break;
          default: {
            const std::string t = target();
            emit("from math import tau as " + t);
            bind(t, Kind::Int);
          }
        }
        break;
      }
      case 5: {
        Kind k;
        const std::string rhs = expression(k, true, 1);
        const auto objects = names_where(&bare_object);
        const auto unbound_names = names_where(&unbound);
        const std::string a = attr();
        if (!objects.empty() && chance(50)) {
          const std::string base = choose(objects);
          emit(base + "." + a + " = " + rhs);
          env_[base].attrs.insert(a);
        } else if (!unbound_names.empty()) {
          const std::string base = choose(unbound_names);
          emit(base + "." + a + " = " + rhs);
          lookup(base);
          sentinel_attrs_[base].insert(a);
        } else {
          const std::string t = target();
          emit(t + " = type('O', (), {})()");
          bind(t, Kind::Obj);
        }
        break;
      }
      case 6: {
        const std::string t = target();
        switch (pick(3)) {
          case 0:
            emit(t + " = 'text'");
            bind(t, Kind::Str);
            break;
          case 1:
            emit(t + " = [1, 2]");
            bind(t, Kind::List);
            break;
          default:
            emit(t + " = type('O', (), {})()");
            bind(t, Kind::Obj);
        }
        break;
      }
      case 7: {
        Kind k;
        const std::string rhs = attribute_load(k);
        const std::string t = target();
        emit(t + " = " + rhs);
        bind(t, k);
        break;
      }
      case 8: {
        Kind k;
        const std::string element = expression(k, true, 1);
        const std::string t = target();
        emit(t + " = [x + " + element + " for x in [1, 2, 3]]");
        bind(t, Kind::List);
        break;
      }
      case 9: {
        Kind k;
        const std::string rhs = expression(k, true, 1);
        const std::string t = target();
        emit("print((" + t + " := " + rhs + "))");
        bind(t, k);
        break;
      }
      case 10: {
        Kind k;
        const std::string def = atom(k, true, 0);
        const std::string t = target();
        emit(t + " = lambda p, q=" + def + ": p + q");
        bind(t, Kind::Func);
        break;
      }
      case 11: {
        Kind k;
        const std::string def = atom(k, true, 0);
        const std::string t = target();
        emit("def " + t + "(p, q=" + def + "):");
        emit("    r = p * 2");
        emit("    return r + q");
        bind(t, Kind::Func);
        break;
      }
      default: {
        Kind k;
        const std::string rhs = expression(k, true, 2);
        emit("print(str(" + rhs + "))");
      }
    }
  }

  std::mt19937 rng_;
  std::map<std::string, Value> env_;
  std::map<std::string, std::set<std::string>> sentinel_attrs_;
  GeneratedSnippet out_;
};

}  // namespace oracle
