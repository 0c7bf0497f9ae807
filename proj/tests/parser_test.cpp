#include "doctest.h"

#include "snipexec/python/parser.hpp"

using namespace snipexec::python;

namespace {

int count_statements(const Module& m) {
  int n = 0;
  walk_statements(m.body, [&](const Stmt&) { ++n; });
  return n;
}

}  // namespace

TEST_CASE("parser accepts common statement forms") {
  const char* ok[] = {
      "x = 1\n",
      "a, *b = c\n",
      "x: int = 3\n",
      "y += f(a, *b, k=1, **kw)\n",
      "import os.path as p, sys\nfrom . import (a, b,)\nfrom ..x import *\n",
      "if a:\n    pass\nelif b: c = 1\nelse:\n    d\n",
      "for i, j in zip(a, b):\n    continue\nelse:\n    pass\n",
      "while x < 3 and not y: x += 1\n",
      "try:\n    a\nexcept (A, B) as e:\n    raise X from e\nexcept:\n    pass\nelse:\n    b\nfinally:\n    c\n",
      "with open(f) as h, g() as (a, b):\n    pass\n",
      "with (open(a) as b, open(c) as d):\n    pass\n",
      "@dec(1)\nclass C(Base, metaclass=M):\n    def f(self, a, /, b=2, *args, c, d: int = 3, **kw) -> int:\n        return a\n",
      "async def f():\n    await x\n    async for a in b: pass\n    async with c as d: pass\n",
      "f = lambda x, *y, z=1, **w: x if y else z\n",
      "v = [i for i in range(3) if i for j in k]\n",
      "d = {k: v for k, v in items}\ns = {1, 2}\ne = {}\ng = (x for x in y)\n",
      "s = f'{a!r:>{width}} {b=} {{lit}}'\n",
      "s = 'a' 'b' f\"{c['k']}\"\n",
      "x = a[1:2, ::3, ...]\n",
      "if (n := len(a)) > 10: pass\n",
      "match p:\n    case [1, *rest] if rest:\n        pass\n    case Point(x=0, y=yy) | {'k': v, **kw}:\n        pass\n    case _:\n        pass\n",
      "match = 3\nmatch(x)\n",
      "def g():\n    yield\n    x = yield 1, 2\n    yield from h\n",
      "global a, b\ndel a[0], b.c\nassert x, 'msg'\n",
      "x = 1; y = 2;\n",
      "x = (1 +\n     2)\ny = \\\n  3\n",
      "s = '''multi\nline''' + r'\\d'\n",
      "print(*a, sep='')\nf(x for x in y)\n",
      "class A: pass\n",
      "x = -1 ** 2 // 3 @ m | 4 ^ 5 & 6 << 7\n",
      "a = b is not c not in d\n",
  };
  for (const char* src : ok) {
    CAPTURE(src);
    CHECK_NOTHROW(parse_module(src));
  }
}

TEST_CASE("parser rejects invalid syntax") {
  const char* bad[] = {
      "x = \n", "if x\n    pass\n", "def f(:\n", "  x = 1\n", "x = (1\n", "1 = x\n",
      "try:\n    pass\n", "s = 'abc\n", "for x in y:\npass\n", "f'{'\n",
  };
  for (const char* src : bad) {
    CAPTURE(src);
    CHECK_FALSE(parses(src));
  }
}

TEST_CASE("parser records statement geometry") {
  const std::string src =
      "try:\n"
      "    register = get_register_func(self.user_type)\n"
      "    if register is not None:\n"
      "        self.email = register(self.name, self.alias)\n"
      "    else:\n"
      "        result = -2\n"
      "except SystemExit:\n"
      "    result = 1\n";
  const Module m = parse_module(src);
  REQUIRE(m.body.size() == 1);
  const Stmt& t = *m.body[0];
  CHECK(t.kind == StmtKind::Try);
  REQUIRE(t.clauses.size() == 2);
  CHECK(t.clauses[1].kind == ClauseKind::Except);
  CHECK(src[t.clauses[0].header_newline] == '\n');
  CHECK(t.clauses[0].header_newline == 4);
  const Stmt& assign = *t.clauses[0].body.body[0];
  CHECK(assign.begin.line == 2);
  CHECK(src.substr(assign.begin.offset, assign.end - assign.begin.offset) ==
        "register = get_register_func(self.user_type)");
  CHECK(src[assign.line_end] == '\n');
  CHECK(count_statements(m) == 6);
  CHECK(t.line_end == src.size() - 1);
}

TEST_CASE("f-string fields carry absolute positions") {
  const std::string src = "x = 1\ns = f'ab{name}'\n";
  const Module m = parse_module(src);
  const Expr& str = *m.body[1]->value;
  REQUIRE(str.kind == ExprKind::String);
  REQUIRE(str.children.size() == 1);
  const Expr& name = *str.children[0];
  CHECK(name.identifier == "name");
  CHECK(name.begin.line == 2);
  CHECK(name.begin.column == 9);
  CHECK(src.substr(name.begin.offset, 4) == "name");
}

TEST_CASE("inline suites and unparenthesized return tuples") {
  const Module m = parse_module("def f(): return 1, 2\n");
  const Stmt& def = *m.body[0];
  REQUIRE(def.clauses[0].body.inline_suite);
  const Stmt& ret = *def.clauses[0].body.body[0];
  CHECK(ret.value->kind == ExprKind::Tuple);
  CHECK_FALSE(ret.value->parenthesized);
}
