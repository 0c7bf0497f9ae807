#include "doctest.h"

#include <random>

#include "snipexec/errors.hpp"
#include "snipexec/model.hpp"
#include "support/running_example.hpp"

using namespace snipexec;

namespace {

CoverageSet cov(std::initializer_list<int> ids) { return CoverageSet{std::set<int>(ids)}; }

}  // namespace

TEST_CASE("running example has ten statement units") {
  const Snippet s = make_snippet("fig1a", kRunningExample);
  REQUIRE(s.total_statements() == 10);
  std::vector<int> lines;
  for (const auto& ref : s.statement_index) lines.push_back(ref.line);
  CHECK(lines == std::vector<int>{1, 2, 3, 4, 5, 6, 8, 10, 11, 12});
  CHECK(s.line_count() == 12);
  for (int i = 0; i < 10; ++i) CHECK(s.statement_index[static_cast<std::size_t>(i)].probe_id == i + 1);
}

TEST_CASE("coverage ratio") {
  const Snippet s = make_snippet("fig1a", kRunningExample);
  CHECK(coverage_ratio(cov({}), s) == 0.0);
  CHECK(coverage_ratio(cov({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), s) == 1.0);
  CHECK(coverage_ratio(cov({1, 2, 3}), s) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK_THROWS_AS(coverage_ratio(cov({11}), s), ContractViolation);
  CHECK_THROWS_AS(coverage_ratio(cov({0}), s), ContractViolation);
}

TEST_CASE("union monotonicity") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    CoverageSet a, b;
    for (int p = 1; p <= 20; ++p) {
      if (rng() % 2) a.fired.insert(p);
      if (rng() % 3 == 0) b.fired.insert(p);
    }
    CoverageSet u = a;
    u.merge(b);
    CHECK(coverage_ratio(u, 20) >= std::max(coverage_ratio(a, 20), coverage_ratio(b, 20)));
  }
}

TEST_CASE("snippets must parse and contain a statement") {
  CHECK_THROWS_AS(make_snippet("bad", "x = = 1\n"), AnalysisError);
  CHECK_THROWS_AS(make_snippet("empty", "# only a comment\n"), AnalysisError);
}

TEST_CASE("prefix tree enforces levels") {
  PrefixTree tree("s");
  Prefix a{"a", {}, {"x = 1"}, Step::Undefinedness, std::nullopt, PrefixStatus::PostProcessed};
  tree.add(TreeNode{a, std::nullopt, "", ""});
  Prefix b{"b", {}, {}, Step::Error, std::string("a"), PrefixStatus::Fresh};
  tree.add(TreeNode{b, std::nullopt, "", ""});
  Prefix c{"c", {}, {}, Step::Coverage, std::string("b"), PrefixStatus::Fresh};
  tree.add(TreeNode{c, std::nullopt, "", ""});
  CHECK_THROWS_AS(tree.add(TreeNode{a, std::nullopt, "", ""}), ContractViolation);
  Prefix orphan{"d", {}, {}, Step::Error, std::nullopt, PrefixStatus::Fresh};
  CHECK_THROWS_AS(tree.add(TreeNode{orphan, std::nullopt, "", ""}), ContractViolation);
  Prefix wrong{"e", {}, {}, Step::Error, std::string("b"), PrefixStatus::Fresh};
  CHECK_THROWS_AS(tree.add(TreeNode{wrong, std::nullopt, "", ""}), ContractViolation);
  CHECK(tree.children(std::string("a")) == std::vector<std::string>{"b"});
  CHECK(tree.count(Step::Coverage) == 1);
}

TEST_CASE("serialization round trips") {
  const Snippet s = make_snippet("fig1a", kRunningExample);
  CHECK(Json(s).get<Snippet>() == s);

  Prefix p{"p1", {"import os"}, {"x = 1", "def f():\n    return 2"}, Step::Error, std::string("p0"),
           PrefixStatus::PostProcessed};
  CHECK(Json(p).get<Prefix>() == p);
  CHECK(p.render() == "import os\nx = 1\ndef f():\n    return 2");

  ExecutionOutcome o{cov({1, 3}), ExceptionInfo{"TypeError", "bad\nthing", 4}, false, 0.25};
  CHECK(Json(o).get<ExecutionOutcome>() == o);
  o.exception->snippet_line.reset();
  CHECK(Json(o).get<ExecutionOutcome>() == o);

  PrefixTree tree("fig1a");
  Prefix root = p;
  root.id = "p0";
  root.origin_step = Step::Undefinedness;
  root.parent.reset();
  tree.add(TreeNode{root, o, "{}", ""});
  tree.add(TreeNode{p, std::nullopt, "raw", "backend failed"});
  CHECK(Json(tree).get<PrefixTree>() == tree);

  SearchResult r{{"p0"}, std::string("p0"), cov({1, 3}), 2, 2, true, {StepTrace{Step::Error, 1, 2, 0, 1}}};
  CHECK(Json(r).get<SearchResult>() == r);

  RunConfig cfg;
  cfg.seed = 9;
  cfg.env_dir = "/tmp/env";
  CHECK(Json(cfg).get<RunConfig>() == cfg);
}

TEST_CASE("run config bounds") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = RunConfig{};
  cfg.k = -1;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = RunConfig{};
  cfg.prefix_timeout = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = RunConfig{};
  cfg.postprocess_attempts = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
}
