#include <doctest.h>

#include <chrono>

#include "snipexec/errors.hpp"
#include "snipexec/search.hpp"
#include "support/random_tree.hpp"
#include "support/running_example.hpp"
#include "support/scripted.hpp"

using namespace snipexec;

namespace {

Candidate cand(std::string id, std::set<int> fired) { return Candidate{std::move(id), CoverageSet{std::move(fired)}}; }

std::vector<std::string> ids(const PrefixSelection& sel) {
  std::vector<std::string> out;
  for (const auto& m : sel.members) out.push_back(m.id);
  return out;
}

RunConfig offline_config() {
  RunConfig cfg;
  cfg.install_deps = false;
  return cfg;
}

}  // namespace

TEST_CASE("update_prefixes examples") {
  PrefixSelection sel = update_prefixes({}, {cand("c", {1, 2})});
  CHECK(ids(sel) == std::vector<std::string>{"c"});
  CHECK(sel.best == "c");

  sel = update_prefixes({}, {cand("p", {1, 2, 3})});
  CHECK(update_prefixes(sel, {cand("q", {2, 3})}) == sel);

  sel = update_prefixes({}, {cand("a", {1, 2})});
  sel = update_prefixes(sel, {cand("b", {3})});
  CHECK(ids(sel) == std::vector<std::string>{"a", "b"});
  CHECK(sel.best == "a");
  sel = update_prefixes(sel, {cand("c", {1, 2, 3})});
  CHECK(ids(sel) == std::vector<std::string>{"a", "b", "c"});
  CHECK(sel.best == "c");
  CHECK(sel.cumulative() == CoverageSet{{1, 2, 3}});

  // Ties keep the earlier best.
  sel = update_prefixes({}, {cand("x", {1}), cand("y", {2})});
  CHECK(sel.best == "x");
}

TEST_CASE("cumulative_cov examples") {
  CHECK(cumulative_cov({}, 10) == 0.0);
  CHECK(cumulative_cov({cand("a", {1, 2, 3, 4, 5}), cand("b", {6, 7, 8, 9, 10})}, 10) == 1.0);
  CHECK(cumulative_cov({cand("a", {1, 2}), cand("b", {2, 3})}, 4) == 0.75);
  CHECK_THROWS_AS(cumulative_cov({cand("a", {5})}, 4), ContractViolation);
}

TEST_CASE("update_prefixes matches the brute-force oracle") {
  for (unsigned seed = 0; seed < 200; ++seed) {
    const auto violations = oracle::check_selection(seed);
    for (const auto& v : violations) FAIL_CHECK(v);
  }
}

TEST_CASE("search stops after step 1 on full coverage") {
  const Snippet s = make_snippet("s", "x = 1\ny = 2\n");
  scripted::Generator gen([](const GeneratorRequest&, int) {
    return std::vector<std::string>{R"J({"imports":[],"initialization":["a = 1"]})J",
                                    R"J({"imports":[],"initialization":["a = 2"]})J"};
  });
  SimulatedBackend backend([](const std::string& program) {
    RawOutcome raw;
    if (scripted::is_composed(program)) raw.results.probes = {1, 2};
    return raw;
  });
  const RunConfig cfg = offline_config();
  Harness harness(backend, cfg);
  const SearchRun run = snipexec::run(s, cfg, gen, harness);
  CHECK(run.result.queries_used == 1);
  CHECK(run.result.P == std::vector<std::string>{"1"});
  CHECK(run.result.p_best == "1");
  CHECK(run.result.cumulative.size() == 2);
  CHECK(run.tree.size() == 2);
  CHECK(run.result.steps.size() == 1);
  CHECK(run.cumulative_after_step == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("running example reaches full coverage in three steps") {
  const auto start = std::chrono::steady_clock::now();
  const Snippet s = make_snippet("running-example", kRunningExample);
  scripted::Generator gen(scripted::running_example_generator());
  SimulatedBackend backend(scripted::running_example_script());
  const RunConfig cfg = offline_config();
  Harness harness(backend, cfg);
  const SearchRun run = snipexec::run(s, cfg, gen, harness);

  CHECK(run.cumulative_after_step == std::vector<double>{0.3, 0.6, 1.0});
  CHECK(run.result.cumulative.size() == 10);
  CHECK(run.result.queries_used == 4);
  CHECK(run.result.P == std::vector<std::string>{"1", "2.1", "2.1.c1.1", "2.1.c1.2", "2.1.c1.3"});
  CHECK(run.result.p_best == "2.1");
  CHECK(run.tree.size() == 7);
  CHECK(run.tree.find("2.1")->prefix.parent == "2");
  REQUIRE(run.tree.find("2.1.c1.1") != nullptr);
  CHECK(run.tree.find("2.1.c1.1")->prefix.origin_step == Step::Coverage);

  // The step-2 prompt for the type error cites the original call line.
  REQUIRE(gen.requests.size() == 4);
  const Conversation& second = gen.requests[2].conversation;
  REQUIRE(second.messages.size() == 3);
  CHECK(second.messages[1].role == Role::Assistant);
  CHECK(second.messages[2].text.find("Execution error at line 2:\n    register = get_register_func(self.user_type)\n"
                                     "TypeError: dummy_register_func() missing 1 required positional argument: "
                                     "'alias'") != std::string::npos);
  // The coverage prompt marks exactly the branches nobody reached.
  const std::string& third = gen.requests[3].conversation.messages[0].text;
  CHECK(third.find("            result = -1 # uncovered\n") != std::string::npos);
  CHECK(third.find("except SystemExit: # uncovered\n") != std::string::npos);
  CHECK(third.find("result = 0 # uncovered") == std::string::npos);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
}

TEST_CASE("every execution erroring exhausts the budgets") {
  const Snippet s = make_snippet("s", "a = f()\nb = a + 1\nc = b * 2\n");
  RunConfig cfg = offline_config();
  cfg.n = 3;
  cfg.k = 2;
  int token = 0;
  scripted::Generator gen([&](const GeneratorRequest& r, int) {
    std::vector<std::string> out;
    for (int i = 0; i < r.samples; ++i) {
      out.push_back(serialize(GeneratorResponse{{}, {"f = " + std::to_string(token++)}}));
    }
    return out;
  });
  SimulatedBackend backend([](const std::string& program) {
    RawOutcome raw;
    if (!scripted::is_composed(program)) return raw;
    const int value = std::stoi(program.substr(program.find("f = ") + 4));
    if (value % 2 == 0) raw.results.probes = {1};
    raw.results.terminal = TerminalRecord{"TypeError", 3, "'int' object is not callable"};
    return raw;
  });
  Harness harness(backend, cfg);
  const SearchRun run = snipexec::run(s, cfg, gen, harness);
  CHECK(run.tree.size() == static_cast<std::size_t>(cfg.n + cfg.n * cfg.n + cfg.k * cfg.n));
  CHECK(run.result.queries_used == 1 + cfg.n + cfg.k);
  CHECK(run.result.cumulative == CoverageSet{{1}});
  CHECK(run.result.P == std::vector<std::string>{"1"});
  CHECK(run.result.p_best == "1");
  // Coverage prompts attach to the first largest executed level-2 prefix
  // ("1.1" has token 3 and fires nothing; "1.2" has token 4).
  REQUIRE(run.tree.find("1.2.c1.1") != nullptr);
  CHECK(run.tree.find("1.2.c1.1")->prefix.parent == "1.2");
}

TEST_CASE("generator outage yields a degraded partial result") {
  const Snippet s = make_snippet("s", "a = f()\nb = a + 1\n");
  scripted::Generator gen([](const GeneratorRequest&, int call) -> std::vector<std::string> {
    if (call > 0) throw GeneratorUnavailable("down");
    return {R"J({"imports":[],"initialization":["f = lambda: 1"]})J"};
  });
  SimulatedBackend backend([](const std::string& program) {
    RawOutcome raw;
    if (scripted::is_composed(program)) {
      raw.results.probes = {1};
      raw.results.terminal = TerminalRecord{"TypeError", 3, "x"};
    }
    return raw;
  });
  const RunConfig cfg = offline_config();
  Harness harness(backend, cfg);
  const SearchRun run = snipexec::run(s, cfg, gen, harness);
  CHECK(run.result.degraded);
  CHECK(run.result.P == std::vector<std::string>{"1"});
  CHECK(run.cumulative_after_step.size() == 3);
  CHECK(run.result.queries_used == 2);
}

TEST_CASE("unparsable, discarded and failed samples are accounted") {
  const Snippet s = make_snippet("s", "a = q\n");
  RunConfig cfg = offline_config();
  cfg.n = 4;
  cfg.k = 0;
  scripted::Generator gen([](const GeneratorRequest&, int) {
    return std::vector<std::string>{"garbage", R"J({"imports":[],"initialization":["hang()"]})J",
                                    R"J({"imports":[],"initialization":["q = 1"]})J",
                                    R"J({"imports":[],"initialization":["boom = 1"]})J"};
  });
  SimulatedBackend backend([](const std::string& program) {
    RawOutcome raw;
    if (program.find("hang()") != std::string::npos) raw.timed_out = true;
    if (scripted::is_composed(program) && program.find("boom") != std::string::npos) throw HarnessError("broken");
    if (scripted::is_composed(program)) raw.results.probes = {};
    if (scripted::is_composed(program) && program.find("q = 1") != std::string::npos) raw.results.probes = {1};
    return raw;
  });
  Harness harness(backend, cfg);
  const SearchRun run = snipexec::run(s, cfg, gen, harness);
  REQUIRE(run.result.steps.size() == 1);
  const StepTrace& t = run.result.steps[0];
  CHECK(t.unparsable_responses == 1);
  CHECK(t.prefixes_generated == 3);
  CHECK(t.prefixes_discarded == 1);
  CHECK(run.tree.find("2")->prefix.status == PrefixStatus::Discarded);
  CHECK_FALSE(run.tree.find("4")->outcome.has_value());
  CHECK(run.tree.find("4")->failure == "broken");
  CHECK(run.result.P == std::vector<std::string>{"3"});
}

TEST_CASE("search invariants on randomized scripted trees") {
  for (unsigned seed = 0; seed < 150; ++seed) {
    oracle::RandomTree tree(seed);
    for (const auto& v : tree.check()) FAIL_CHECK(v);
  }
}

TEST_CASE("heuristic generator keeps search invariants") {
  const Snippet s = make_snippet("running-example", kRunningExample);
  RunConfig cfg = offline_config();
  cfg.n = 3;
  cfg.k = 3;
  HeuristicGenerator gen(1);
  SimulatedBackend backend([](const std::string& program) {
    RawOutcome raw;
    if (scripted::is_composed(program)) raw.results.probes = {1, static_cast<int>(program.size() % 10) + 1};
    return raw;
  });
  Harness harness(backend, cfg);
  const SearchRun run = snipexec::run(s, cfg, gen, harness);
  CHECK(static_cast<int>(run.tree.size()) <= cfg.n + cfg.n * cfg.n + cfg.k * cfg.n);
  CHECK(run.result.queries_used <= 1 + cfg.n + cfg.k);
  REQUIRE(run.result.p_best.has_value());
}
