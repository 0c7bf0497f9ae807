#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "snipexec/errors.hpp"
#include "snipexec/harness.hpp"
#include "support/golden_prompts.hpp"
#include "support/running_example.hpp"
#include "support/scripted.hpp"

using namespace snipexec;
namespace fs = std::filesystem;

namespace {

Prefix make_prefix(std::vector<std::string> imports, std::vector<std::string> inits) {
  Prefix p;
  p.id = "t";
  p.imports = std::move(imports);
  p.initializations = std::move(inits);
  return p;
}

// Runs each line of a prefix-only program: lines naming `unknown_name` raise,
// `while True: pass` hangs.
RawOutcome line_interpreter(const std::string& program) {
  RawOutcome raw;
  std::istringstream in(program);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find("while True") != std::string::npos) {
      raw.timed_out = true;
      return raw;
    }
    if (line.find("unknown_name") != std::string::npos) {
      raw.results.terminal = TerminalRecord{"NameError", number, "name 'unknown_name' is not defined"};
      return raw;
    }
  }
  return raw;
}

}  // namespace

TEST_CASE("base64 matches the reference vectors") {
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : vectors) {
    CHECK(base64_encode(plain) == encoded);
    CHECK(base64_decode(encoded) == plain);
  }
  const std::string binary("a\nb\tc\0\xff", 8);
  CHECK(base64_decode(base64_encode(binary)) == binary);
  CHECK_THROWS_AS(base64_decode("abc"), HarnessError);
  CHECK_THROWS_AS(base64_decode("a!c="), HarnessError);
}

TEST_CASE("results file records") {
  CHECK(parse_results("") == ResultsFile{});
  const ResultsFile r = parse_results("P 1\nP 2\nP 1\nE ValueError\t7\tYmFkCnZhbHVl\n");
  CHECK(r.probes == std::vector<int>{1, 2, 1});
  REQUIRE(r.terminal.has_value());
  CHECK(*r.terminal == TerminalRecord{"ValueError", 7, "bad\nvalue"});
  CHECK(parse_results(format_results(r)) == r);
  // A record cut off by a dying writer is ignored.
  CHECK(parse_results("P 1\nP 2").probes == std::vector<int>{1});
  for (const char* bad : {"X 1\n", "P\n", "P one\n", "E T\t1\n", "E T\tx\tAA==\n", "E ValueError\t1\tAA==\nP 1\n",
                          "E \t1\tAA==\n"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_results(bad), HarnessError);
  }
}

TEST_CASE("post-processing removes the offending entry") {
  SimulatedBackend backend(line_interpreter);
  RunConfig cfg;
  const PostProcessTrace trace = post_process_traced(make_prefix({}, {"x = 1", "y = unknown_name", "z = 2"}), backend, cfg);
  CHECK(trace.prefix.status == PrefixStatus::PostProcessed);
  CHECK(trace.prefix.initializations == std::vector<std::string>{"x = 1", "z = 2"});
  CHECK(trace.removed == std::vector<std::string>{"y = unknown_name"});
  CHECK(trace.executions == 2);
}

TEST_CASE("post-processing keeps clean prefixes and maps multi-line entries") {
  SimulatedBackend backend(line_interpreter);
  RunConfig cfg;
  const Prefix clean = make_prefix({"import os"}, {"x = 1"});
  const Prefix out = post_process(clean, backend, cfg);
  CHECK(out.status == PrefixStatus::PostProcessed);
  CHECK(out.imports == clean.imports);
  CHECK(out.initializations == clean.initializations);

  const Prefix multi = make_prefix({"import os"}, {"def f():\n    return 1", "class A:\n    v = unknown_name", "w = 3"});
  const PostProcessTrace trace = post_process_traced(multi, backend, cfg);
  CHECK(trace.prefix.initializations == std::vector<std::string>{"def f():\n    return 1", "w = 3"});
  CHECK(trace.prefix.imports == std::vector<std::string>{"import os"});
}

TEST_CASE("post-processing discards on timeout, unattributable errors and exhausted attempts") {
  SimulatedBackend backend(line_interpreter);
  RunConfig cfg;
  CHECK(post_process(make_prefix({}, {"while True: pass"}), backend, cfg).status == PrefixStatus::Discarded);

  SimulatedBackend unattributed([](const std::string&) {
    RawOutcome raw;
    raw.results.terminal = TerminalRecord{"SystemError", 0, "?"};
    return raw;
  });
  const PostProcessTrace t = post_process_traced(make_prefix({}, {"x = 1"}), unattributed, cfg);
  CHECK(t.prefix.status == PrefixStatus::Discarded);
  CHECK(t.executions == 1);
  CHECK(t.last_error->type_name == "SystemError");

  cfg.postprocess_attempts = 3;
  std::vector<std::string> lines(5, "a = unknown_name");
  const PostProcessTrace exhausted = post_process_traced(make_prefix({}, lines), backend, cfg);
  CHECK(exhausted.prefix.status == PrefixStatus::Discarded);
  CHECK(exhausted.executions == 3);
  CHECK(exhausted.prefix.initializations.size() == 2);

  // Length strictly decreases on every error round.
  cfg.postprocess_attempts = 10;
  const PostProcessTrace all = post_process_traced(make_prefix({}, lines), backend, cfg);
  CHECK(all.prefix.status == PrefixStatus::PostProcessed);
  CHECK(all.prefix.initializations.empty());
  CHECK(all.executions == 6);
}

TEST_CASE("execute_with_snippet maps probes and error lines") {
  const Snippet s = make_snippet("running-example", kRunningExample);
  SimulatedBackend backend(scripted::running_example_script());
  RunConfig cfg;
  Prefix fixed = running_example::step2_fixed();
  CHECK_THROWS_AS(execute_with_snippet(fixed, s, backend, cfg), ContractViolation);
  fixed.status = PrefixStatus::PostProcessed;
  const ExecutionOutcome ok = execute_with_snippet(fixed, s, backend, cfg);
  CHECK_FALSE(ok.exception.has_value());
  CHECK(coverage_ratio(ok.coverage, s) == doctest::Approx(0.6));

  Prefix bad = running_example::step1_type_error();
  bad.status = PrefixStatus::PostProcessed;
  const ExecutionOutcome err = execute_with_snippet(bad, s, backend, cfg);
  REQUIRE(err.exception.has_value());
  CHECK(err.exception->type_name == "TypeError");
  CHECK(err.exception->snippet_line == 2);
  CHECK(err.coverage == CoverageSet{{1}});
}

TEST_CASE("outcome mapping attributes prelude errors to the prefix") {
  const Snippet s = make_snippet("s", "x = 1\n");
  Prefix p = make_prefix({}, {"a = 1", "b = 2"});
  const Program program = compose(p, instrument(s));
  RawOutcome raw;
  raw.results.terminal = TerminalRecord{"E", 2, "m"};
  CHECK_FALSE(to_outcome(raw, program, s).exception->snippet_line.has_value());
  raw.results.terminal->line = program.prelude_lines + 1;
  CHECK(to_outcome(raw, program, s).exception->snippet_line == 1);
  raw.results.probes = {2};
  CHECK_THROWS_AS(to_outcome(raw, program, s), HarnessError);
  raw.results = {};
  raw.term_signal = 11;
  CHECK(to_outcome(raw, program, s).exception->type_name == "Crash");
}

TEST_CASE("dependency plans") {
  const AliasTable& aliases = AliasTable::bundled();
  CHECK(aliases.size() > 20);
  DependencyPlan plan = plan_dependencies(make_prefix({"import pandas as pd", "import numpy as np"}, {}), "");
  CHECK(plan.package_names == std::set<std::string>{"pandas", "numpy"});
  CHECK(plan.to_install == plan.package_names);

  plan = plan_dependencies(make_prefix({"import os", "from collections import OrderedDict", "import os.path"}, {}), "");
  CHECK(plan.import_names == std::set<std::string>{"os", "collections"});
  CHECK(plan.to_install.empty());

  CHECK(plan_dependencies(make_prefix({"import cv2"}, {}), "").package_names == std::set<std::string>{"opencv-python"});
  CHECK(plan_dependencies(make_prefix({"from sklearn.model_selection import train_test_split"}, {}), "")
            .package_names == std::set<std::string>{"scikit-learn"});
  CHECK(plan_dependencies(make_prefix({"from google.protobuf import message"}, {}), "").package_names ==
        std::set<std::string>{"protobuf"});
  // Unparsable and relative imports are left to post-processing.
  plan = plan_dependencies(make_prefix({"import (", "from . import sibling", "import yaml, requests"}, {}), "");
  CHECK(plan.package_names == std::set<std::string>{"PyYAML", "requests"});
}

TEST_CASE("dependency plans subtract the shared environment") {
  TempDir env("snipexec-env");
  const fs::path site = fs::path(env.path()) / "lib" / "python3.10" / "site-packages";
  fs::create_directories(site / "numpy");
  fs::create_directories(site / "PyYAML-6.0.dist-info");
  fs::create_directories(site / "yaml");
  std::ofstream(site / "six.py") << "";
  const std::set<std::string> installed = installed_packages(env.path());
  CHECK(installed.count("numpy") == 1);
  CHECK(installed.count("pyyaml") == 1);
  CHECK(installed.count("six") == 1);
  const DependencyPlan plan =
      plan_dependencies(make_prefix({"import numpy as np", "import yaml", "import six", "import pandas"}, {}), env.path());
  CHECK(plan.already_installed == std::set<std::string>{"numpy", "PyYAML", "six"});
  CHECK(plan.to_install == std::set<std::string>{"pandas"});
}

TEST_CASE("alias table loading") {
  TempDir dir("snipexec-alias");
  const std::string path = dir.path() + "/aliases.tsv";
  std::ofstream(path) << "# comment\n\nfoo\tfoo-pkg  # trailing\nbar.baz\tbarbaz\n";
  const AliasTable table = AliasTable::load(path);
  CHECK(table.package_for("foo") == "foo-pkg");
  CHECK(table.package_for("foo.sub") == "foo-pkg");
  CHECK(table.package_for("bar.baz.q") == "barbaz");
  CHECK(table.package_for("bar.other") == "bar");
  std::ofstream(path) << "broken line\n";
  CHECK_THROWS_AS(AliasTable::load(path), ContractViolation);
  CHECK_THROWS_AS(AliasTable::load(dir.path() + "/missing.tsv"), ContractViolation);
  CHECK(normalize_package("Flask__Cors.x") == "flask-cors-x");
}

TEST_CASE("installer attempts each package once across plans and threads") {
  std::mutex m;
  std::vector<std::vector<std::string>> calls;
  Installer installer("/nonexistent-env", [&](const std::vector<std::string>& argv) {
    std::lock_guard lock(m);
    calls.push_back(argv);
    return argv.back() == "no-such-package" ? 1 : 0;
  });
  DependencyPlan empty;
  CHECK(installer.install(empty) == InstallReport{});
  CHECK(calls.empty());

  DependencyPlan plan;
  plan.to_install = {"pandas", "no-such-package"};
  const InstallReport first = installer.install(plan);
  CHECK(first.installed == std::vector<std::string>{"pandas"});
  CHECK(first.failed == std::vector<std::string>{"no-such-package"});
  std::vector<std::thread> workers;
  for (int i = 0; i < 8; ++i) workers.emplace_back([&] { installer.install(plan); });
  for (auto& w : workers) w.join();
  const InstallReport again = installer.install(plan);
  CHECK(again.cached.size() == 2);
  CHECK(calls.size() == 2);
  CHECK(calls[0][1] == "-m");
  CHECK(calls[0][2] == "pip");
  CHECK(calls[0][0] == "/nonexistent-env/bin/python");
}

TEST_CASE("harness evaluation pipeline") {
  const Snippet s = make_snippet("running-example", kRunningExample);
  SimulatedBackend backend(scripted::running_example_script());
  RunConfig cfg;
  cfg.install_deps = true;
  int installs = 0;
  Installer installer("/nonexistent-env", [&](const std::vector<std::string>&) {
    ++installs;
    return 0;
  });
  Harness harness(backend, cfg, &installer);
  const Evaluation e = harness.evaluate(running_example::step3_exit(), s);
  REQUIRE(e.outcome.has_value());
  CHECK(e.outcome->coverage == CoverageSet{{1, 9, 10}});
  CHECK(installs == 0);  // sys is standard library
  const Evaluation unknown = harness.evaluate(make_prefix({}, {"zzz = 1"}), s);
  CHECK_FALSE(unknown.outcome.has_value());
  CHECK(unknown.failure == "unscripted program");
}

TEST_CASE("memoized evaluation reuses outcomes but keeps node identity") {
  const Snippet s = make_snippet("running-example", kRunningExample);
  SimulatedBackend backend(scripted::running_example_script());
  RunConfig cfg;
  cfg.install_deps = false;
  Harness harness(backend, cfg);
  harness.set_memoize(true);
  Prefix first = running_example::step3_exit();
  const Evaluation a = harness.evaluate(first, s);
  const int runs = backend.executions();
  Prefix again = first;
  again.id = "9.9";
  again.parent = "9";
  again.origin_step = Step::Error;
  const Evaluation b = harness.evaluate(again, s);
  CHECK(backend.executions() == runs);
  CHECK(harness.reused() == 1);
  CHECK(b.outcome == a.outcome);
  CHECK(b.prefix.id == "9.9");
  CHECK(b.prefix.parent == std::optional<std::string>("9"));
  CHECK(b.prefix.origin_step == Step::Error);

  // Another snippet never shares an entry, and failures are retried.
  const Snippet other = make_snippet("other", "x = 1\n");
  CHECK(harness.evaluate(first, other).failure == "unscripted program");
  CHECK(harness.evaluate(first, other).failure == "unscripted program");
  CHECK(harness.reused() == 1);

  Harness plain(backend, cfg);
  plain.evaluate(first, s);
  plain.evaluate(first, s);
  CHECK(plain.reused() == 0);
}

TEST_CASE("process runner captures, truncates, filters and kills") {
  ProcessSpec spec;
  spec.env = filtered_environment({"SNIPEXEC_SECRET"});
  spec.argv = {"sh", "-c", "echo out; echo err >&2; exit 3"};
  ProcessResult r = run_process(spec);
  CHECK(r.exit_code == 3);
  CHECK(r.out == "out\n");
  CHECK(r.err == "err\n");

  spec.argv = {"sh", "-c", "head -c 200000 /dev/zero"};
  spec.capture_limit = 1000;
  CHECK(run_process(spec).out.size() == 1000);

  setenv("SNIPEXEC_SECRET_TOKEN", "x", 1);
  spec.env = filtered_environment({"snipexec_secret"});
  spec.argv = {"sh", "-c", "echo ${SNIPEXEC_SECRET_TOKEN:-absent}"};
  CHECK(run_process(spec).out == "absent\n");
  unsetenv("SNIPEXEC_SECRET_TOKEN");

  // The whole group dies on timeout, including background children.
  TempDir dir("snipexec-kill");
  const std::string marker = dir.path() + "/late";
  spec.argv = {"sh", "-c", "(sleep 1; touch " + marker + ") & sleep 30"};
  spec.timeout = std::chrono::milliseconds(200);
  const auto start = std::chrono::steady_clock::now();
  r = run_process(spec);
  CHECK(r.timed_out);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
  std::this_thread::sleep_for(std::chrono::milliseconds(1300));
  CHECK_FALSE(fs::exists(marker));

  spec.argv = {"definitely-not-a-command-xyz"};
  spec.timeout.reset();
  CHECK_THROWS_AS(run_process(spec), HarnessError);
}
