#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "snipexec/scope_analyzer.hpp"
#include "support/straightline.hpp"

using namespace snipexec;

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// Executes each snippet with a namespace whose missing names resolve to
// recording sentinels and prints the recorded names as JSON.
constexpr const char* kRecorder = R"PY(
import builtins, contextlib, io, json, sys

class Sentinel:
    def __init__(self, name, log):
        object.__setattr__(self, "_name", name)
        object.__setattr__(self, "_log", log)
    def __getattr__(self, attr):
        if self._name is not None:
            self._log["members"].add(self._name + "." + attr)
        return Sentinel(None, self._log)
    def __call__(self, *a, **k):
        return Sentinel(None, self._log)
    def __add__(self, other):
        return Sentinel(None, self._log)
    __radd__ = __mul__ = __rmul__ = __add__

class Namespace(dict):
    def __init__(self, log):
        super().__init__()
        self.log = log
        self.sentinels = {}
    def __missing__(self, key):
        if key in builtins.__dict__:
            raise KeyError(key)
        self.log["undefined"].add(key)
        return self.sentinels.setdefault(key, Sentinel(key, self.log))

results = []
for source in json.load(open(sys.argv[1])):
    log = {"undefined": set(), "members": set()}
    ns = Namespace(log)
    error = None
    try:
        with contextlib.redirect_stdout(io.StringIO()):
            exec(compile(source, "<snippet>", "exec"), ns)
    except BaseException as e:
        error = type(e).__name__ + ": " + str(e)
    results.append({"undefined": sorted(log["undefined"]), "members": sorted(log["members"]), "error": error})
json.dump(results, sys.stdout)
)PY";

bool have_python() { return std::system("python3 -c pass >/dev/null 2>&1") == 0; }

}  // namespace

TEST_CASE("analyzer matches the recording-namespace oracle on generated snippets") {
  oracle::StraightLineGenerator gen(2024);
  for (int i = 0; i < 300; ++i) {
    const oracle::GeneratedSnippet s = gen.next(3 + i % 10);
    const UndefinedRefs refs = get_undefined_refs(s.source);
    CAPTURE(s.source);
    CHECK(as_set(refs.variables) == s.undefined);
    CHECK(as_set(refs.members) == s.members);
    CHECK(refs.variables.size() == s.undefined.size());
  }
}

TEST_CASE("straight-line soundness: a name-resolution error happens iff variables is nonempty") {
  oracle::StraightLineGenerator gen(77);
  for (int i = 0; i < 200; ++i) {
    const oracle::GeneratedSnippet s = gen.next(1 + i % 6);
    CHECK(get_undefined_refs(s.source).variables.empty() == s.undefined.empty());
  }
}

TEST_CASE("generated-snippet oracle agrees with a real interpreter") {
  if (!have_python()) {
    MESSAGE("python3 not available; skipping interpreter cross-check");
    return;
  }
  const auto dir = std::filesystem::temp_directory_path() / "snipexec_oracle_check";
  std::filesystem::create_directories(dir);
  oracle::StraightLineGenerator gen(2024);
  std::vector<oracle::GeneratedSnippet> snippets;
  nlohmann::json sources = nlohmann::json::array();
  for (int i = 0; i < 300; ++i) {
    snippets.push_back(gen.next(3 + i % 10));
    sources.push_back(snippets.back().source);
  }
  std::ofstream(dir / "recorder.py") << kRecorder;
  std::ofstream(dir / "sources.json") << sources.dump();
  const std::string cmd = "python3 " + (dir / "recorder.py").string() + " " + (dir / "sources.json").string();
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof buffer, pipe)) output.append(buffer, n);
  REQUIRE(pclose(pipe) == 0);
  const auto results = nlohmann::json::parse(output);
  REQUIRE(results.size() == snippets.size());
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    CAPTURE(snippets[i].source);
    CHECK(results[i]["error"].is_null());
    CHECK(results[i]["undefined"].get<std::set<std::string>>() == snippets[i].undefined);
    CHECK(results[i]["members"].get<std::set<std::string>>() == snippets[i].members);
  }
  std::filesystem::remove_all(dir);
}
