#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snipexec/model.hpp"

namespace snipexec {

/// Probe function injected into subject programs. `_l_(id)` records a fire and
/// returns None; `_l_(id, value)` records a fire and returns `value`.
inline constexpr std::string_view kProbeName = "_l_";
/// Module the runtime shim registers; composed programs import the probe from it.
inline constexpr std::string_view kRuntimeModule = "snipexec_runtime";

struct InstrumentedSnippet {
  std::string source;
  std::map<int, int> source_map;  // probe id -> original line
  std::vector<int> line_map;      // [i] = original line of instrumented line i + 1
};

/// A prefix composed with an instrumented snippet, ready to execute.
struct Program {
  std::string text;
  int prelude_lines = 0;  // probe import plus rendered prefix
  std::vector<int> line_map;

  /// Maps an interpreter line of `text` to a snippet line; absent inside the prelude.
  std::optional<int> snippet_line(int program_line) const;
};

/// Inserts one probe per statement unit. Throws InstrumentError when the
/// source does not parse or already uses the probe name.
InstrumentedSnippet instrument(const Snippet& snippet);
InstrumentedSnippet instrument(std::string_view source);

/// Probe import, then imports, then initializations, then the instrumented body.
Program compose(const Prefix& prefix, const InstrumentedSnippet& instrumented);

}  // namespace snipexec
