#include "snipexec/prompts.hpp"

#include <set>
#include <sstream>

#include "snipexec/errors.hpp"

namespace snipexec {

const std::string_view kResponseSpecification =
    "Respond strictly with JSON. The JSON should be compatible with the TypeScript type \"Response\":\n"
    "\n"
    "```ts\n"
    "interface Response {\n"
    "  // Python import statements, one string per import\n"
    "  imports: string[];\n"
    "\n"
    "  // Python code to initialize undefined variables, one string per variable\n"
    "  initialization: string[];\n"
    "}\n"
    "```";

namespace {

constexpr std::string_view kStep1Request =
    "Provide self-contained and concrete Python values to initialize the undefined variables in the code snippet.";
constexpr std::string_view kStep2Problem =
    "When trying to execute the code snippet with the provided imports and initialization, the following error "
    "happens:";
constexpr std::string_view kStep2Task =
    "Provide a fixed version of the imports and initialization to solve the error and make the code snippet "
    "executable.";
constexpr std::string_view kStep3Problem =
    "When trying to execute the code snippet with the provided imports and initialization, the lines commented "
    "with \"uncovered\" are not executed.";
constexpr std::string_view kStep3Task =
    "Provide a modified version of the imports and initialization to execute one of the uncovered paths in the "
    "code snippet.";
constexpr std::string_view kUncoveredMark = " # uncovered";

std::string without_final_newline(std::string_view text) {
  std::string out(text);
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string block(std::string_view label, const std::vector<std::string>& lines) {
  std::string out = "# begin " + std::string(label) + "\n";
  for (const std::string& line : lines) out += line + "\n";
  return out + "# end " + std::string(label);
}

std::string block(std::string_view label, std::string_view body) {
  return "# begin " + std::string(label) + "\n" + without_final_newline(body) + "\n# end " + std::string(label);
}

std::string join_blocks(std::initializer_list<std::string> parts) {
  std::string out;
  for (const std::string& part : parts) {
    if (!out.empty()) out += "\n\n";
    out += part;
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

}  // namespace

Conversation gen_prompt1(const Snippet& snippet, const UndefinedRefs& refs) {
  const std::string text = join_blocks({std::string(kStep1Request), block("code snippet", snippet.source),
                                        block("undefined variables", refs.variables),
                                        block("undefined attributes and methods", refs.members),
                                        std::string(kResponseSpecification)});
  return Conversation{{Message{Role::User, text}}};
}

Conversation gen_prompt2(const Conversation& history, const Snippet& snippet, const ExecutionOutcome& outcome) {
  if (!outcome.exception) throw ContractViolation("error guidance needs an outcome with an exception");
  const ExceptionInfo& e = *outcome.exception;
  std::vector<std::string> error;
  if (e.snippet_line) {
    const auto lines = split_lines(snippet.source);
    const int line = *e.snippet_line;
    if (line < 1 || line > static_cast<int>(lines.size())) {
      throw ContractViolation("error line " + std::to_string(line) + " outside the snippet");
    }
    error.push_back("Execution error at line " + std::to_string(line) + ":");
    error.push_back(lines[static_cast<std::size_t>(line - 1)]);
  } else {
    error.push_back("Execution error in the imports and initialization:");
  }
  error.push_back(e.message.empty() ? e.type_name : e.type_name + ": " + e.message);
  Conversation out = history;
  out.messages.push_back(Message{Role::User, join_blocks({std::string(kStep2Problem), block("error message", error),
                                                          std::string(kStep2Task),
                                                          std::string(kResponseSpecification)})});
  return out;
}

Conversation gen_prompt3(std::string_view annotated_snippet) {
  const std::string text = join_blocks({std::string(kStep3Problem), block("code snippet", annotated_snippet),
                                        std::string(kStep3Task), std::string(kResponseSpecification)});
  return Conversation{{Message{Role::User, text}}};
}

std::string annotate_uncovered(const Snippet& snippet, const CoverageSet& covered) {
  coverage_ratio(covered, snippet);  // validates membership
  std::set<int> marked;
  for (const StatementRef& ref : snippet.statement_index) {
    if (!covered.contains(ref.probe_id)) marked.insert(ref.line);
  }
  std::string out;
  int line = 1;
  const std::string& src = snippet.source;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '\n') {
      if (marked.count(line) != 0) out += kUncoveredMark;
      ++line;
    }
    out += src[i];
  }
  if (!src.empty() && src.back() != '\n' && marked.count(line) != 0) out += kUncoveredMark;
  return out;
}

GeneratorResponse parse_response(std::string_view raw) {
  std::string text = trim(raw);
  if (text.rfind("```", 0) == 0) {
    const std::size_t first_newline = text.find('\n');
    if (first_newline == std::string::npos || text.size() < first_newline + 4 ||
        text.compare(text.size() - 3, 3, "```") != 0) {
      throw ResponseParseError("unterminated code fence");
    }
    const std::string tag = text.substr(3, first_newline - 3);
    if (!tag.empty() && tag != "json") throw ResponseParseError("unexpected fence language '" + tag + "'");
    text = text.substr(first_newline + 1, text.size() - 3 - (first_newline + 1));
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ResponseParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.size() != 2 || !j.contains("imports") || !j.contains("initialization")) {
    throw ResponseParseError("expected an object with exactly the keys imports and initialization");
  }
  GeneratorResponse response;
  for (const auto& [key, target] : {std::pair<const char*, std::vector<std::string>*>{"imports", &response.imports},
                                    {"initialization", &response.initialization}}) {
    const Json& value = j.at(key);
    if (!value.is_array()) throw ResponseParseError(std::string(key) + " must be an array");
    for (const Json& entry : value) {
      if (!entry.is_string()) throw ResponseParseError(std::string(key) + " must contain only strings");
      target->push_back(entry.get<std::string>());
    }
  }
  return response;
}

std::string serialize(const GeneratorResponse& response) {
  return Json{{"imports", response.imports}, {"initialization", response.initialization}}.dump();
}

std::optional<Step> prompt_step(const Message& message) {
  if (message.role != Role::User) return std::nullopt;
  const std::string_view text = message.text;
  if (text.substr(0, kStep1Request.size()) == kStep1Request) return Step::Undefinedness;
  if (text.substr(0, kStep2Problem.size()) == kStep2Problem) return Step::Error;
  if (text.substr(0, kStep3Problem.size()) == kStep3Problem) return Step::Coverage;
  return std::nullopt;
}

std::optional<std::string> extract_snippet(const Conversation& conversation) {
  constexpr std::string_view open = "# begin code snippet\n";
  constexpr std::string_view close = "\n# end code snippet";
  for (auto it = conversation.messages.rbegin(); it != conversation.messages.rend(); ++it) {
    const std::string& text = it->text;
    const std::size_t begin = text.find(open);
    if (begin == std::string::npos) continue;
    const std::size_t body = begin + open.size();
    const std::size_t end = text.find(close, body);
    if (end == std::string::npos) continue;
    std::string out;
    for (const std::string& line : split_lines(std::string_view(text).substr(body, end - body))) {
      std::string_view kept = line;
      if (kept.size() >= kUncoveredMark.size() &&
          kept.substr(kept.size() - kUncoveredMark.size()) == kUncoveredMark) {
        kept.remove_suffix(kUncoveredMark.size());
      }
      out.append(kept).push_back('\n');
    }
    return out;
  }
  return std::nullopt;
}

const char* to_string(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "?";
}

std::string render(const Conversation& conversation) {
  std::ostringstream out;
  for (const Message& m : conversation.messages) out << "=== " << to_string(m.role) << " ===\n" << m.text << "\n";
  return out.str();
}

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::System, "system"}, {Role::User, "user"}, {Role::Assistant, "assistant"}})

void to_json(Json& j, const Message& v) { j = Json{{"role", v.role}, {"content", v.text}}; }

void from_json(const Json& j, Message& v) {
  j.at("role").get_to(v.role);
  j.at("content").get_to(v.text);
}

void to_json(Json& j, const Conversation& v) { j = v.messages; }
void from_json(const Json& j, Conversation& v) { j.get_to(v.messages); }

}  // namespace snipexec
