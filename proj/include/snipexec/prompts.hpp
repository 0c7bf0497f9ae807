#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snipexec/model.hpp"
#include "snipexec/scope_analyzer.hpp"

namespace snipexec {

enum class Role { System, User, Assistant };

struct Message {
  Role role = Role::User;
  std::string text;

  bool operator==(const Message&) const = default;
};

struct Conversation {
  std::vector<Message> messages;

  bool operator==(const Conversation&) const = default;
};

/// Payload every prompt asks the generator for.
struct GeneratorResponse {
  std::vector<std::string> imports;
  std::vector<std::string> initialization;

  bool operator==(const GeneratorResponse&) const = default;
};

/// The JSON response contract appended to every prompt.
extern const std::string_view kResponseSpecification;

/// Undefinedness guidance: a fresh single-message conversation.
Conversation gen_prompt1(const Snippet& snippet, const UndefinedRefs& refs);

/// Error guidance: `history` extended with a user message describing
/// `outcome.exception`. Throws ContractViolation when no exception is present.
Conversation gen_prompt2(const Conversation& history, const Snippet& snippet, const ExecutionOutcome& outcome);

/// Coverage guidance over an annotated snippet: a fresh conversation.
Conversation gen_prompt3(std::string_view annotated_snippet);

/// The snippet with " # uncovered" appended to every line owning an unfired probe.
std::string annotate_uncovered(const Snippet& snippet, const CoverageSet& covered);

/// Strict parse after one whitespace trim and at most one code-fence strip.
/// Throws ResponseParseError on anything else.
GeneratorResponse parse_response(std::string_view raw);
std::string serialize(const GeneratorResponse& response);

/// Guidance step a prompt message was built for, if any.
std::optional<Step> prompt_step(const Message& message);

/// Snippet text of the last message carrying a code-snippet block, with
/// uncovered marks removed.
std::optional<std::string> extract_snippet(const Conversation& conversation);

/// Human-readable transcript, one header line per message.
std::string render(const Conversation& conversation);

const char* to_string(Role role);

void to_json(Json& j, const Message& v);
void from_json(const Json& j, Message& v);
void to_json(Json& j, const Conversation& v);
void from_json(const Json& j, Conversation& v);

}  // namespace snipexec
