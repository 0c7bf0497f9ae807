#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace snipexec::python {

/// A location in subject source. Lines are 1-based, columns are 0-based
/// byte offsets within the line, and offset is the absolute byte offset.
struct Position {
  int line = 1;
  int column = 0;
  std::size_t offset = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokenKind kind = TokenKind::EndMarker;
  std::string_view text;
  Position begin;
  std::size_t end = 0;  // one past the last byte
  int end_line = 1;

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool is_op(std::string_view t) const { return is(TokenKind::Op, t); }
  bool is_name(std::string_view t) const { return is(TokenKind::Name, t); }
};

struct LexOptions {
  // Start inside an implicit bracket: no NEWLINE/INDENT/DEDENT tokens are
  // produced. Used for expressions embedded in f-strings.
  bool bracketed = false;
  Position origin;
};

/// Tokenizes Python 3 source. Comments and blank lines produce no tokens.
/// The returned views point into `source`, which must outlive them.
std::vector<Token> tokenize(std::string_view source, const LexOptions& options = {});

bool is_keyword(std::string_view word);

}  // namespace snipexec::python
