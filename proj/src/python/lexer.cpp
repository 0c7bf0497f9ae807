#include "snipexec/python/lexer.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>

namespace snipexec::python {

namespace {

constexpr std::string_view kKeywords[] = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest operators first.
constexpr std::string_view kOperators[] = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<",
    ">>",  "<=",  ">=",  "==",  "!=",  "+=", "-=", "*=", "/=", "%=",
    "&=",  "|=",  "^=",  "@=",  "+",   "-",  "*",  "/",  "%",  "@",
    "&",   "|",   "^",   "~",   "<",   ">",  "(",  ")",  "[",  "]",
    "{",   "}",   ",",   ":",   ";",   ".",  "=",  "!"};

bool is_name_start(unsigned char c) {
  return std::isalpha(c) != 0 || c == '_' || c >= 0x80;
}

bool is_name_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

class Lexer {
 public:
  Lexer(std::string_view src, const LexOptions& options)
      : src_(src),
        line_(options.origin.line),
        line_start_(0),
        column_base_(options.origin.column),
        base_offset_(options.origin.offset),
        bracketed_(options.bracketed) {}

  std::vector<Token> run() {
    bool at_line_start = !bracketed_;
    while (pos_ < src_.size()) {
      if (at_line_start && depth_ == 0) {
        if (!handle_indentation()) continue;
        at_line_start = false;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
        continue;
      }
      if (c == '\\') {
        std::size_t next = pos_ + 1;
        if (next < src_.size() && src_[next] == '\r') ++next;
        if (next < src_.size() && src_[next] == '\n') {
          pos_ = next + 1;
          new_line();
          continue;
        }
        fail("unexpected character after line continuation");
      }
      if (c == '\n' || c == '\r') {
        const std::size_t nl = pos_;
        if (c == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
        ++pos_;
        if (depth_ == 0 && !bracketed_ && line_has_tokens_) {
          emit_at(TokenKind::Newline, nl, nl, nl + 1);
          line_has_tokens_ = false;
        }
        new_line();
        at_line_start = !bracketed_ && depth_ == 0;
        continue;
      }
      lex_token();
    }
    if (!bracketed_) {
      if (line_has_tokens_) emit_at(TokenKind::Newline, src_.size(), src_.size(), src_.size());
      while (indents_.size() > 1) {
        indents_.pop_back();
        emit_at(TokenKind::Dedent, src_.size(), src_.size(), src_.size());
      }
    }
    emit_at(TokenKind::EndMarker, src_.size(), src_.size(), src_.size());
    return std::move(tokens_);
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_, column_of(pos_));
  }

  int column_of(std::size_t p) const {
    return static_cast<int>(p - line_start_) + (line_start_ == 0 ? column_base_ : 0);
  }

  void new_line() {
    ++line_;
    line_start_ = pos_;
  }

  void emit_at(TokenKind kind, std::size_t begin, std::size_t text_begin, std::size_t end) {
    Token t;
    t.kind = kind;
    t.text = src_.substr(text_begin, end - text_begin);
    if (kind == TokenKind::Newline) t.text = "\n";
    t.begin = Position{line_, column_of(begin), base_offset_ + begin};
    t.end = base_offset_ + end;
    t.end_line = line_;
    tokens_.push_back(t);
  }

  // Returns false when the line was blank or comment-only and was consumed.
  bool handle_indentation() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      if (src_[p] == '\t') {
        width = (width / 8 + 1) * 8;
      } else if (src_[p] == ' ') {
        ++width;
      } else {
        width = 0;
      }
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return true;
    }
    const char c = src_[p];
    if (c == '#' || c == '\n' || c == '\r') {
      while (p < src_.size() && src_[p] != '\n' && src_[p] != '\r') ++p;
      if (p < src_.size()) {
        if (src_[p] == '\r' && p + 1 < src_.size() && src_[p + 1] == '\n') ++p;
        ++p;
        pos_ = p;
        new_line();
      } else {
        pos_ = p;
      }
      return false;
    }
    pos_ = p;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit_at(TokenKind::Indent, pos_, line_start_, pos_);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit_at(TokenKind::Dedent, pos_, pos_, pos_);
      }
      if (width != indents_.back()) fail("unindent does not match any outer indentation level");
    }
    return true;
  }

  void lex_token() {
    const std::size_t start = pos_;
    const auto c = static_cast<unsigned char>(src_[pos_]);
    line_has_tokens_ = true;

    if (is_name_start(c)) {
      std::size_t p = pos_;
      while (p < src_.size() && is_name_char(static_cast<unsigned char>(src_[p]))) ++p;
      const std::string_view word = src_.substr(pos_, p - pos_);
      if (p < src_.size() && (src_[p] == '\'' || src_[p] == '"') && is_string_prefix(word)) {
        lex_string(start, p);
        return;
      }
      pos_ = p;
      emit_at(TokenKind::Name, start, start, pos_);
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(start, pos_);
      return;
    }
    if (std::isdigit(c) != 0 ||
        (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) != 0)) {
      lex_number();
      emit_at(TokenKind::Number, start, start, pos_);
      return;
    }
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        pos_ += op.size();
        if (op == "(" || op == "[" || op == "{") ++depth_;
        if ((op == ")" || op == "]" || op == "}") && depth_ > 0) --depth_;
        emit_at(TokenKind::Op, start, start, pos_);
        return;
      }
    }
    fail(std::string("invalid character '") + static_cast<char>(c) + "'");
  }

  static bool is_string_prefix(std::string_view word) {
    if (word.empty() || word.size() > 2) return false;
    std::string lower;
    for (char ch : word) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    static constexpr std::string_view kPrefixes[] = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    return std::find(std::begin(kPrefixes), std::end(kPrefixes), lower) != std::end(kPrefixes);
  }

  void lex_string(std::size_t start, std::size_t quote_pos) {
    const char quote = src_[quote_pos];
    const bool triple = src_.substr(quote_pos, 3) == std::string(3, quote);
    std::size_t p = quote_pos + (triple ? 3 : 1);
    const int start_line = line_;
    const std::size_t start_line_start = line_start_;
    while (true) {
      if (p >= src_.size()) {
        pos_ = p;
        throw ParseError("unterminated string literal", start_line, column_of(start));
      }
      const char ch = src_[p];
      if (ch == '\\') {
        p += 2;
        if (p - 1 < src_.size() && src_[p - 1] == '\n') {
          ++line_;
          line_start_ = p;
        }
        continue;
      }
      if (ch == '\n') {
        if (!triple) throw ParseError("unterminated string literal", start_line, column_of(start));
        ++p;
        ++line_;
        line_start_ = p;
        continue;
      }
      if (ch == quote) {
        if (!triple) {
          ++p;
          break;
        }
        if (src_.substr(p, 3) == std::string(3, quote)) {
          p += 3;
          break;
        }
      }
      ++p;
    }
    pos_ = p;
    Token t;
    t.kind = TokenKind::String;
    t.text = src_.substr(start, p - start);
    t.begin = Position{start_line,
                       static_cast<int>(start - start_line_start) + (start_line_start == 0 ? column_base_ : 0),
                       base_offset_ + start};
    t.end = base_offset_ + p;
    t.end_line = line_;
    tokens_.push_back(t);
  }

  void lex_number() {
    auto digit_or_underscore = [&](auto pred) {
      while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    };
    auto dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size()) {
      const char k = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_ + 1])));
      if (k == 'x' || k == 'o' || k == 'b') {
        pos_ += 2;
        digit_or_underscore([](unsigned char ch) { return std::isxdigit(ch) != 0; });
        return;
      }
    }
    digit_or_underscore(dec);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digit_or_underscore(dec);
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p])) != 0) {
        pos_ = p;
        digit_or_underscore(dec);
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
    if (pos_ < src_.size() && is_name_start(static_cast<unsigned char>(src_[pos_]))) fail("invalid decimal literal");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_;
  std::size_t line_start_;
  int column_base_;
  std::size_t base_offset_;
  bool bracketed_;
  int depth_ = 0;
  bool line_has_tokens_ = false;
  std::vector<int> indents_{0};
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, const LexOptions& options) {
  return Lexer(source, options).run();
}

bool is_keyword(std::string_view word) {
  return std::find(std::begin(kKeywords), std::end(kKeywords), word) != std::end(kKeywords);
}

}  // namespace snipexec::python
