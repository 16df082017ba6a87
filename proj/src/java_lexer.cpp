#include "codeattn/java_lexer.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {
namespace {

constexpr std::array<std::string_view, kTokenTypeCount> kTypeNames = {
    "identifier",     "separator",     "operator",    "keyword",         "modifier",
    "basic-type",     "decimal-integer", "string-literal", "char-literal", "float-literal",
    "boolean-literal", "null-literal",  "annotation",  "other",
};

const std::vector<std::string_view> kModifiers = {
    "abstract", "final",        "native",    "private",  "protected", "public",
    "static",   "strictfp",     "synchronized", "transient", "volatile",
};

const std::vector<std::string_view> kAccessModifiers = {"private", "protected", "public"};

const std::vector<std::string_view> kBasicTypes = {
    "boolean", "byte", "char", "double", "float", "int", "long", "short",
};

const std::vector<std::string_view> kKeywords = {
    "assert",     "break",     "case",    "catch",  "class",      "const",   "continue",
    "default",    "do",        "else",    "enum",   "extends",    "finally", "for",
    "goto",       "if",        "implements", "import", "instanceof", "interface", "new",
    "package",    "return",    "super",   "switch", "this",       "throw",   "throws",
    "try",        "void",      "while",
};

// Longest first so a linear scan yields maximal munch.
const std::vector<std::string_view> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=",   "+=",  "-=",  "*=",  "/=",  "&=", "|=", "^=", "%=", "<<", ">>", "=",  ">",  "<",
    "!",    "~",   "?",   ":",   "+",   "-",  "*",  "/",  "&",  "|",  "^",  "%",
};

constexpr std::string_view kSeparators = "(){}[];,.";

bool contains(const std::vector<std::string_view>& words, std::string_view word) {
  return std::find(words.begin(), words.end(), word) != words.end();
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex_digit(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

TokenType classify_word(std::string_view word, const LexOptions& options) {
  if (word == "true" || word == "false") return TokenType::BooleanLiteral;
  if (word == "null") return TokenType::NullLiteral;
  if (contains(kBasicTypes, word)) return TokenType::BasicType;
  if (contains(kModifiers, word)) {
    if (options.access_modifiers_only && !contains(kAccessModifiers, word)) {
      return TokenType::Keyword;
    }
    return TokenType::Modifier;
  }
  if (contains(kKeywords, word)) return TokenType::Keyword;
  return TokenType::Identifier;
}

class Scanner {
 public:
  explicit Scanner(std::string_view source) : src_(source) {}

  bool done() const { return pos_ >= src_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  // Unicode escapes (\uXXXX) are kept verbatim as identifier characters.
  std::size_t unicode_escape_length() const {
    if (peek() != '\\' || peek(1) != 'u') return 0;
    std::size_t i = 1;
    while (peek(i) == 'u') ++i;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!is_hex_digit(peek(i + k))) return 0;
    }
    return i + 4;
  }

  std::size_t identifier_char_length(bool start) const {
    char c = peek();
    if (done()) return 0;
    if (is_ascii_letter(c) || c == '_' || c == '$') return 1;
    if (!start && is_digit(c)) return 1;
    if (static_cast<unsigned char>(c) >= 0x80) return 1;
    return unicode_escape_length();
  }

  // Skips a block comment starting at "/*"; throws if it never closes.
  void skip_block_comment() {
    const std::size_t line = line_, column = column_;
    advance(2);
    while (!done()) {
      if (starts_with("*/")) {
        advance(2);
        return;
      }
      advance();
    }
    throw LexError("unterminated block comment", line, column);
  }

  void skip_line_comment() {
    while (!done() && peek() != '\n') advance();
  }

  // Consumes a quoted literal (string or char) including its delimiters.
  void consume_quoted(char delimiter, const char* what) {
    const std::size_t line = line_, column = column_;
    advance();
    while (true) {
      if (done() || peek() == '\n') throw LexError(std::string("unterminated ") + what, line, column);
      if (peek() == '\\') {
        advance(2);
        continue;
      }
      if (peek() == delimiter) {
        advance();
        return;
      }
      advance();
    }
  }

  void consume_text_block() {
    const std::size_t line = line_, column = column_;
    advance(3);
    while (true) {
      if (done()) throw LexError("unterminated text block", line, column);
      if (peek() == '\\') {
        advance(2);
        continue;
      }
      if (starts_with("\"\"\"")) {
        advance(3);
        return;
      }
      advance();
    }
  }

  void consume_digits(bool hex) {
    while (!done() && ((hex ? is_hex_digit(peek()) : is_digit(peek())) || peek() == '_')) advance();
  }

  void consume_exponent(char e1, char e2) {
    if (peek() == e1 || peek() == e2) {
      std::size_t ahead = 1;
      if (peek(1) == '+' || peek(1) == '-') ahead = 2;
      if (is_digit(peek(ahead))) {
        advance(ahead);
        consume_digits(false);
      }
    }
  }

  // Returns the literal's type; the scanner is left just past it.
  TokenType consume_number() {
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      advance(2);
      consume_digits(true);
      bool is_float = false;
      if (peek() == '.') {
        advance();
        consume_digits(true);
        is_float = true;
      }
      if (peek() == 'p' || peek() == 'P') {
        consume_exponent('p', 'P');
        is_float = true;
      }
      if (is_float) {
        if (std::string_view("fFdD").find(peek()) != std::string_view::npos && !done()) advance();
        return TokenType::FloatLiteral;
      }
      if (peek() == 'l' || peek() == 'L') advance();
      return TokenType::Other;
    }
    if (peek() == '0' && (peek(1) == 'b' || peek(1) == 'B')) {
      advance(2);
      consume_digits(false);
      if (peek() == 'l' || peek() == 'L') advance();
      return TokenType::Other;
    }

    const std::size_t start = pos_;
    bool is_float = false;
    consume_digits(false);
    if (peek() == '.' && peek(1) != '.') {
      const char after = peek(1);
      const bool float_suffix = std::string_view("eEfFdD").find(after) != std::string_view::npos;
      if (is_digit(after)) {
        advance();
        consume_digits(false);
        is_float = true;
      } else if (float_suffix || !(is_ascii_letter(after) || after == '_' || after == '$')) {
        // "1." and "1.e3" are floats; in "1.foo" the '.' is left for the separator rule.
        advance();
        is_float = true;
      }
    }
    if (peek() == 'e' || peek() == 'E') {
      const std::size_t before = pos_;
      consume_exponent('e', 'E');
      if (pos_ != before) is_float = true;
    }
    if (!done() && std::string_view("fFdD").find(peek()) != std::string_view::npos) {
      advance();
      return TokenType::FloatLiteral;
    }
    if (is_float) return TokenType::FloatLiteral;

    const std::string_view digits = src_.substr(start, pos_ - start);
    if (peek() == 'l' || peek() == 'L') advance();
    if (digits.size() > 1 && digits.front() == '0') return TokenType::Other;  // octal
    return TokenType::DecimalInteger;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace

std::string_view to_string(TokenType type) { return kTypeNames[static_cast<std::size_t>(type)]; }

TokenType token_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == name) return static_cast<TokenType>(i);
  }
  throw Error("unknown token type '" + std::string(name) + "'");
}

const std::vector<std::string_view>& modifier_words() { return kModifiers; }
const std::vector<std::string_view>& basic_type_words() { return kBasicTypes; }
const std::vector<std::string_view>& keyword_words() { return kKeywords; }

std::string strip_comments(std::string_view source) {
  Scanner scan(source);
  std::string out;
  out.reserve(source.size());
  std::size_t copied_from = 0;

  auto copy_until_here = [&] {
    out.append(source.substr(copied_from, scan.pos() - copied_from));
  };

  while (!scan.done()) {
    const char c = scan.peek();
    if (c == '/' && scan.peek(1) == '/') {
      copy_until_here();
      scan.skip_line_comment();
      copied_from = scan.pos();
    } else if (c == '/' && scan.peek(1) == '*') {
      copy_until_here();
      scan.skip_block_comment();
      copied_from = scan.pos();
    } else if (c == '"' || c == '\'') {
      // Literal contents are copied verbatim; stop quietly at a broken literal.
      try {
        if (c == '"' && scan.starts_with("\"\"\"")) {
          scan.consume_text_block();
        } else {
          scan.consume_quoted(c, "literal");
        }
      } catch (const LexError&) {
        while (!scan.done() && scan.peek() != '\n') scan.advance();
      }
    } else {
      scan.advance();
    }
  }
  copy_until_here();
  return out;
}

std::vector<Token> lex(std::string_view source, const LexOptions& options) {
  Scanner scan(source);
  std::vector<Token> tokens;

  while (true) {
    while (!scan.done()) {
      if (is_space(scan.peek())) {
        scan.advance();
      } else if (scan.starts_with("//")) {
        scan.skip_line_comment();
      } else if (scan.starts_with("/*")) {
        scan.skip_block_comment();
      } else {
        break;
      }
    }
    if (scan.done()) break;

    Token token;
    token.begin = scan.pos();
    token.line = scan.line();
    token.column = scan.column();
    const char c = scan.peek();

    if (std::size_t n = scan.identifier_char_length(true); n > 0) {
      while ((n = scan.identifier_char_length(false)) > 0) scan.advance(n);
      token.type = TokenType::Identifier;  // refined below
    } else if (is_digit(c) || (c == '.' && is_digit(scan.peek(1)))) {
      token.type = scan.consume_number();
    } else if (c == '"') {
      if (scan.starts_with("\"\"\"")) {
        scan.consume_text_block();
      } else {
        scan.consume_quoted('"', "string literal");
      }
      token.type = TokenType::StringLiteral;
    } else if (c == '\'') {
      scan.consume_quoted('\'', "char literal");
      token.type = TokenType::CharLiteral;
    } else if (c == '@' && !scan.starts_with("@@")) {
      scan.advance();
      std::size_t n = 0;
      while ((n = scan.identifier_char_length(false)) > 0) scan.advance(n);
      if (scan.pos() == token.begin + 1) {
        throw LexError("dangling '@'", token.line, token.column);
      }
      token.type = TokenType::Annotation;
    } else {
      bool matched = false;
      for (std::string_view op : kOperators) {
        if (scan.starts_with(op)) {
          scan.advance(op.size());
          token.type = TokenType::Operator;
          matched = true;
          break;
        }
      }
      if (!matched && kSeparators.find(c) != std::string_view::npos) {
        scan.advance();
        token.type = TokenType::Separator;
        matched = true;
      }
      if (!matched) {
        throw LexError("illegal character '" + std::string(1, c) + "'", token.line, token.column);
      }
    }

    token.end = scan.pos();
    token.text = std::string(source.substr(token.begin, token.end - token.begin));
    if (token.type == TokenType::Identifier) token.type = classify_word(token.text, options);
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<std::vector<Token>> group_by_line(const std::vector<Token>& tokens) {
  std::vector<std::vector<Token>> lines;
  std::size_t current = 0;
  for (const Token& token : tokens) {
    if (lines.empty() || token.line != current) {
      lines.emplace_back();
      current = token.line;
    }
    lines.back().push_back(token);
  }
  return lines;
}

std::vector<std::vector<std::string>> split_sentences(std::string_view source) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& line : group_by_line(lex(source))) {
    std::vector<std::string> texts;
    texts.reserve(line.size());
    for (const Token& token : line) texts.push_back(token.text);
    sentences.push_back(std::move(texts));
  }
  return sentences;
}

TokenType classify_text(std::string_view text, const LexOptions& options) {
  try {
    const auto tokens = lex(text, options);
    if (tokens.size() == 1 && tokens.front().text.size() == text.size()) return tokens.front().type;
  } catch (const LexError&) {
  }
  return TokenType::Other;
}

void write_token_csv(std::ostream& out, const std::vector<Token>& tokens) {
  out << "line,column,type,text\n";
  for (const Token& token : tokens) {
    out << token.line << ',' << token.column << ',' << to_string(token.type) << ','
        << csv::quote(token.text) << '\n';
  }
}

std::vector<Token> read_token_csv(std::istream& in) {
  std::vector<Token> tokens;
  std::vector<std::string> fields;
  bool header = true;
  while (csv::read_record(in, fields)) {
    if (header) {
      header = false;
      if (!fields.empty() && fields.front() == "line") continue;
    }
    if (fields.size() != 4) throw Error("token CSV record must have 4 fields");
    Token token;
    token.line = std::stoul(fields[0]);
    token.column = std::stoul(fields[1]);
    token.type = token_type_from_string(fields[2]);
    token.text = std::move(fields[3]);
    tokens.push_back(std::move(token));
  }
  return tokens;
}

}  // namespace codeattn
