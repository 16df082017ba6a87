#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace codeattn {

enum class TokenType {
  Identifier,
  Separator,
  Operator,
  Keyword,
  Modifier,
  BasicType,
  DecimalInteger,
  StringLiteral,
  CharLiteral,
  FloatLiteral,
  BooleanLiteral,
  NullLiteral,
  Annotation,
  Other,
};

inline constexpr std::size_t kTokenTypeCount = 14;

// The seven syntactic types scored by the probing experiment, in report order.
inline constexpr TokenType kProbeTypes[] = {
    TokenType::BasicType, TokenType::DecimalInteger, TokenType::Identifier, TokenType::Keyword,
    TokenType::Modifier,  TokenType::Operator,       TokenType::Separator,
};

std::string_view to_string(TokenType type);
TokenType token_type_from_string(std::string_view name);

struct Token {
  std::string text;
  TokenType type = TokenType::Other;
  std::size_t line = 1;    // 1-based
  std::size_t column = 1;  // 1-based, in bytes
  std::size_t begin = 0;   // byte offset, inclusive
  std::size_t end = 0;     // byte offset, exclusive

  bool operator==(const Token&) const = default;
};

struct LexOptions {
  // When set, only public/private/protected classify as modifiers; the other
  // modifier words (static, final, ...) fall back to keyword.
  bool access_modifiers_only = false;
};

// Removes //, /* */ and /** */ comments. Comment-like text inside string,
// char and text-block literals is preserved; all other bytes are untouched.
std::string strip_comments(std::string_view source);

// Lexes Java source. Comments are skipped as whitespace.
std::vector<Token> lex(std::string_view source, const LexOptions& options = {});

// One sentence per physical source line holding at least one token.
std::vector<std::vector<std::string>> split_sentences(std::string_view source);

// Groups an already lexed token list by starting line (empty lines dropped).
std::vector<std::vector<Token>> group_by_line(const std::vector<Token>& tokens);

// Classifies a standalone string using the lexer tables; anything that does
// not lex as exactly one token is Other.
TokenType classify_text(std::string_view text, const LexOptions& options = {});

// Reserved-word partition used by the lexer.
const std::vector<std::string_view>& modifier_words();
const std::vector<std::string_view>& basic_type_words();
const std::vector<std::string_view>& keyword_words();

// CSV with columns line,column,type,text; text is always double-quoted.
void write_token_csv(std::ostream& out, const std::vector<Token>& tokens);
std::vector<Token> read_token_csv(std::istream& in);

}  // namespace codeattn
