#pragma once

// SQL tokenizer. Produces a positional token stream over a SELECT-dialect
// subset; every non-whitespace character of the input is covered by exactly
// one token span.

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace nl2sql {

enum class TokenKind {
  keyword,
  identifier,
  quoted_identifier,
  string_literal,
  number_literal,
  op,
  punct,
};

struct SqlToken {
  TokenKind kind;
  std::string text;  // exact source slice, quotes included for literals
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last character

  bool operator==(const SqlToken&) const = default;
};

class LexError : public std::runtime_error {
 public:
  LexError(std::string msg, std::size_t offset)
      : std::runtime_error(std::move(msg)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

inline const std::unordered_set<std::string>& sql_keywords() {
  static const std::unordered_set<std::string> kw = {
      "SELECT", "DISTINCT", "FROM",      "AS",     "JOIN",  "ON",
      "WHERE",  "AND",      "OR",        "NOT",    "IN",    "LIKE",
      "BETWEEN", "GROUP",   "BY",        "HAVING", "ORDER", "ASC",
      "DESC",   "LIMIT",    "UNION",     "INTERSECT", "EXCEPT", "ALL",
  };
  return kw;
}

inline std::string ascii_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace detail

// Case-insensitive keyword check against the grammar's reserved words.
inline bool is_keyword(std::string_view word) {
  return detail::sql_keywords().count(detail::ascii_upper(word)) > 0;
}

inline std::vector<SqlToken> tokenize(std::string_view sql) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();

  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    out.push_back(SqlToken{kind, std::string(sql.substr(begin, end - begin)),
                           begin, end});
  };

  while (i < n) {
    char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (detail::is_ident_start(c)) {
      while (i < n && detail::is_ident_char(sql[i])) ++i;
      std::string_view word = sql.substr(start, i - start);
      push(is_keyword(word) ? TokenKind::keyword : TokenKind::identifier,
           start, i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      if (i < n && sql[i] == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      }
      if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
        std::size_t mark = i;
        ++i;
        if (i < n && (sql[i] == '+' || sql[i] == '-')) ++i;
        if (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) {
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i])))
            ++i;
        } else {
          i = mark;  // bare 'e' after digits is the next identifier
        }
      }
      push(TokenKind::number_literal, start, i);
      continue;
    }
    if (c == '\'') {
      ++i;
      while (true) {
        if (i >= n)
          throw LexError("unterminated string literal", start);
        if (sql[i] == '\'') {
          if (i + 1 < n && sql[i + 1] == '\'') {
            i += 2;  // doubled quote stays inside the literal
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
      push(TokenKind::string_literal, start, i);
      continue;
    }
    if (c == '"') {
      ++i;
      while (i < n && sql[i] != '"') ++i;
      if (i >= n) throw LexError("unterminated quoted identifier", start);
      ++i;
      push(TokenKind::quoted_identifier, start, i);
      continue;
    }
    if (c == '<' || c == '>' || c == '!' || c == '=') {
      ++i;
      if (i < n && (sql[i] == '=' || (c == '<' && sql[i] == '>'))) ++i;
      push(TokenKind::op, start, i);
      continue;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/') {
      ++i;
      push(TokenKind::op, start, i);
      continue;
    }
    if (c == '(' || c == ')' || c == ',' || c == '.' || c == ';') {
      ++i;
      push(TokenKind::punct, start, i);
      continue;
    }
    throw LexError(std::string("unexpected character '") + c + "'", start);
  }
  return out;
}

// Inner text of a quoted identifier token ("name" -> name).
inline std::string unquote_identifier(std::string_view token_text) {
  if (token_text.size() >= 2 && token_text.front() == '"' &&
      token_text.back() == '"')
    return std::string(token_text.substr(1, token_text.size() - 2));
  return std::string(token_text);
}

}  // namespace nl2sql
