#include <catch2/catch_amalgamated.hpp>

#include <nl2sql/lexer.hpp>

using namespace nl2sql;

TEST_CASE("tokenize covers every non-space character with exact spans") {
  std::string sql = "SELECT name FROM stores WHERE city = 'Van' LIMIT 5";
  std::vector<SqlToken> toks = tokenize(sql);
  REQUIRE(toks.size() == 10);
  CHECK(toks[0].kind == TokenKind::keyword);
  CHECK(toks[0].text == "SELECT");
  CHECK(toks[1].kind == TokenKind::identifier);
  CHECK(toks[1].text == "name");
  CHECK(toks[6].kind == TokenKind::op);
  CHECK(toks[6].text == "=");
  CHECK(toks[7].kind == TokenKind::string_literal);
  CHECK(toks[7].text == "'Van'");
  CHECK(toks[9].kind == TokenKind::number_literal);
  CHECK(toks[9].text == "5");
  for (const SqlToken& t : toks) {
    CHECK(t.end > t.begin);
    CHECK(sql.substr(t.begin, t.end - t.begin) == t.text);
  }
}

TEST_CASE("keywords are recognized case-insensitively") {
  std::vector<SqlToken> toks = tokenize("select From wHeRe");
  for (const SqlToken& t : toks) CHECK(t.kind == TokenKind::keyword);
  CHECK(toks[0].text == "select");  // original spelling kept
  CHECK(is_keyword("group"));
  CHECK(is_keyword("BETWEEN"));
  CHECK_FALSE(is_keyword("stores"));
}

TEST_CASE("aggregate names are ordinary identifiers, not keywords") {
  for (const char* name : {"count", "sum", "avg", "min", "max"}) {
    CHECK_FALSE(is_keyword(name));
    std::vector<SqlToken> toks = tokenize(name);
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].kind == TokenKind::identifier);
  }
}

TEST_CASE("quoted identifiers keep their quotes in the token text") {
  std::vector<SqlToken> toks = tokenize("SELECT \"order\" FROM \"Group\"");
  REQUIRE(toks.size() == 4);
  CHECK(toks[1].kind == TokenKind::quoted_identifier);
  CHECK(toks[1].text == "\"order\"");
  CHECK(toks[3].kind == TokenKind::quoted_identifier);
  CHECK(unquote_identifier(toks[1].text) == "order");
  CHECK(unquote_identifier("plain") == "plain");
}

TEST_CASE("string literals support doubled-quote escapes") {
  std::vector<SqlToken> toks = tokenize("'Van''s'");
  REQUIRE(toks.size() == 1);
  CHECK(toks[0].kind == TokenKind::string_literal);
  CHECK(toks[0].text == "'Van''s'");
}

TEST_CASE("number literal forms") {
  for (const char* text : {"0", "42", "3.5", "1.5e2", "2E-3", "7."}) {
    std::vector<SqlToken> toks = tokenize(text);
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].kind == TokenKind::number_literal);
    CHECK(toks[0].text == text);
  }
}

TEST_CASE("operators split correctly") {
  std::vector<SqlToken> toks = tokenize("a<=b<>c!=d>=e");
  std::vector<std::string> ops;
  for (const SqlToken& t : toks)
    if (t.kind == TokenKind::op) ops.push_back(t.text);
  CHECK(ops == std::vector<std::string>{"<=", "<>", "!=", ">="});
}

TEST_CASE("lex errors carry a byte offset") {
  CHECK_THROWS_AS(tokenize("SELECT 'unterminated"), LexError);
  try {
    tokenize("SELECT $bad");
  } catch (const LexError& e) {
    CHECK(e.offset() == 7);
  }
}
