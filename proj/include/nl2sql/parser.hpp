#pragma once

// Recursive-descent parser for the SELECT dialect. Besides the tree itself,
// parse_full records where every identifier token landed in the grammar
// (table reference, column reference, qualifier, alias binder) together with
// the FROM-clause scope chain; the repair pass is driven off that record.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nl2sql/ast.hpp"
#include "nl2sql/lexer.hpp"

namespace nl2sql {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::string msg, std::size_t token_index, std::string expected)
      : std::runtime_error(std::move(msg)),
        token_index_(token_index),
        expected_(std::move(expected)) {}
  std::size_t token_index() const { return token_index_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t token_index_;
  std::string expected_;
};

enum class IdentifierRole { table_ref, alias_def, column_ref, qualifier };

struct IdentifierUse {
  std::size_t token;  // index into the token stream
  IdentifierRole role;
  int scope;
  // For column_ref: token index of its qualifier, or npos for bare columns.
  std::size_t qualifier_token = static_cast<std::size_t>(-1);
};

struct ScopeInfo {
  int parent = -1;
  // Token indices of the FROM/JOIN table names bound in this scope.
  std::vector<std::size_t> from_table_tokens;
};

struct ParsedQuery {
  SqlAst ast;
  std::vector<SqlToken> tokens;
  std::vector<IdentifierUse> uses;
  std::vector<ScopeInfo> scopes;
};

namespace detail {

inline bool is_agg_name(std::string_view word, AggFn& out) {
  std::string low = ascii_lower(word);
  if (low == "count") { out = AggFn::count; return true; }
  if (low == "sum") { out = AggFn::sum; return true; }
  if (low == "avg") { out = AggFn::avg; return true; }
  if (low == "min") { out = AggFn::min; return true; }
  if (low == "max") { out = AggFn::max; return true; }
  return false;
}

class Parser {
 public:
  explicit Parser(std::vector<SqlToken> tokens) : toks_(std::move(tokens)) {}

  ParsedQuery run() {
    ParsedQuery result;
    result.ast = query();
    if (at_punct(";")) ++pos_;
    if (pos_ != toks_.size())
      fail("end of input", "trailing input after statement");
    result.tokens = std::move(toks_);
    result.uses = std::move(uses_);
    result.scopes = std::move(scopes_);
    return result;
  }

 private:
  // -- token helpers ---------------------------------------------------

  const SqlToken* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }

  bool at_keyword(std::string_view kw) const {
    const SqlToken* t = peek();
    return t && t->kind == TokenKind::keyword && ascii_upper(t->text) == kw;
  }

  bool at_punct(std::string_view p) const {
    const SqlToken* t = peek();
    return t && t->kind == TokenKind::punct && t->text == p;
  }

  bool at_op(std::string_view o) const {
    const SqlToken* t = peek();
    return t && t->kind == TokenKind::op && t->text == o;
  }

  bool accept_keyword(std::string_view kw) {
    if (!at_keyword(kw)) return false;
    ++pos_;
    return true;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail(std::string(kw), "expected keyword");
  }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail(std::string("'") + std::string(p) + "'",
                           "expected punctuation");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& expected,
                         const std::string& what) const {
    std::string found = pos_ < toks_.size()
                            ? "'" + toks_[pos_].text + "'"
                            : "end of input";
    throw SyntaxError("syntax error at token " + std::to_string(pos_) + ": " +
                          what + ", expected " + expected + ", found " + found,
                      pos_, expected);
  }

  // -- scopes and identifier uses ---------------------------------------

  int open_scope() {
    scopes_.push_back(
        ScopeInfo{scope_stack_.empty() ? -1 : scope_stack_.back(), {}});
    int id = static_cast<int>(scopes_.size()) - 1;
    scope_stack_.push_back(id);
    return id;
  }

  void close_scope() { scope_stack_.pop_back(); }

  void record(std::size_t token, IdentifierRole role,
              std::size_t qualifier_token = static_cast<std::size_t>(-1)) {
    uses_.push_back(
        IdentifierUse{token, role, scope_stack_.back(), qualifier_token});
  }

  // -- grammar ----------------------------------------------------------

  SqlAst query() {
    SqlAst ast;
    ast.head = select_stmt();
    while (at_keyword("UNION") || at_keyword("INTERSECT") ||
           at_keyword("EXCEPT")) {
      SetArm arm;
      if (accept_keyword("UNION"))
        arm.kind = SetOpKind::union_;
      else if (accept_keyword("INTERSECT"))
        arm.kind = SetOpKind::intersect;
      else {
        expect_keyword("EXCEPT");
        arm.kind = SetOpKind::except;
      }
      arm.all = accept_keyword("ALL");
      arm.stmt = select_stmt();
      ast.arms.push_back(std::move(arm));
    }
    return ast;
  }

  SelectStmt select_stmt() {
    expect_keyword("SELECT");
    int scope = open_scope();
    (void)scope;
    SelectStmt s;
    s.distinct = accept_keyword("DISTINCT");
    s.items.push_back(expr_top(/*allow_star=*/true));
    while (at_punct(",")) {
      ++pos_;
      s.items.push_back(expr_top(/*allow_star=*/true));
    }
    if (accept_keyword("FROM")) {
      s.from.push_back(table_ref());
      while (at_punct(",")) {
        ++pos_;
        s.from.push_back(table_ref());
      }
      while (accept_keyword("JOIN")) {
        Join j;
        j.table = table_ref();
        if (accept_keyword("ON")) j.on = condition();
        s.joins.push_back(std::move(j));
      }
    }
    if (accept_keyword("WHERE")) s.where = condition();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      s.group_by.push_back(expr_top(false));
      while (at_punct(",")) {
        ++pos_;
        s.group_by.push_back(expr_top(false));
      }
    }
    if (accept_keyword("HAVING")) s.having = condition();
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      s.order_by.push_back(order_key());
      while (at_punct(",")) {
        ++pos_;
        s.order_by.push_back(order_key());
      }
    }
    if (accept_keyword("LIMIT")) {
      const SqlToken* t = peek();
      if (!t || t->kind != TokenKind::number_literal)
        fail("number", "LIMIT takes a numeric literal");
      s.limit = t->text;
      ++pos_;
    }
    close_scope();
    return s;
  }

  OrderKey order_key() {
    OrderKey k;
    k.expr = expr_top(false);
    if (accept_keyword("DESC"))
      k.desc = true;
    else
      accept_keyword("ASC");
    return k;
  }

  TableRef table_ref() {
    const SqlToken* t = peek();
    if (!t || (t->kind != TokenKind::identifier &&
               t->kind != TokenKind::quoted_identifier))
      fail("table name", "expected a table name");
    TableRef ref;
    ref.quoted = t->kind == TokenKind::quoted_identifier;
    ref.table = ref.quoted ? unquote_identifier(t->text) : t->text;
    record(pos_, IdentifierRole::table_ref);
    scopes_[scope_stack_.back()].from_table_tokens.push_back(pos_);
    ++pos_;
    if (accept_keyword("AS")) {
      const SqlToken* a = peek();
      if (!a || a->kind != TokenKind::identifier)
        fail("alias", "expected an alias after AS");
      ref.alias = a->text;
      record(pos_, IdentifierRole::alias_def);
      ++pos_;
    } else if (const SqlToken* a = peek();
               a && a->kind == TokenKind::identifier) {
      ref.alias = a->text;
      record(pos_, IdentifierRole::alias_def);
      ++pos_;
    }
    return ref;
  }

  // -- conditions --------------------------------------------------------

  Condition condition() {
    Condition first = and_chain();
    if (!at_keyword("OR")) return first;
    Logical node{LogicalOp::or_, {}};
    splice(node, std::move(first));
    while (accept_keyword("OR")) splice(node, and_chain());
    return Condition{std::move(node)};
  }

  Condition and_chain() {
    Condition first = cond_atom();
    if (!at_keyword("AND")) return first;
    Logical node{LogicalOp::and_, {}};
    splice(node, std::move(first));
    while (accept_keyword("AND")) splice(node, cond_atom());
    return Condition{std::move(node)};
  }

  // Same-op children are flattened so the n-ary shape survives a round trip.
  static void splice(Logical& parent, Condition child) {
    if (auto* log = std::get_if<Logical>(&child.node);
        log && log->op == parent.op) {
      for (auto& grand : log->children)
        parent.children.push_back(std::move(grand));
    } else {
      parent.children.push_back(std::move(child));
    }
  }

  Condition cond_atom() {
    // '(' is ambiguous: grouped condition or parenthesized expression
    // starting a predicate. Try the grouped reading, backtrack on failure or
    // when an operator continues the expression after ')'.
    if (at_punct("(")) {
      std::size_t mark = pos_;
      std::size_t uses_mark = uses_.size();
      try {
        ++pos_;
        Condition inner = condition();
        expect_punct(")");
        const SqlToken* t = peek();
        bool continues =
            t && (t->kind == TokenKind::op ||
                  (t->kind == TokenKind::keyword &&
                   (ascii_upper(t->text) == "LIKE" ||
                    ascii_upper(t->text) == "IN" ||
                    ascii_upper(t->text) == "BETWEEN" ||
                    ascii_upper(t->text) == "NOT")));
        if (!continues) return inner;
      } catch (const SyntaxError&) {
      }
      pos_ = mark;
      uses_.resize(uses_mark);
    }
    return predicate();
  }

  Condition predicate() {
    Expr lhs = expr_top(false);
    bool negated = accept_keyword("NOT");
    if (accept_keyword("LIKE")) {
      LikePred p;
      p.negated = negated;
      p.sides.push_back(std::move(lhs));
      p.sides.push_back(expr_top(false));
      return Condition{std::move(p)};
    }
    if (accept_keyword("IN")) {
      InPred p;
      p.negated = negated;
      p.lhs.push_back(std::move(lhs));
      expect_punct("(");
      if (at_keyword("SELECT")) {
        p.subquery.push_back(query());
      } else {
        p.items.push_back(expr_top(false));
        while (at_punct(",")) {
          ++pos_;
          p.items.push_back(expr_top(false));
        }
      }
      expect_punct(")");
      return Condition{std::move(p)};
    }
    if (accept_keyword("BETWEEN")) {
      BetweenPred p;
      p.negated = negated;
      p.parts.push_back(std::move(lhs));
      p.parts.push_back(expr_top(false));
      expect_keyword("AND");
      p.parts.push_back(expr_top(false));
      return Condition{std::move(p)};
    }
    if (negated) fail("LIKE, IN or BETWEEN", "NOT must introduce a predicate");
    const SqlToken* t = peek();
    if (!t || t->kind != TokenKind::op)
      fail("comparison operator", "expected a predicate");
    CmpOp op;
    if (t->text == "=" || t->text == "==")
      op = CmpOp::eq;
    else if (t->text == "!=" || t->text == "<>")
      op = CmpOp::ne;
    else if (t->text == "<")
      op = CmpOp::lt;
    else if (t->text == ">")
      op = CmpOp::gt;
    else if (t->text == "<=")
      op = CmpOp::le;
    else if (t->text == ">=")
      op = CmpOp::ge;
    else
      fail("comparison operator", "expected a predicate");
    ++pos_;
    Comparison cmp;
    cmp.op = op;
    cmp.sides.push_back(std::move(lhs));
    cmp.sides.push_back(expr_top(false));
    return Condition{std::move(cmp)};
  }

  // -- expressions ---------------------------------------------------------

  // A bare `*` is only legal at the top of a select item or aggregate
  // argument; below that, expressions never contain stars.
  Expr expr_top(bool allow_star) {
    if (allow_star && at_op("*")) {
      ++pos_;
      return Expr{ColumnRef{"", "*"}};
    }
    return additive();
  }

  Expr additive() {
    Expr lhs = multiplicative();
    while (at_op("+") || at_op("-")) {
      BinOp op = toks_[pos_].text == "+" ? BinOp::add : BinOp::sub;
      ++pos_;
      Binary bin;
      bin.op = op;
      bin.operands.push_back(std::move(lhs));
      bin.operands.push_back(multiplicative());
      lhs = Expr{std::move(bin)};
    }
    return lhs;
  }

  Expr multiplicative() {
    Expr lhs = primary();
    while (at_op("*") || at_op("/")) {
      BinOp op = toks_[pos_].text == "*" ? BinOp::mul : BinOp::div;
      ++pos_;
      Binary bin;
      bin.op = op;
      bin.operands.push_back(std::move(lhs));
      bin.operands.push_back(primary());
      lhs = Expr{std::move(bin)};
    }
    return lhs;
  }

  Expr primary() {
    const SqlToken* t = peek();
    if (!t) fail("expression", "unexpected end of input");
    if (t->kind == TokenKind::number_literal) {
      ++pos_;
      return Expr{Literal{LitKind::number, t->text}};
    }
    if (t->kind == TokenKind::op && t->text == "-") {
      const SqlToken* next = peek(1);
      if (next && next->kind == TokenKind::number_literal) {
        pos_ += 2;
        return Expr{Literal{LitKind::number, "-" + next->text}};
      }
      fail("number", "expected a numeric literal after unary minus");
    }
    if (t->kind == TokenKind::string_literal) {
      ++pos_;
      return Expr{Literal{LitKind::string, t->text}};
    }
    if (t->kind == TokenKind::punct && t->text == "(") {
      ++pos_;
      if (at_keyword("SELECT")) {
        Subquery sub;
        sub.query.push_back(query());
        expect_punct(")");
        return Expr{std::move(sub)};
      }
      Expr inner = additive();
      expect_punct(")");
      return inner;
    }
    if (t->kind == TokenKind::identifier ||
        t->kind == TokenKind::quoted_identifier) {
      AggFn fn;
      if (t->kind == TokenKind::identifier && is_agg_name(t->text, fn) &&
          peek(1) && peek(1)->kind == TokenKind::punct &&
          peek(1)->text == "(") {
        if (in_aggregate_)
          fail("non-aggregate expression", "aggregates do not nest");
        pos_ += 2;
        AggCall agg;
        agg.fn = fn;
        agg.distinct = accept_keyword("DISTINCT");
        in_aggregate_ = true;
        agg.arg.push_back(expr_top(/*allow_star=*/true));
        in_aggregate_ = false;
        expect_punct(")");
        return Expr{std::move(agg)};
      }
      return Expr{column_ref()};
    }
    fail("expression", "expected an expression");
  }

  ColumnRef column_ref() {
    const SqlToken* t = peek();
    ColumnRef ref;
    bool first_quoted = t->kind == TokenKind::quoted_identifier;
    std::string first =
        first_quoted ? unquote_identifier(t->text) : t->text;
    std::size_t first_tok = pos_;
    ++pos_;
    if (at_punct(".")) {
      ++pos_;
      const SqlToken* c = peek();
      if (c && c->kind == TokenKind::op && c->text == "*") {
        ref.table = std::move(first);
        ref.table_quoted = first_quoted;
        ref.column = "*";
        record(first_tok, IdentifierRole::qualifier);
        ++pos_;
        return ref;
      }
      if (!c || (c->kind != TokenKind::identifier &&
                 c->kind != TokenKind::quoted_identifier))
        fail("column name", "expected a column after '.'");
      ref.table = std::move(first);
      ref.table_quoted = first_quoted;
      ref.column_quoted = c->kind == TokenKind::quoted_identifier;
      ref.column =
          ref.column_quoted ? unquote_identifier(c->text) : c->text;
      record(first_tok, IdentifierRole::qualifier);
      record(pos_, IdentifierRole::column_ref, first_tok);
      ++pos_;
      return ref;
    }
    ref.column = std::move(first);
    ref.column_quoted = first_quoted;
    record(first_tok, IdentifierRole::column_ref);
    return ref;
  }

  std::vector<SqlToken> toks_;
  std::size_t pos_ = 0;
  bool in_aggregate_ = false;
  std::vector<IdentifierUse> uses_;
  std::vector<ScopeInfo> scopes_;
  std::vector<int> scope_stack_;
};

}  // namespace detail

// Full parse: tree plus token stream, identifier roles, and scope chain.
inline ParsedQuery parse_full(const std::string& sql) {
  return detail::Parser(tokenize(sql)).run();
}

inline SqlAst parse(const std::string& sql) { return parse_full(sql).ast; }

}  // namespace nl2sql
