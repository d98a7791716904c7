#pragma once

// Parse tree for the SELECT dialect plus the canonical serializer.
//
// All node types are plain values with structural equality; a query holds no
// source positions, so two parses of equivalent text compare equal. Recursive
// members are stored in vectors (size 0/1) to break type cycles.

#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nl2sql/lexer.hpp"

namespace nl2sql {

enum class AggFn { count, sum, avg, min, max };
enum class BinOp { add, sub, mul, div };
enum class CmpOp { eq, ne, lt, gt, le, ge };
enum class LogicalOp { and_, or_ };
enum class SetOpKind { union_, intersect, except };
enum class LitKind { number, string };

struct SqlAst;
struct Expr;

struct Literal {
  LitKind kind;
  std::string text;  // verbatim source text, quotes included for strings
  bool operator==(const Literal&) const = default;
};

struct ColumnRef {
  std::string table;  // qualifier as written (alias or table), empty if none
  std::string column;  // "*" for the star pseudo-column
  bool table_quoted = false;
  bool column_quoted = false;
  bool operator==(const ColumnRef&) const = default;
};

struct AggCall {
  AggFn fn;
  bool distinct = false;
  std::vector<Expr> arg;  // exactly one
  bool operator==(const AggCall&) const = default;
};

struct Binary {
  BinOp op;
  std::vector<Expr> operands;  // exactly two
  bool operator==(const Binary&) const = default;
};

struct Subquery {
  std::vector<SqlAst> query;  // exactly one
  bool operator==(const Subquery&) const = default;
};

struct Expr {
  std::variant<Literal, ColumnRef, AggCall, Binary, Subquery> node;
  bool operator==(const Expr&) const = default;
};

struct Condition;

struct Comparison {
  CmpOp op;
  std::vector<Expr> sides;  // lhs, rhs
  bool operator==(const Comparison&) const = default;
};

struct LikePred {
  bool negated = false;
  std::vector<Expr> sides;  // value, pattern
  bool operator==(const LikePred&) const = default;
};

struct InPred {
  bool negated = false;
  std::vector<Expr> lhs;        // exactly one
  std::vector<Expr> items;      // literal list form
  std::vector<SqlAst> subquery;  // subquery form (one entry)
  bool operator==(const InPred&) const = default;
};

struct BetweenPred {
  bool negated = false;
  std::vector<Expr> parts;  // value, low, high
  bool operator==(const BetweenPred&) const = default;
};

struct Logical {
  LogicalOp op;
  std::vector<Condition> children;  // two or more, same-op children spliced
  bool operator==(const Logical&) const = default;
};

struct Condition {
  std::variant<Comparison, LikePred, InPred, BetweenPred, Logical> node;
  bool operator==(const Condition&) const = default;
};

struct TableRef {
  std::string table;
  bool quoted = false;
  std::string alias;  // empty if none
  bool operator==(const TableRef&) const = default;
};

struct Join {
  TableRef table;
  std::optional<Condition> on;
  bool operator==(const Join&) const = default;
};

struct OrderKey {
  Expr expr;
  bool desc = false;
  bool operator==(const OrderKey&) const = default;
};

struct SelectStmt {
  bool distinct = false;
  std::vector<Expr> items;
  std::vector<TableRef> from;
  std::vector<Join> joins;
  std::optional<Condition> where;
  std::vector<Expr> group_by;
  std::optional<Condition> having;
  std::vector<OrderKey> order_by;
  std::optional<std::string> limit;  // digits, verbatim
  bool operator==(const SelectStmt&) const = default;
};

struct SetArm {
  SetOpKind kind;
  bool all = false;  // UNION ALL
  SelectStmt stmt;
  bool operator==(const SetArm&) const = default;
};

// One statement: a SELECT followed by a left-associative set-operation chain.
struct SqlAst {
  SelectStmt head;
  std::vector<SetArm> arms;
  bool operator==(const SqlAst&) const = default;
};

inline const char* agg_name(AggFn fn) {
  switch (fn) {
    case AggFn::count: return "count";
    case AggFn::sum: return "sum";
    case AggFn::avg: return "avg";
    case AggFn::min: return "min";
    case AggFn::max: return "max";
  }
  return "";
}

inline const char* set_op_name(SetOpKind k) {
  switch (k) {
    case SetOpKind::union_: return "UNION";
    case SetOpKind::intersect: return "INTERSECT";
    case SetOpKind::except: return "EXCEPT";
  }
  return "";
}

namespace detail {

// Canonical printer. Single line, single spaces, uppercase keywords,
// lowercase aggregate names, `!=` for inequality, explicit ASC/DESC.
// fold_identifiers lowercases table/column/alias names (literals untouched);
// resolve_aliases rewrites column qualifiers to the underlying table name
// using the FROM clauses in scope.
struct SerializeOptions {
  bool fold_identifiers = false;
  bool resolve_aliases = false;
};

class Writer {
 public:
  explicit Writer(SerializeOptions opts = {}) : opts_(opts) {}

  std::string write(const SqlAst& ast) {
    out_.str("");
    write_query(ast);
    return out_.str();
  }

  std::string write_condition(const Condition& c) {
    out_.str("");
    cond(c);
    return out_.str();
  }

  std::string write_expr(const Expr& e) {
    out_.str("");
    expr(e, 0);
    return out_.str();
  }

  std::string write_order_key(const OrderKey& k) {
    out_.str("");
    expr(k.expr, 0);
    out_ << (k.desc ? " DESC" : " ASC");
    return out_.str();
  }

  // Pushes the FROM-clause alias map of `s` so nested writes resolve through
  // it; used by decompose when serializing clause fragments.
  void push_scope(const SelectStmt& s) {
    std::unordered_map<std::string, std::string> scope;
    auto add = [&](const TableRef& t) {
      scope[ascii_lower(t.table)] = t.table;
      if (!t.alias.empty()) scope[ascii_lower(t.alias)] = t.table;
    };
    for (const auto& t : s.from) add(t);
    for (const auto& j : s.joins) add(j.table);
    scopes_.push_back(std::move(scope));
  }

  void pop_scope() { scopes_.pop_back(); }

 private:
  void write_query(const SqlAst& ast) {
    select(ast.head);
    for (const auto& arm : ast.arms) {
      out_ << ' ' << set_op_name(arm.kind);
      if (arm.all) out_ << " ALL";
      out_ << ' ';
      select(arm.stmt);
    }
  }

  void select(const SelectStmt& s) {
    if (opts_.resolve_aliases) push_scope(s);
    out_ << "SELECT ";
    if (s.distinct) out_ << "DISTINCT ";
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (i) out_ << ", ";
      expr(s.items[i], 0);
    }
    if (!s.from.empty()) {
      out_ << " FROM ";
      for (std::size_t i = 0; i < s.from.size(); ++i) {
        if (i) out_ << ", ";
        table_ref(s.from[i]);
      }
      for (const auto& j : s.joins) {
        out_ << " JOIN ";
        table_ref(j.table);
        if (j.on) {
          out_ << " ON ";
          cond(*j.on);
        }
      }
    }
    if (s.where) {
      out_ << " WHERE ";
      cond(*s.where);
    }
    if (!s.group_by.empty()) {
      out_ << " GROUP BY ";
      for (std::size_t i = 0; i < s.group_by.size(); ++i) {
        if (i) out_ << ", ";
        expr(s.group_by[i], 0);
      }
    }
    if (s.having) {
      out_ << " HAVING ";
      cond(*s.having);
    }
    if (!s.order_by.empty()) {
      out_ << " ORDER BY ";
      for (std::size_t i = 0; i < s.order_by.size(); ++i) {
        if (i) out_ << ", ";
        expr(s.order_by[i].expr, 0);
        out_ << (s.order_by[i].desc ? " DESC" : " ASC");
      }
    }
    if (s.limit) out_ << " LIMIT " << *s.limit;
    if (opts_.resolve_aliases) pop_scope();
  }

  void table_ref(const TableRef& t) {
    identifier(t.table, t.quoted);
    if (!t.alias.empty() && !opts_.resolve_aliases) {
      // Alias-resolved output drops the binder along with the uses.
      out_ << " AS ";
      identifier(t.alias, false);
    }
  }

  void identifier(const std::string& name, bool quoted) {
    std::string text = opts_.fold_identifiers ? ascii_lower(name) : name;
    if (quoted)
      out_ << '"' << text << '"';
    else
      out_ << text;
  }

  std::string resolve_qualifier(const std::string& q) {
    std::string key = ascii_lower(q);
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto hit = it->find(key);
      if (hit != it->end()) return hit->second;
    }
    return q;
  }

  void column_ref(const ColumnRef& c) {
    if (!c.table.empty()) {
      std::string q = opts_.resolve_aliases ? resolve_qualifier(c.table)
                                            : c.table;
      identifier(q, c.table_quoted);
      out_ << '.';
    }
    if (c.column == "*")
      out_ << '*';
    else
      identifier(c.column, c.column_quoted);
  }

  static int prec(BinOp op) {
    return (op == BinOp::mul || op == BinOp::div) ? 2 : 1;
  }

  static const char* bin_op_text(BinOp op) {
    switch (op) {
      case BinOp::add: return "+";
      case BinOp::sub: return "-";
      case BinOp::mul: return "*";
      case BinOp::div: return "/";
    }
    return "";
  }

  static const char* cmp_op_text(CmpOp op) {
    switch (op) {
      case CmpOp::eq: return "=";
      case CmpOp::ne: return "!=";
      case CmpOp::lt: return "<";
      case CmpOp::gt: return ">";
      case CmpOp::le: return "<=";
      case CmpOp::ge: return ">=";
    }
    return "";
  }

  // min_prec: parenthesize any binary node binding looser than this. Right
  // operands raise it by one so the printed text re-parses to the same tree.
  void expr(const Expr& e, int min_prec) {
    if (const auto* lit = std::get_if<Literal>(&e.node)) {
      out_ << lit->text;
    } else if (const auto* col = std::get_if<ColumnRef>(&e.node)) {
      column_ref(*col);
    } else if (const auto* agg = std::get_if<AggCall>(&e.node)) {
      out_ << agg_name(agg->fn) << '(';
      if (agg->distinct) out_ << "DISTINCT ";
      expr(agg->arg.front(), 0);
      out_ << ')';
    } else if (const auto* bin = std::get_if<Binary>(&e.node)) {
      int p = prec(bin->op);
      bool parens = p < min_prec;
      if (parens) out_ << '(';
      expr(bin->operands[0], p);
      out_ << ' ' << bin_op_text(bin->op) << ' ';
      expr(bin->operands[1], p + 1);
      if (parens) out_ << ')';
    } else if (const auto* sub = std::get_if<Subquery>(&e.node)) {
      out_ << '(';
      write_query(sub->query.front());
      out_ << ')';
    }
  }

  void cond(const Condition& c) { cond_prec(c, false); }

  void cond_prec(const Condition& c, bool inside_and) {
    if (const auto* cmp = std::get_if<Comparison>(&c.node)) {
      expr(cmp->sides[0], 0);
      out_ << ' ' << cmp_op_text(cmp->op) << ' ';
      expr(cmp->sides[1], 0);
    } else if (const auto* like = std::get_if<LikePred>(&c.node)) {
      expr(like->sides[0], 0);
      out_ << (like->negated ? " NOT LIKE " : " LIKE ");
      expr(like->sides[1], 0);
    } else if (const auto* in = std::get_if<InPred>(&c.node)) {
      expr(in->lhs.front(), 0);
      out_ << (in->negated ? " NOT IN (" : " IN (");
      if (!in->subquery.empty()) {
        write_query(in->subquery.front());
      } else {
        for (std::size_t i = 0; i < in->items.size(); ++i) {
          if (i) out_ << ", ";
          expr(in->items[i], 0);
        }
      }
      out_ << ')';
    } else if (const auto* btw = std::get_if<BetweenPred>(&c.node)) {
      expr(btw->parts[0], 0);
      out_ << (btw->negated ? " NOT BETWEEN " : " BETWEEN ");
      expr(btw->parts[1], 0);
      out_ << " AND ";
      expr(btw->parts[2], 0);
    } else if (const auto* log = std::get_if<Logical>(&c.node)) {
      bool parens = inside_and && log->op == LogicalOp::or_;
      if (parens) out_ << '(';
      const char* sep = log->op == LogicalOp::and_ ? " AND " : " OR ";
      for (std::size_t i = 0; i < log->children.size(); ++i) {
        if (i) out_ << sep;
        cond_prec(log->children[i], log->op == LogicalOp::and_);
      }
      if (parens) out_ << ')';
    }
  }

  SerializeOptions opts_;
  std::ostringstream out_;
  std::vector<std::unordered_map<std::string, std::string>> scopes_;
};

}  // namespace detail

// Canonical text: single spaces, uppercase keywords, identifiers as stored.
inline std::string serialize(const SqlAst& ast) {
  return detail::Writer{}.write(ast);
}

}  // namespace nl2sql
