#pragma once

// Shared test utilities: fixture paths, a throwaway SQLite database built
// from the bundled SQL script, a CLI subprocess runner, an independent
// edit-distance oracle, and a seeded generator of schema-consistent random
// ASTs used by the round-trip and metric-implication properties.

#include <nl2sql/nl2sql.hpp>

#include <sqlite3.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#ifndef TESTDATA_DIR
#error "TESTDATA_DIR must be defined by the build"
#endif

namespace testutil {

inline std::string testdata(const std::string& rel) {
  return std::string(TESTDATA_DIR) + "/" + rel;
}

inline std::string temp_path(const std::string& stem) {
  static std::atomic<int> counter{0};
  return (std::filesystem::temp_directory_path() /
          (stem + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++)))
      .string();
}

// Build a writable SQLite database from a SQL script (the evaluation engine
// itself only opens databases read-only).
inline void exec_sql_script(const std::string& db_path,
                            const std::string& script) {
  sqlite3* db = nullptr;
  if (sqlite3_open(db_path.c_str(), &db) != SQLITE_OK)
    throw std::runtime_error("cannot create " + db_path);
  char* err = nullptr;
  if (sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown sqlite error";
    sqlite3_free(err);
    sqlite3_close(db);
    throw std::runtime_error("script failed: " + msg);
  }
  sqlite3_close(db);
}

// Process-wide utility-company fixture database.
inline const std::string& fixture_db_path() {
  static const std::string path = [] {
    std::string p = temp_path("nl2sql_fixture") + ".sqlite";
    std::filesystem::remove(p);
    exec_sql_script(p,
                    nl2sql::detail::read_file(testdata("utility_fixture.sql")));
    return p;
  }();
  return path;
}

inline std::map<std::string, std::string> fixture_db_map() {
  return {{"utility", fixture_db_path()}};
}

// -- CLI subprocess runner ---------------------------------------------

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'')
      q += "'\\''";
    else
      q += c;
  }
  q += "'";
  return q;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

#ifdef NL2SQL_CLI_BIN
inline CmdResult run_cli(const std::vector<std::string>& args,
                         const std::string& stdin_text = "") {
  std::string in = temp_path("cli_in"), out = temp_path("cli_out"),
              err = temp_path("cli_err");
  {
    std::ofstream f(in, std::ios::binary);
    f << stdin_text;
  }
  std::string cmd = shell_quote(NL2SQL_CLI_BIN);
  for (const std::string& a : args) cmd += " " + shell_quote(a);
  cmd += " < " + shell_quote(in) + " > " + shell_quote(out) + " 2> " +
         shell_quote(err);
  int status = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::filesystem::remove(in);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}
#endif

// -- independent edit-distance oracle ------------------------------------
//
// Full-matrix Wagner-Fischer, written separately from the library's
// two-row implementation so fixture distances are cross-checked.

inline int edit_distance_ref(std::string a, std::string b) {
  for (char& c : a) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (char& c : b) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::vector<std::vector<int>> m(a.size() + 1,
                                  std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) m[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) m[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int sub = m[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      m[i][j] = std::min({m[i - 1][j] + 1, m[i][j - 1] + 1, sub});
    }
  return m[a.size()][b.size()];
}

// -- random AST generation ------------------------------------------------
//
// Generates schema-consistent queries over a DbSchema so the output both
// round-trips through the parser and (for the bundled fixture) executes on
// SQLite. Shapes covered: multi-table FROM with aliases, joins, nested
// logical conditions, IN lists and subqueries, BETWEEN, LIKE, aggregates,
// arithmetic, GROUP BY / HAVING, ORDER BY / LIMIT, and set-operation chains
// with matching projection arity.

class AstGen {
 public:
  explicit AstGen(const nl2sql::DbSchema& schema, std::uint32_t seed)
      : schema_(&schema), rng_(seed) {}

  nl2sql::SqlAst query() {
    subquery_depth_ = 0;
    alias_counter_ = 0;
    return gen_query(true);
  }

  std::mt19937& rng() { return rng_; }

 private:
  using SqlAst = nl2sql::SqlAst;
  using SelectStmt = nl2sql::SelectStmt;
  using Expr = nl2sql::Expr;
  using Condition = nl2sql::Condition;

  struct Source {
    std::string name;  // how columns qualify it: alias if present, else table
    const nl2sql::Table* table;
  };

  int pct() { return std::uniform_int_distribution<int>(0, 99)(rng_); }
  int irange(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(irange(0, static_cast<int>(v.size()) - 1))];
  }

  const nl2sql::Table& rand_table() {
    return schema_->tables[static_cast<std::size_t>(
        irange(0, static_cast<int>(schema_->tables.size()) - 1))];
  }

  std::string maybe_case(std::string name) {
    int roll = pct();
    if (roll < 8) {
      for (char& c : name)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (roll < 16 && !name.empty()) {
      name[0] =
          static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    }
    return name;
  }

  std::string number_text() {
    static const char* pool[] = {"0",   "1",    "2",    "3",    "5",
                                 "10",  "50",   "75.5", "100",  "120.5",
                                 "200", "2015", "2018", "2021", "1.5e2"};
    return pool[irange(0, 14)];
  }

  std::string string_text() {
    static const char* pool[] = {"'Vancouver'", "'Kelowna'", "'Victoria'",
                                 "'roof'",      "'basement'", "'lobby'",
                                 "'Main'",      "'Harbour'",  "'x'"};
    return pool[irange(0, 8)];
  }

  // A column of `src`, qualified according to context.
  Expr column_of(const std::vector<Source>& sources) {
    const Source& src = pick(sources);
    const nl2sql::Column& col =
        src.table->columns[static_cast<std::size_t>(irange(
            0, static_cast<int>(src.table->columns.size()) - 1))];
    nl2sql::ColumnRef ref;
    bool qualify = sources.size() > 1 ? pct() < 75 : pct() < 25;
    if (qualify) ref.table = src.name;
    ref.column = maybe_case(col.name);
    ref.column_quoted = pct() < 8;
    return Expr{std::move(ref)};
  }

  Expr numeric_column(const std::vector<Source>& sources) {
    // Prefer number-typed columns for arithmetic/aggregation.
    for (int tries = 0; tries < 6; ++tries) {
      const Source& src = pick(sources);
      std::vector<const nl2sql::Column*> nums;
      for (const nl2sql::Column& c : src.table->columns)
        if (c.col_type == nl2sql::ColType::number) nums.push_back(&c);
      if (nums.empty()) continue;
      nl2sql::ColumnRef ref;
      if (sources.size() > 1 || pct() < 25) ref.table = src.name;
      ref.column = pick(nums)->name;
      return Expr{std::move(ref)};
    }
    return column_of(sources);
  }

  Expr text_column(const std::vector<Source>& sources) {
    for (int tries = 0; tries < 6; ++tries) {
      const Source& src = pick(sources);
      std::vector<const nl2sql::Column*> texts;
      for (const nl2sql::Column& c : src.table->columns)
        if (c.col_type == nl2sql::ColType::text) texts.push_back(&c);
      if (texts.empty()) continue;
      nl2sql::ColumnRef ref;
      if (sources.size() > 1 || pct() < 25) ref.table = src.name;
      ref.column = pick(texts)->name;
      return Expr{std::move(ref)};
    }
    return column_of(sources);
  }

  Expr aggregate(const std::vector<Source>& sources) {
    nl2sql::AggCall agg;
    agg.fn = static_cast<nl2sql::AggFn>(irange(0, 4));
    if (agg.fn == nl2sql::AggFn::count && pct() < 50) {
      agg.arg.push_back(Expr{nl2sql::ColumnRef{"", "*", false, false}});
    } else {
      agg.distinct = pct() < 15;
      agg.arg.push_back(agg.fn == nl2sql::AggFn::count
                            ? column_of(sources)
                            : numeric_column(sources));
    }
    return Expr{std::move(agg)};
  }

  Expr arithmetic(const std::vector<Source>& sources) {
    nl2sql::Binary bin;
    bin.op = static_cast<nl2sql::BinOp>(irange(0, 3));
    Expr lhs = pct() < 70 ? numeric_column(sources)
                          : Expr{nl2sql::Literal{nl2sql::LitKind::number,
                                                 number_text()}};
    // Non-zero literal right side keeps division runnable.
    Expr rhs = Expr{nl2sql::Literal{nl2sql::LitKind::number,
                                    std::to_string(irange(1, 9))}};
    if (pct() < 20) {  // nest once on the left
      nl2sql::Binary inner;
      inner.op = static_cast<nl2sql::BinOp>(irange(0, 3));
      inner.operands.push_back(lhs);
      inner.operands.push_back(Expr{nl2sql::Literal{
          nl2sql::LitKind::number, std::to_string(irange(1, 9))}});
      lhs = Expr{std::move(inner)};
    }
    bin.operands.push_back(std::move(lhs));
    bin.operands.push_back(std::move(rhs));
    return Expr{std::move(bin)};
  }

  Expr scalar_subquery() {
    ++subquery_depth_;
    nl2sql::Subquery sub;
    SelectStmt inner;
    nl2sql::AggCall agg;
    agg.fn = nl2sql::AggFn::count;
    agg.arg.push_back(Expr{nl2sql::ColumnRef{"", "*", false, false}});
    inner.items.push_back(Expr{std::move(agg)});
    inner.from.push_back(nl2sql::TableRef{rand_table().name, false, ""});
    sub.query.push_back(SqlAst{std::move(inner), {}});
    --subquery_depth_;
    return Expr{std::move(sub)};
  }

  Expr item(const std::vector<Source>& sources) {
    int roll = pct();
    if (roll < 55) return column_of(sources);
    if (roll < 75) return aggregate(sources);
    if (roll < 85) return arithmetic(sources);
    if (roll < 95)
      return pct() < 60 ? Expr{nl2sql::Literal{nl2sql::LitKind::number,
                                               number_text()}}
                        : Expr{nl2sql::Literal{nl2sql::LitKind::string,
                                               string_text()}};
    if (subquery_depth_ < 1) return scalar_subquery();
    return column_of(sources);
  }

  Condition leaf_condition(const std::vector<Source>& sources) {
    int roll = pct();
    if (roll < 35) {  // column vs literal
      nl2sql::Comparison cmp;
      cmp.op = static_cast<nl2sql::CmpOp>(irange(0, 5));
      if (pct() < 60) {
        cmp.sides.push_back(numeric_column(sources));
        cmp.sides.push_back(
            Expr{nl2sql::Literal{nl2sql::LitKind::number, number_text()}});
      } else {
        cmp.sides.push_back(text_column(sources));
        cmp.sides.push_back(
            Expr{nl2sql::Literal{nl2sql::LitKind::string, string_text()}});
      }
      return Condition{std::move(cmp)};
    }
    if (roll < 50) {  // column vs column
      nl2sql::Comparison cmp;
      cmp.op = static_cast<nl2sql::CmpOp>(irange(0, 5));
      cmp.sides.push_back(column_of(sources));
      cmp.sides.push_back(column_of(sources));
      return Condition{std::move(cmp)};
    }
    if (roll < 62) {  // LIKE
      static const char* patterns[] = {"'%an%'", "'V%'", "'%e'", "'%o%'"};
      nl2sql::LikePred like;
      like.negated = pct() < 20;
      like.sides.push_back(text_column(sources));
      like.sides.push_back(Expr{nl2sql::Literal{nl2sql::LitKind::string,
                                                 patterns[irange(0, 3)]}});
      return Condition{std::move(like)};
    }
    if (roll < 74) {  // IN literal list
      nl2sql::InPred in;
      in.negated = pct() < 20;
      bool numeric = pct() < 60;
      in.lhs.push_back(numeric ? numeric_column(sources)
                               : text_column(sources));
      int n = irange(2, 3);
      for (int i = 0; i < n; ++i)
        in.items.push_back(
            numeric
                ? Expr{nl2sql::Literal{nl2sql::LitKind::number, number_text()}}
                : Expr{nl2sql::Literal{nl2sql::LitKind::string,
                                       string_text()}});
      return Condition{std::move(in)};
    }
    if (roll < 82 && subquery_depth_ < 1) {  // IN subquery
      ++subquery_depth_;
      nl2sql::InPred in;
      in.negated = pct() < 20;
      in.lhs.push_back(column_of(sources));
      SelectStmt inner;
      const nl2sql::Table& t = rand_table();
      nl2sql::ColumnRef ref;
      ref.column = t.columns[static_cast<std::size_t>(irange(
                                 0, static_cast<int>(t.columns.size()) - 1))]
                       .name;
      inner.items.push_back(Expr{std::move(ref)});
      inner.from.push_back(nl2sql::TableRef{t.name, false, ""});
      in.subquery.push_back(SqlAst{std::move(inner), {}});
      --subquery_depth_;
      return Condition{std::move(in)};
    }
    // BETWEEN
    nl2sql::BetweenPred btw;
    btw.negated = pct() < 15;
    btw.parts.push_back(numeric_column(sources));
    int lo = irange(0, 100), hi = lo + irange(1, 1500);
    btw.parts.push_back(
        Expr{nl2sql::Literal{nl2sql::LitKind::number, std::to_string(lo)}});
    btw.parts.push_back(
        Expr{nl2sql::Literal{nl2sql::LitKind::number, std::to_string(hi)}});
    return Condition{std::move(btw)};
  }

  Condition gen_condition(const std::vector<Source>& sources, int cdepth) {
    if (cdepth < 2 && pct() < 28) {
      nl2sql::Logical log;
      log.op = pct() < 60 ? nl2sql::LogicalOp::and_ : nl2sql::LogicalOp::or_;
      int n = irange(2, 3);
      for (int i = 0; i < n; ++i) {
        Condition child = gen_condition(sources, cdepth + 1);
        // Same-operator children are spliced, matching the parse shape.
        if (auto* nested = std::get_if<nl2sql::Logical>(&child.node);
            nested && nested->op == log.op) {
          for (auto& grand : nested->children)
            log.children.push_back(std::move(grand));
        } else {
          log.children.push_back(std::move(child));
        }
      }
      return Condition{std::move(log)};
    }
    return leaf_condition(sources);
  }

  SelectStmt gen_select(int arity, bool allow_tail, bool allow_star) {
    SelectStmt s;
    std::vector<Source> sources;
    int n_from = pct() < 30 ? 2 : 1;
    for (int i = 0; i < n_from; ++i) {
      const nl2sql::Table& t = rand_table();
      nl2sql::TableRef ref;
      ref.table = maybe_case(t.name);
      if (n_from > 1 || pct() < 25) {
        ref.alias = "t" + std::to_string(alias_counter_++);
        sources.push_back({ref.alias, &t});
      } else {
        sources.push_back({ref.table, &t});
      }
      s.from.push_back(std::move(ref));
    }
    if (pct() < 22) {
      const nl2sql::Table& t = rand_table();
      nl2sql::Join join;
      join.table.table = t.name;
      join.table.alias = "t" + std::to_string(alias_counter_++);
      Source js{join.table.alias, &t};
      if (pct() < 80) {
        nl2sql::Comparison cmp;
        cmp.op = nl2sql::CmpOp::eq;
        cmp.sides.push_back(column_of({js}));
        cmp.sides.push_back(column_of({sources[0]}));
        join.on = Condition{std::move(cmp)};
      }
      sources.push_back(js);
      s.joins.push_back(std::move(join));
    }

    s.distinct = pct() < 15;
    if (allow_star && arity == 1 && pct() < 8) {
      nl2sql::ColumnRef star;
      star.column = "*";
      if (pct() < 40) star.table = sources[0].name;
      s.items.push_back(Expr{std::move(star)});
    } else {
      for (int i = 0; i < arity; ++i) s.items.push_back(item(sources));
    }

    if (pct() < 55) s.where = gen_condition(sources, 0);
    if (pct() < 25) {
      int n = irange(1, 2);
      for (int i = 0; i < n; ++i) s.group_by.push_back(column_of(sources));
      if (pct() < 40) {
        nl2sql::Comparison cmp;
        cmp.op = static_cast<nl2sql::CmpOp>(irange(0, 5));
        cmp.sides.push_back(aggregate(sources));
        cmp.sides.push_back(Expr{nl2sql::Literal{nl2sql::LitKind::number,
                                                 std::to_string(irange(0, 5))}});
        s.having = Condition{std::move(cmp)};
      }
    }
    if (allow_tail && pct() < 40) {
      int n = irange(1, 2);
      for (int i = 0; i < n; ++i)
        s.order_by.push_back(nl2sql::OrderKey{column_of(sources),
                                              pct() < 50});
    }
    if (allow_tail && pct() < 30) s.limit = std::to_string(irange(1, 10));
    return s;
  }

  SqlAst gen_query(bool allow_arms) {
    SqlAst ast;
    bool arms = allow_arms && pct() < 18;
    int arity = irange(1, 3);
    // Set-operation chains keep every arm free of ORDER BY/LIMIT and use a
    // fixed projection arity, matching what the engine will execute.
    ast.head = gen_select(arity, !arms, !arms);
    if (arms) {
      int n = pct() < 25 ? 2 : 1;
      for (int i = 0; i < n; ++i) {
        nl2sql::SetArm arm;
        arm.kind = static_cast<nl2sql::SetOpKind>(irange(0, 2));
        arm.all = arm.kind == nl2sql::SetOpKind::union_ && pct() < 40;
        arm.stmt = gen_select(arity, false, false);
        ast.arms.push_back(std::move(arm));
      }
    }
    return ast;
  }

  const nl2sql::DbSchema* schema_;
  std::mt19937 rng_;
  int subquery_depth_ = 0;
  int alias_counter_ = 0;
};

// Rewrite `sql` into a surface variant with identical canonical form:
// random keyword/identifier casing and random inter-token spacing. Literals
// and quoted identifiers are preserved byte-for-byte.
inline std::string mutate_surface(const std::string& sql, std::mt19937& rng) {
  std::vector<nl2sql::SqlToken> tokens = nl2sql::tokenize(sql);
  auto coin = [&](int p) {
    return std::uniform_int_distribution<int>(0, 99)(rng) < p;
  };
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string text = tokens[i].text;
    if (tokens[i].kind == nl2sql::TokenKind::keyword ||
        tokens[i].kind == nl2sql::TokenKind::identifier) {
      if (coin(40)) {
        for (char& c : text)
          c = coin(50) ? static_cast<char>(
                             std::toupper(static_cast<unsigned char>(c)))
                       : static_cast<char>(
                             std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (i) out += std::string(static_cast<std::size_t>(
                                  1 + (coin(25) ? 1 : 0) + (coin(10) ? 1 : 0)),
                              ' ');
    out += text;
  }
  return out;
}

}  // namespace testutil
