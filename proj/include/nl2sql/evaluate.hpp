#pragma once

// Scoring: exact match in two modes (canonical string, component multiset)
// and execution accuracy against read-only SQLite fixtures, aggregated as
// exact rationals over a corpus with an optional repair stage in front.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "nl2sql/dataset.hpp"
#include "nl2sql/decompose.hpp"
#include "nl2sql/repair.hpp"

#include <sqlite3.h>

namespace nl2sql {

class ExecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExecTimeout : public ExecError {
 public:
  using ExecError::ExecError;
};

// -- result tables -------------------------------------------------------

struct ResultTable {
  using Cell = std::variant<std::monostate, long long, double, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

class SqliteDb {
 public:
  explicit SqliteDb(const std::string& path) {
    int rc = sqlite3_open_v2(path.c_str(), &db_,
                             SQLITE_OPEN_READONLY | SQLITE_OPEN_FULLMUTEX,
                             nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      db_ = nullptr;
      throw ExecError("cannot open database '" + path + "': " + msg);
    }
  }

  SqliteDb(SqliteDb&& other) noexcept : db_(other.db_) { other.db_ = nullptr; }
  SqliteDb& operator=(SqliteDb&& other) noexcept {
    if (this != &other) {
      close();
      db_ = other.db_;
      other.db_ = nullptr;
    }
    return *this;
  }
  SqliteDb(const SqliteDb&) = delete;
  SqliteDb& operator=(const SqliteDb&) = delete;
  ~SqliteDb() { close(); }

  ResultTable execute(const std::string& sql, int timeout_ms = 5000) {
    struct Deadline {
      std::chrono::steady_clock::time_point at;
      bool expired = false;
    } deadline{std::chrono::steady_clock::now() +
               std::chrono::milliseconds(timeout_ms)};
    sqlite3_progress_handler(
        db_, 500,
        [](void* ctx) -> int {
          auto* d = static_cast<Deadline*>(ctx);
          if (std::chrono::steady_clock::now() < d->at) return 0;
          d->expired = true;
          return 1;  // abort the statement
        },
        &deadline);

    sqlite3_stmt* stmt = nullptr;
    int rc = sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = sqlite3_errmsg(db_);
      sqlite3_progress_handler(db_, 0, nullptr, nullptr);
      throw ExecError("execution error: " + msg);
    }
    ResultTable table;
    int ncol = sqlite3_column_count(stmt);
    for (int i = 0; i < ncol; ++i) {
      const char* name = sqlite3_column_name(stmt, i);
      table.columns.push_back(name ? name : "");
    }
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
      std::vector<ResultTable::Cell> row;
      row.reserve(static_cast<std::size_t>(ncol));
      for (int i = 0; i < ncol; ++i) {
        switch (sqlite3_column_type(stmt, i)) {
          case SQLITE_INTEGER:
            row.emplace_back(
                static_cast<long long>(sqlite3_column_int64(stmt, i)));
            break;
          case SQLITE_FLOAT:
            row.emplace_back(sqlite3_column_double(stmt, i));
            break;
          case SQLITE_NULL:
            row.emplace_back(std::monostate{});
            break;
          default: {
            const unsigned char* text = sqlite3_column_text(stmt, i);
            row.emplace_back(std::string(
                text ? reinterpret_cast<const char*>(text) : ""));
          }
        }
      }
      table.rows.push_back(std::move(row));
    }
    bool expired = deadline.expired;
    std::string msg = rc == SQLITE_DONE ? "" : sqlite3_errmsg(db_);
    sqlite3_finalize(stmt);
    sqlite3_progress_handler(db_, 0, nullptr, nullptr);
    if (rc != SQLITE_DONE) {
      if (expired) throw ExecTimeout("statement timed out");
      throw ExecError("execution error: " + msg);
    }
    return table;
  }

 private:
  void close() {
    if (db_) {
      sqlite3_close(db_);
      db_ = nullptr;
    }
  }
  sqlite3* db_ = nullptr;
};

// -- exact match ------------------------------------------------------------

enum class MatchMode { string, component };

inline bool exact_match(const std::string& gold, const std::string& pred,
                        MatchMode mode) {
  SqlAst gold_ast = parse(gold);  // gold must parse; that is the caller's pre
  SqlAst pred_ast;
  try {
    pred_ast = parse(pred);
  } catch (const LexError&) {
    return false;
  } catch (const SyntaxError&) {
    return false;
  }
  if (mode == MatchMode::string) {
    detail::Writer folded(detail::SerializeOptions{true, false});
    return folded.write(gold_ast) == folded.write(pred_ast);
  }
  return decompose(gold_ast) == decompose(pred_ast);
}

// -- execution comparison --------------------------------------------------

namespace detail {

inline bool cell_equal(const ResultTable::Cell& a, const ResultTable::Cell& b,
                       double rel_tol) {
  if (a.index() == b.index()) {
    if (std::holds_alternative<double>(a)) {
      double x = std::get<double>(a), y = std::get<double>(b);
      if (x == y) return true;
      return std::fabs(x - y) <= rel_tol * std::max(std::fabs(x), std::fabs(y));
    }
    return a == b;
  }
  // Mixed integer/real cells compare numerically (e.g. avg() vs sum()/n).
  auto numeric = [](const ResultTable::Cell& c, double& out) {
    if (const auto* i = std::get_if<long long>(&c)) {
      out = static_cast<double>(*i);
      return true;
    }
    if (const auto* d = std::get_if<double>(&c)) {
      out = *d;
      return true;
    }
    return false;
  };
  double x, y;
  if (!numeric(a, x) || !numeric(b, y)) return false;
  if (x == y) return true;
  return std::fabs(x - y) <= rel_tol * std::max(std::fabs(x), std::fabs(y));
}

// Deterministic ordering for bag comparison: nulls, then numerics by value,
// then text; ties broken by the variant index so sorting is total.
inline bool cell_less(const ResultTable::Cell& a, const ResultTable::Cell& b) {
  auto rank = [](const ResultTable::Cell& c) {
    if (std::holds_alternative<std::monostate>(c)) return 0;
    if (std::holds_alternative<std::string>(c)) return 2;
    return 1;
  };
  int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  if (ra == 1) {
    auto value = [](const ResultTable::Cell& c) {
      if (const auto* i = std::get_if<long long>(&c))
        return static_cast<long double>(*i);
      return static_cast<long double>(std::get<double>(c));
    };
    long double x = value(a), y = value(b);
    if (x != y) return x < y;
    return a.index() < b.index();
  }
  if (ra == 2) return std::get<std::string>(a) < std::get<std::string>(b);
  return false;
}

inline bool rows_less(const std::vector<ResultTable::Cell>& a,
                      const std::vector<ResultTable::Cell>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      cell_less);
}

}  // namespace detail

// Bag (multiset) comparison over rows; order-sensitive comparison keeps the
// row sequences as-is. Real cells compare with relative tolerance.
inline bool compare_results(const ResultTable& gold, const ResultTable& pred,
                            bool order_sensitive, double rel_tol = 1e-6) {
  if (gold.columns.size() != pred.columns.size()) return false;
  if (gold.rows.size() != pred.rows.size()) return false;
  std::vector<std::vector<ResultTable::Cell>> a = gold.rows;
  std::vector<std::vector<ResultTable::Cell>> b = pred.rows;
  if (!order_sensitive) {
    std::sort(a.begin(), a.end(), detail::rows_less);
    std::sort(b.begin(), b.end(), detail::rows_less);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (!detail::cell_equal(a[i][j], b[i][j], rel_tol)) return false;
  }
  return true;
}

// True when the query's top-level statement orders its result.
inline bool has_top_level_order_by(const std::string& sql) {
  try {
    SqlAst ast = parse(sql);
    if (ast.arms.empty()) return !ast.head.order_by.empty();
    return !ast.arms.back().stmt.order_by.empty();
  } catch (const LexError&) {
    return false;
  } catch (const SyntaxError&) {
    return false;
  }
}

// Absent when the gold query fails to execute (a broken gold cannot define
// correctness); a failing prediction against a working gold is false.
inline std::optional<bool> execution_match(const std::string& gold,
                                           const std::string& pred,
                                           SqliteDb& db,
                                           int timeout_ms = 5000) {
  ResultTable gold_result;
  try {
    gold_result = db.execute(gold, timeout_ms);
  } catch (const ExecError&) {
    return std::nullopt;
  }
  ResultTable pred_result;
  try {
    pred_result = db.execute(pred, timeout_ms);
  } catch (const ExecError&) {
    return false;
  }
  return compare_results(gold_result, pred_result,
                         has_top_level_order_by(gold));
}

// -- corpus evaluation -------------------------------------------------------

enum class FailureReason { parse_error, exec_error, timeout };

inline const char* failure_reason_name(FailureReason r) {
  switch (r) {
    case FailureReason::parse_error: return "parse_error";
    case FailureReason::exec_error: return "exec_error";
    case FailureReason::timeout: return "timeout";
  }
  return "exec_error";
}

struct Verdict {
  std::size_t index = 0;
  bool exact_string = false;
  bool exact_component = false;
  std::optional<bool> execution;  // absent: no fixture, or gold failed
  bool repaired = false;
  std::optional<FailureReason> failure_reason;
  bool operator==(const Verdict&) const = default;
};

struct Ratio {
  long long num = 0;
  long long den = 0;
  double value() const { return den ? static_cast<double>(num) / den : 0.0; }
  bool operator==(const Ratio&) const = default;
};

inline std::string format_ratio(const Ratio& r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

inline std::string format_percent(const Ratio& r) {
  if (r.den == 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * r.value());
  return buf;
}

struct EvalReport {
  std::vector<Verdict> verdicts;
  Ratio exact_string_accuracy;
  Ratio exact_component_accuracy;
  Ratio execution_accuracy;
  std::map<std::string, int> failure_counts;
  std::string test_label;  // test1 | test2 | custom
  bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
  bool repair = true;
  RepairOptions repair_options;
  int parallelism = 4;
  int timeout_ms = 5000;
};

namespace detail {

inline Verdict evaluate_pair(std::size_t index, const QueryPair& pair,
                             const std::string& prediction,
                             const DbSchema& schema, SqliteDb* db,
                             const EvalOptions& opts) {
  Verdict v;
  v.index = index;
  std::string sql = prediction;
  if (opts.repair) {
    RepairReport rep = repair(prediction, schema, opts.repair_options);
    sql = rep.repaired_sql;
    v.repaired = rep.status == RepairStatus::repaired;
  }

  std::optional<SqlAst> gold_ast;
  try {
    gold_ast = parse(pair.gold_sql);
  } catch (const std::runtime_error&) {
    gold_ast.reset();
  }
  std::optional<SqlAst> pred_ast;
  try {
    pred_ast = parse(sql);
  } catch (const LexError&) {
    v.failure_reason = FailureReason::parse_error;
  } catch (const SyntaxError&) {
    v.failure_reason = FailureReason::parse_error;
  }
  if (gold_ast && pred_ast) {
    Writer folded(SerializeOptions{true, false});
    v.exact_string = folded.write(*gold_ast) == folded.write(*pred_ast);
    v.exact_component = decompose(*gold_ast) == decompose(*pred_ast);
  }

  if (db) {
    auto note = [&](FailureReason r) {
      if (!v.failure_reason) v.failure_reason = r;
    };
    ResultTable gold_result;
    bool gold_ok = false;
    try {
      gold_result = db->execute(pair.gold_sql, opts.timeout_ms);
      gold_ok = true;
    } catch (const ExecTimeout&) {
      note(FailureReason::timeout);
    } catch (const ExecError&) {
      note(FailureReason::exec_error);
    }
    if (gold_ok) {
      try {
        ResultTable pred_result = db->execute(sql, opts.timeout_ms);
        v.execution = compare_results(gold_result, pred_result,
                                      has_top_level_order_by(pair.gold_sql));
      } catch (const ExecTimeout&) {
        v.execution = false;
        note(FailureReason::timeout);
      } catch (const ExecError&) {
        v.execution = false;
        note(FailureReason::exec_error);
      }
    }
  }
  return v;
}

}  // namespace detail

// db_paths maps db_id to a SQLite file; pairs without an entry are scored on
// exact match only. Verdict order equals dataset order regardless of the
// worker pool's completion order.
inline EvalReport evaluate_corpus(
    const std::vector<QueryPair>& pairs,
    const std::vector<std::string>& predictions, const SchemaList& schemas,
    const std::map<std::string, std::string>& db_paths,
    const EvalOptions& opts = {}) {
  if (pairs.size() != predictions.size())
    throw AlignmentError("have " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(pairs.size()) +
                         " pairs");
  std::vector<const DbSchema*> pair_schemas(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pair_schemas[i] = find_schema(schemas, pairs[i].db_id);
    if (!pair_schemas[i])
      throw DatasetError("pair " + std::to_string(i) + ": unknown db_id '" +
                         pairs[i].db_id + "'");
  }

  EvalReport report;
  report.verdicts.resize(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    // One connection per db per worker; SQLite handles are not shared.
    std::map<std::string, std::unique_ptr<SqliteDb>> dbs;
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= pairs.size()) break;
      SqliteDb* db = nullptr;
      if (auto it = db_paths.find(pairs[i].db_id); it != db_paths.end()) {
        auto& slot = dbs[pairs[i].db_id];
        if (!slot) slot = std::make_unique<SqliteDb>(it->second);
        db = slot.get();
      }
      report.verdicts[i] = detail::evaluate_pair(
          i, pairs[i], predictions[i], *pair_schemas[i], db, opts);
    }
  };
  std::size_t n_workers = std::max(1, opts.parallelism);
  n_workers = std::min(n_workers, pairs.size() ? pairs.size() : 1);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  report.failure_counts = {
      {"parse_error", 0}, {"exec_error", 0}, {"timeout", 0}};
  std::size_t n_train = 0, n_test = 0;
  for (const QueryPair& p : pairs)
    (p.split == Split::train ? n_train : n_test)++;
  for (const Verdict& v : report.verdicts) {
    report.exact_string_accuracy.num += v.exact_string;
    report.exact_component_accuracy.num += v.exact_component;
    if (v.execution.has_value()) {
      report.execution_accuracy.num += *v.execution;
      report.execution_accuracy.den += 1;
    }
    if (v.failure_reason)
      report.failure_counts[failure_reason_name(*v.failure_reason)]++;
  }
  report.exact_string_accuracy.den = static_cast<long long>(pairs.size());
  report.exact_component_accuracy.den = static_cast<long long>(pairs.size());
  report.test_label = pairs.empty()             ? "custom"
                      : n_train == 0            ? "test1"
                      : n_test > 0              ? "test2"
                                                : "custom";
  return report;
}

// -- report output --------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["test_label"] = report.test_label;
  doc["totals"]["pairs"] = report.exact_string_accuracy.den;
  doc["totals"]["executable"] = report.execution_accuracy.den;
  auto ratio = [](const Ratio& r) {
    nlohmann::ordered_json j;
    j["matches"] = r.num;
    j["total"] = r.den;
    j["percent"] = format_percent(r);
    return j;
  };
  doc["exact_match"]["string"] = ratio(report.exact_string_accuracy);
  doc["exact_match"]["component"] = ratio(report.exact_component_accuracy);
  doc["execution"] = ratio(report.execution_accuracy);
  doc["failures"] = report.failure_counts;
  doc["verdicts"] = nlohmann::ordered_json::array();
  for (const Verdict& v : report.verdicts) {
    nlohmann::ordered_json j;
    j["index"] = v.index;
    j["exact_string"] = v.exact_string;
    j["exact_component"] = v.exact_component;
    if (v.execution.has_value())
      j["execution"] = *v.execution;
    else
      j["execution"] = nullptr;
    j["repaired"] = v.repaired;
    if (v.failure_reason)
      j["failure_reason"] = failure_reason_name(*v.failure_reason);
    else
      j["failure_reason"] = nullptr;
    doc["verdicts"].push_back(std::move(j));
  }
  return doc;
}

inline std::string summary_line(const EvalReport& report) {
  return "exact(string)=" + format_ratio(report.exact_string_accuracy) +
         " exact(component)=" + format_ratio(report.exact_component_accuracy) +
         " exec=" + format_ratio(report.execution_accuracy);
}

inline std::string human_table(const EvalReport& report) {
  std::string out;
  out += "index  string  component  execution  repaired  reason\n";
  char buf[128];
  for (const Verdict& v : report.verdicts) {
    std::snprintf(buf, sizeof(buf), "%5zu  %-6s  %-9s  %-9s  %-8s  %s\n",
                  v.index, v.exact_string ? "yes" : "no",
                  v.exact_component ? "yes" : "no",
                  v.execution ? (*v.execution ? "yes" : "no") : "-",
                  v.repaired ? "yes" : "no",
                  v.failure_reason ? failure_reason_name(*v.failure_reason)
                                   : "-");
    out += buf;
  }
  return out;
}

}  // namespace nl2sql
