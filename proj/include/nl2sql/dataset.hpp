#pragma once

// Dataset ingestion (Spider JSON and a custom JSON-lines format), schema
// coverage accounting, training-set assembly, prompt serialization, and the
// prediction replay file formats.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nl2sql/decompose.hpp"
#include "nl2sql/parser.hpp"
#include "nl2sql/schema.hpp"

#include <nlohmann/json.hpp>

namespace nl2sql {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { train, test };

inline const char* split_name(Split s) {
  return s == Split::train ? "train" : "test";
}

struct QueryPair {
  std::string question;
  std::string gold_sql;
  std::string db_id;
  Split split = Split::train;
  bool operator==(const QueryPair&) const = default;
};

struct DatasetStats {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_databases = 0;
  std::size_t n_unparseable = 0;  // gold kept for training, skipped in coverage
  // Occurrence counts keyed "db.table" and "db.table.column" (schema casing).
  std::map<std::string, int> coverage;
};

using SchemaList = std::vector<DbSchema>;

inline const DbSchema* find_schema(const SchemaList& schemas,
                                   std::string_view db_id) {
  for (const DbSchema& s : schemas)
    if (s.db_id == db_id) return &s;
  return nullptr;
}

// -- coverage counting --------------------------------------------------

namespace detail {

// Counts table and column references of one query against its schema.
// Aliases resolve to their tables; bare columns resolve through the FROM
// scope first, then to a unique schema-wide owner; anything that does not
// resolve is skipped (coverage keys must exist in the schema).
class CoverageWalker {
 public:
  CoverageWalker(const DbSchema& schema, std::map<std::string, int>& out)
      : schema_(schema), out_(out) {}

  void walk(const SqlAst& ast) {
    select(ast.head);
    for (const SetArm& arm : ast.arms) select(arm.stmt);
  }

 private:
  void select(const SelectStmt& s) {
    scopes_.emplace_back();
    auto bind = [&](const TableRef& t) {
      const Table* table = schema_.find_table(t.table);
      if (table) {
        out_[schema_.db_id + "." + table->name]++;
        scopes_.back().push_back({ascii_lower(t.table), table});
        if (!t.alias.empty())
          scopes_.back().push_back({ascii_lower(t.alias), table});
      }
    };
    for (const TableRef& t : s.from) bind(t);
    for (const Join& j : s.joins) bind(j.table);
    for (const Expr& e : s.items) expr(e);
    for (const Join& j : s.joins)
      if (j.on) cond(*j.on);
    if (s.where) cond(*s.where);
    for (const Expr& e : s.group_by) expr(e);
    if (s.having) cond(*s.having);
    for (const OrderKey& k : s.order_by) expr(k.expr);
    scopes_.pop_back();
  }

  void cond(const Condition& c) {
    if (const auto* cmp = std::get_if<Comparison>(&c.node)) {
      for (const Expr& e : cmp->sides) expr(e);
    } else if (const auto* like = std::get_if<LikePred>(&c.node)) {
      for (const Expr& e : like->sides) expr(e);
    } else if (const auto* in = std::get_if<InPred>(&c.node)) {
      for (const Expr& e : in->lhs) expr(e);
      for (const Expr& e : in->items) expr(e);
      for (const SqlAst& q : in->subquery) walk_nested(q);
    } else if (const auto* btw = std::get_if<BetweenPred>(&c.node)) {
      for (const Expr& e : btw->parts) expr(e);
    } else if (const auto* log = std::get_if<Logical>(&c.node)) {
      for (const Condition& child : log->children) cond(child);
    }
  }

  void expr(const Expr& e) {
    if (const auto* col = std::get_if<ColumnRef>(&e.node)) {
      column(*col);
    } else if (const auto* agg = std::get_if<AggCall>(&e.node)) {
      for (const Expr& a : agg->arg) expr(a);
    } else if (const auto* bin = std::get_if<Binary>(&e.node)) {
      for (const Expr& o : bin->operands) expr(o);
    } else if (const auto* sub = std::get_if<Subquery>(&e.node)) {
      for (const SqlAst& q : sub->query) walk_nested(q);
    }
  }

  void walk_nested(const SqlAst& ast) {
    select(ast.head);
    for (const SetArm& arm : ast.arms) select(arm.stmt);
  }

  void column(const ColumnRef& col) {
    if (col.column == "*") return;
    const Table* owner = nullptr;
    if (!col.table.empty()) {
      owner = scope_lookup(ascii_lower(col.table));
      if (!owner) owner = schema_.find_table(col.table);
      if (owner && !has_column(*owner, col.column)) owner = nullptr;
    } else {
      for (auto it = scopes_.rbegin(); !owner && it != scopes_.rend(); ++it)
        for (const auto& [name, table] : *it)
          if (has_column(*table, col.column)) {
            owner = table;
            break;
          }
      if (!owner) {
        Resolution r = resolve_identifier(schema_, col.column);
        if (r.kind == ResolvedKind::column && r.owners.size() == 1)
          owner = schema_.find_table(r.owners.front());
      }
    }
    if (!owner) return;
    std::string low = ascii_lower(col.column);
    for (const Column& c : owner->columns)
      if (ascii_lower(c.name) == low) {
        out_[schema_.db_id + "." + owner->name + "." + c.name]++;
        return;
      }
  }

  const Table* scope_lookup(const std::string& low) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      for (const auto& [name, table] : *it)
        if (name == low) return table;
    return nullptr;
  }

  static bool has_column(const Table& t, const std::string& name) {
    std::string low = ascii_lower(name);
    for (const Column& c : t.columns)
      if (ascii_lower(c.name) == low) return true;
    return false;
  }

  const DbSchema& schema_;
  std::map<std::string, int>& out_;
  std::vector<std::vector<std::pair<std::string, const Table*>>> scopes_;
};

inline bool count_coverage(const std::string& sql, const DbSchema& schema,
                           std::map<std::string, int>& out) {
  try {
    SqlAst ast = parse(sql);
    CoverageWalker(schema, out).walk(ast);
    return true;
  } catch (const LexError&) {
    return false;
  } catch (const SyntaxError&) {
    return false;
  }
}

}  // namespace detail

// -- ingestion ----------------------------------------------------------

struct IngestResult {
  std::vector<QueryPair> pairs;
  DatasetStats stats;
};

inline IngestResult ingest_spider(const std::string& train_path,
                                  const std::string& dev_path,
                                  const std::string& tables_path) {
  SchemaList schemas = load_spider_tables(tables_path);
  IngestResult result;
  result.stats.n_databases = schemas.size();
  auto load_split = [&](const std::string& path, Split split,
                        const char* label) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(std::string(label) + ": parse error at byte " +
                         std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_array())
      throw DatasetError(std::string(label) + ": top level must be an array");
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const auto& rec = doc[i];
      auto field = [&](const char* name) -> std::string {
        if (!rec.contains(name) || !rec[name].is_string())
          throw DatasetError(std::string(label) + " record " +
                             std::to_string(i) + ": missing field '" + name +
                             "'");
        return rec[name].get<std::string>();
      };
      QueryPair pair;
      pair.question = field("question");
      pair.gold_sql = field("query");
      pair.db_id = field("db_id");
      pair.split = split;
      if (pair.question.empty() || pair.gold_sql.empty())
        throw DatasetError(std::string(label) + " record " +
                           std::to_string(i) + ": empty question or query");
      const DbSchema* schema = find_schema(schemas, pair.db_id);
      if (!schema)
        throw DatasetError(std::string(label) + " record " +
                           std::to_string(i) + ": unknown db_id '" +
                           pair.db_id + "'");
      if (split == Split::train)
        ++result.stats.n_train;
      else
        ++result.stats.n_test;
      if (!detail::count_coverage(pair.gold_sql, *schema,
                                  result.stats.coverage))
        ++result.stats.n_unparseable;
      result.pairs.push_back(std::move(pair));
    }
  };
  load_split(train_path, Split::train, "train");
  load_split(dev_path, Split::test, "dev");
  return result;
}

inline IngestResult ingest_custom_text(const std::string& text,
                                       const DbSchema& schema) {
  IngestResult result;
  result.stats.n_databases = 1;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError("line " + std::to_string(lineno) + ": " + e.what());
    }
    auto field = [&](const char* name) -> std::string {
      if (!rec.contains(name) || !rec[name].is_string())
        throw DatasetError("line " + std::to_string(lineno) +
                           ": missing field '" + name + "'");
      return rec[name].get<std::string>();
    };
    QueryPair pair;
    pair.question = field("question");
    pair.gold_sql = field("sql");
    std::string split = field("split");
    if (split == "train")
      pair.split = Split::train;
    else if (split == "test")
      pair.split = Split::test;
    else
      throw DatasetError("line " + std::to_string(lineno) +
                         ": unknown split '" + split + "'");
    if (pair.question.empty() || pair.gold_sql.empty())
      throw DatasetError("line " + std::to_string(lineno) +
                         ": empty question or sql");
    pair.db_id = schema.db_id;
    if (pair.split == Split::train)
      ++result.stats.n_train;
    else
      ++result.stats.n_test;
    if (!detail::count_coverage(pair.gold_sql, schema, result.stats.coverage))
      ++result.stats.n_unparseable;
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

inline IngestResult ingest_custom(const std::string& path,
                                  const DbSchema& schema) {
  return ingest_custom_text(detail::read_file(path), schema);
}

inline std::string write_custom_jsonl(const std::vector<QueryPair>& pairs) {
  std::string out;
  for (const QueryPair& p : pairs) {
    nlohmann::ordered_json rec;
    rec["question"] = p.question;
    rec["sql"] = p.gold_sql;
    rec["split"] = split_name(p.split);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

// -- coverage report ------------------------------------------------------

struct CoverageReport {
  DatasetStats stats;
  std::vector<std::string> uncovered;  // sorted element keys below threshold
};

inline CoverageReport coverage_report(const std::vector<QueryPair>& pairs,
                                      const SchemaList& schemas,
                                      int threshold = 2) {
  CoverageReport report;
  std::map<std::string, const DbSchema*> used;
  for (const QueryPair& p : pairs) {
    if (p.split == Split::train)
      ++report.stats.n_train;
    else
      ++report.stats.n_test;
    const DbSchema* schema = find_schema(schemas, p.db_id);
    if (!schema) throw DatasetError("unknown db_id '" + p.db_id + "'");
    used.emplace(p.db_id, schema);
    if (!detail::count_coverage(p.gold_sql, *schema, report.stats.coverage))
      ++report.stats.n_unparseable;
  }
  report.stats.n_databases = used.size();
  for (const auto& [db_id, schema] : used)
    for (const Table& t : schema->tables) {
      std::string table_key = db_id + "." + t.name;
      if (report.stats.coverage[table_key] < threshold)
        report.uncovered.push_back(table_key);
      for (const Column& c : t.columns) {
        std::string col_key = table_key + "." + c.name;
        if (report.stats.coverage[col_key] < threshold)
          report.uncovered.push_back(col_key);
      }
    }
  std::sort(report.uncovered.begin(), report.uncovered.end());
  return report;
}

// -- prompts and training export -------------------------------------------

struct PromptOptions {
  bool include_schema = true;
};

namespace detail {

inline std::string escape_pipes(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

// The schema segment shared by prompts and translation requests:
// `<table>: <col>, <col> | <table>: ...` in schema order.
inline std::string prompt_schema_segment(const DbSchema& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.tables.size(); ++i) {
    if (i) out += " | ";
    out += detail::escape_pipes(schema.tables[i].name);
    out += ":";
    for (std::size_t j = 0; j < schema.tables[i].columns.size(); ++j) {
      out += j ? ", " : " ";
      out += detail::escape_pipes(schema.tables[i].columns[j].name);
    }
  }
  return out;
}

inline std::string serialize_prompt(const QueryPair& pair,
                                    const DbSchema& schema,
                                    PromptOptions opts = {}) {
  std::string out = "translate to SQL: " + detail::escape_pipes(pair.question) +
                    " | db: " + detail::escape_pipes(pair.db_id);
  if (opts.include_schema && !schema.tables.empty())
    out += " | " + prompt_schema_segment(schema);
  return out;
}

struct TrainingExample {
  std::string source;
  std::string target;
  bool operator==(const TrainingExample&) const = default;
};

inline std::vector<TrainingExample> assemble_training(
    const std::vector<QueryPair>& spider_pairs,
    const std::vector<QueryPair>& custom_pairs, const SchemaList& schemas,
    PromptOptions opts = {}) {
  std::vector<TrainingExample> out;
  auto add = [&](const QueryPair& p) {
    if (p.split != Split::train) return;
    const DbSchema* schema = find_schema(schemas, p.db_id);
    if (!schema) throw DatasetError("unknown db_id '" + p.db_id + "'");
    out.push_back(TrainingExample{serialize_prompt(p, *schema, opts),
                                  p.gold_sql});
  };
  for (const QueryPair& p : spider_pairs) add(p);
  for (const QueryPair& p : custom_pairs) add(p);
  return out;
}

inline constexpr const char* kTrainingTsvHeader = "# nl2sql-training-tsv v1";

namespace detail {

inline std::string escape_tsv(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string write_training_tsv(
    const std::vector<TrainingExample>& examples) {
  std::string out = kTrainingTsvHeader;
  out += '\n';
  for (const TrainingExample& e : examples) {
    out += detail::escape_tsv(e.source);
    out += '\t';
    out += detail::escape_tsv(e.target);
    out += '\n';
  }
  return out;
}

// -- prediction replay files -------------------------------------------------
//
// Two interchangeable layouts: JSON-lines {"index": i, "sql": "..."} with a
// dense 0..n-1 index, or plain text with one SQL statement per line.

inline std::vector<std::string> read_predictions_text(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  bool jsonl = false;
  for (const std::string& l : lines) {
    std::size_t at = l.find_first_not_of(" \t");
    if (at == std::string::npos) continue;
    jsonl = l[at] == '{';
    break;
  }
  if (!jsonl) return lines;
  std::vector<std::optional<std::string>> slots;
  std::size_t lineno = 0;
  for (const std::string& l : lines) {
    ++lineno;
    if (l.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(l);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError("predictions line " + std::to_string(lineno) + ": " +
                         e.what());
    }
    if (!rec.contains("index") || !rec["index"].is_number_unsigned() ||
        !rec.contains("sql") || !rec["sql"].is_string())
      throw DatasetError("predictions line " + std::to_string(lineno) +
                         ": expected {\"index\": n, \"sql\": \"...\"}");
    std::size_t index = rec["index"].get<std::size_t>();
    if (index >= slots.size()) slots.resize(index + 1);
    if (slots[index])
      throw AlignmentError("duplicate prediction index " +
                           std::to_string(index));
    slots[index] = rec["sql"].get<std::string>();
  }
  std::vector<std::string> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i])
      throw AlignmentError("missing prediction index " + std::to_string(i));
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

inline std::vector<std::string> read_predictions(const std::string& path) {
  return read_predictions_text(detail::read_file(path));
}

inline std::string write_predictions_jsonl(
    const std::vector<std::string>& predictions) {
  std::string out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    nlohmann::ordered_json rec;
    rec["index"] = i;
    rec["sql"] = predictions[i];
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace nl2sql
