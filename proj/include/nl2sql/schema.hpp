#pragma once

// Database schema model: Spider tables.json loader, a flat line-oriented
// schema format, and the name-lookup services the repair engine builds on.

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "nl2sql/lexer.hpp"

#include <nlohmann/json.hpp>

namespace nl2sql {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColType { text, number, time, boolean, other };

inline const char* col_type_name(ColType t) {
  switch (t) {
    case ColType::text: return "text";
    case ColType::number: return "number";
    case ColType::time: return "time";
    case ColType::boolean: return "boolean";
    case ColType::other: return "other";
  }
  return "other";
}

// Spider spells the catch-all bucket "others"; both spellings map to other.
inline ColType col_type_from(std::string_view name) {
  std::string low = detail::ascii_lower(name);
  if (low == "text") return ColType::text;
  if (low == "number") return ColType::number;
  if (low == "time") return ColType::time;
  if (low == "boolean") return ColType::boolean;
  return ColType::other;
}

struct Column {
  std::string name;
  ColType col_type = ColType::other;
  bool operator==(const Column&) const = default;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  bool operator==(const Table&) const = default;
};

struct KeyRef {
  std::string table;
  std::string column;
  bool operator==(const KeyRef&) const = default;
};

struct DbSchema {
  std::string db_id;
  std::vector<Table> tables;
  std::vector<KeyRef> primary_keys;
  std::vector<std::pair<KeyRef, KeyRef>> foreign_keys;
  bool operator==(const DbSchema&) const = default;

  const Table* find_table(std::string_view name) const {
    std::string low = detail::ascii_lower(name);
    for (const Table& t : tables)
      if (detail::ascii_lower(t.name) == low) return &t;
    return nullptr;
  }

  void validate() const {
    auto bad = [&](const std::string& why) {
      throw SchemaError("schema '" + db_id + "': " + why);
    };
    std::unordered_set<std::string> seen_tables;
    for (const Table& t : tables) {
      if (t.name.empty()) bad("empty table name");
      if (t.columns.empty()) bad("table '" + t.name + "' has no columns");
      if (!seen_tables.insert(detail::ascii_lower(t.name)).second)
        bad("duplicate table name '" + t.name + "'");
      std::unordered_set<std::string> seen_cols;
      for (const Column& c : t.columns) {
        if (c.name.empty()) bad("empty column name in table '" + t.name + "'");
        if (!seen_cols.insert(detail::ascii_lower(c.name)).second)
          bad("duplicate column '" + c.name + "' in table '" + t.name + "'");
      }
    }
    auto check_ref = [&](const KeyRef& ref, const char* what) {
      const Table* t = find_table(ref.table);
      if (!t) bad(std::string(what) + " references missing table '" +
                  ref.table + "'");
      std::string low = detail::ascii_lower(ref.column);
      for (const Column& c : t->columns)
        if (detail::ascii_lower(c.name) == low) return;
      bad(std::string(what) + " references missing column '" + ref.table +
          "." + ref.column + "'");
    };
    for (const KeyRef& pk : primary_keys) check_ref(pk, "primary key");
    for (const auto& [from, to] : foreign_keys) {
      check_ref(from, "foreign key");
      check_ref(to, "foreign key");
    }
  }
};

// -- name resolution ---------------------------------------------------------

enum class ResolvedKind { table, column, unknown };

struct Resolution {
  ResolvedKind kind = ResolvedKind::unknown;
  std::string name;                 // schema-stored casing of the match
  std::vector<std::string> owners;  // owning tables when kind == column
};

inline Resolution resolve_identifier(const DbSchema& schema,
                                     std::string_view name) {
  if (name == "*") return Resolution{ResolvedKind::unknown, "", {}};
  std::string low = detail::ascii_lower(name);
  for (const Table& t : schema.tables)
    if (detail::ascii_lower(t.name) == low)
      return Resolution{ResolvedKind::table, t.name, {}};
  Resolution r;
  for (const Table& t : schema.tables)
    for (const Column& c : t.columns)
      if (detail::ascii_lower(c.name) == low) {
        r.kind = ResolvedKind::column;
        if (r.name.empty()) r.name = c.name;
        r.owners.push_back(t.name);
      }
  return r;
}

// -- candidate enumeration ---------------------------------------------------

struct TablePosition {
  bool operator==(const TablePosition&) const = default;
};

struct ColumnPosition {
  std::vector<std::string> visible_tables;  // FROM-clause scope
  bool operator==(const ColumnPosition&) const = default;
};

using IdentifierContext = std::variant<TablePosition, ColumnPosition>;

// Table position: every table name, schema order. Column position: columns
// of in-scope tables first, then the rest; schema declaration order within
// each rank; case-insensitive duplicates keep their first occurrence.
inline std::vector<std::string> candidate_names(
    const DbSchema& schema, const IdentifierContext& context) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto push = [&](const std::string& name) {
    if (seen.insert(detail::ascii_lower(name)).second) out.push_back(name);
  };
  if (std::holds_alternative<TablePosition>(context)) {
    for (const Table& t : schema.tables) push(t.name);
    return out;
  }
  const auto& pos = std::get<ColumnPosition>(context);
  std::unordered_set<std::string> visible;
  for (const std::string& t : pos.visible_tables)
    visible.insert(detail::ascii_lower(t));
  for (const Table& t : schema.tables)
    if (visible.count(detail::ascii_lower(t.name)))
      for (const Column& c : t.columns) push(c.name);
  for (const Table& t : schema.tables)
    if (!visible.count(detail::ascii_lower(t.name)))
      for (const Column& c : t.columns) push(c.name);
  return out;
}

// -- file helpers ------------------------------------------------------------

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace detail

// -- Spider tables.json ------------------------------------------------------

inline std::vector<DbSchema> load_spider_tables_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("tables.json parse error at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_array()) throw SchemaError("tables.json: top level must be an array");
  std::vector<DbSchema> out;
  for (const auto& entry : doc) {
    DbSchema schema;
    schema.db_id = entry.at("db_id").get<std::string>();
    const auto& table_names = entry.at("table_names_original");
    const auto& column_names = entry.at("column_names_original");
    const auto& column_types = entry.at("column_types");
    for (const auto& name : table_names)
      schema.tables.push_back(Table{name.get<std::string>(), {}});
    // Flat column list; entry 0 is the [-1, "*"] sentinel, excluded from
    // tables but still counted when resolving index-based keys.
    std::vector<KeyRef> flat;
    for (std::size_t i = 0; i < column_names.size(); ++i) {
      const auto& pair = column_names[i];
      long long table_index = pair.at(0).get<long long>();
      std::string col_name = pair.at(1).get<std::string>();
      if (table_index < 0) {
        flat.push_back(KeyRef{});  // sentinel: resolves to nothing
        continue;
      }
      if (static_cast<std::size_t>(table_index) >= schema.tables.size())
        throw SchemaError("schema '" + schema.db_id + "': column '" +
                          col_name + "' references table index " +
                          std::to_string(table_index) + " out of range");
      Table& owner = schema.tables[static_cast<std::size_t>(table_index)];
      ColType type = i < column_types.size()
                         ? col_type_from(column_types[i].get<std::string>())
                         : ColType::other;
      owner.columns.push_back(Column{col_name, type});
      flat.push_back(KeyRef{owner.name, col_name});
    }
    auto resolve_index = [&](long long idx, const char* what) -> KeyRef {
      if (idx <= 0 || static_cast<std::size_t>(idx) >= flat.size() ||
          flat[static_cast<std::size_t>(idx)].table.empty())
        throw SchemaError("schema '" + schema.db_id + "': " + what +
                          " column index " + std::to_string(idx) +
                          " does not resolve");
      return flat[static_cast<std::size_t>(idx)];
    };
    if (entry.contains("primary_keys"))
      for (const auto& pk : entry["primary_keys"])
        schema.primary_keys.push_back(
            resolve_index(pk.get<long long>(), "primary key"));
    if (entry.contains("foreign_keys"))
      for (const auto& fk : entry["foreign_keys"])
        schema.foreign_keys.emplace_back(
            resolve_index(fk.at(0).get<long long>(), "foreign key"),
            resolve_index(fk.at(1).get<long long>(), "foreign key"));
    schema.validate();
    out.push_back(std::move(schema));
  }
  return out;
}

inline std::vector<DbSchema> load_spider_tables(const std::string& path) {
  return load_spider_tables_text(detail::read_file(path));
}

// -- flat schema format ------------------------------------------------------
//
//   db <id>
//   table <name>
//     column <name> <type>
//   pk <table>.<column>
//   fk <table>.<column> -> <table>.<column>
//
// Names carry no whitespace; '#' starts a comment line.

inline std::string to_flat(const DbSchema& schema) {
  std::ostringstream out;
  out << "db " << schema.db_id << "\n";
  for (const Table& t : schema.tables) {
    out << "table " << t.name << "\n";
    for (const Column& c : t.columns)
      out << "  column " << c.name << " " << col_type_name(c.col_type) << "\n";
  }
  for (const KeyRef& pk : schema.primary_keys)
    out << "pk " << pk.table << "." << pk.column << "\n";
  for (const auto& [from, to] : schema.foreign_keys)
    out << "fk " << from.table << "." << from.column << " -> " << to.table
        << "." << to.column << "\n";
  return out.str();
}

inline DbSchema from_flat(const std::string& text) {
  DbSchema schema;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) {
    throw SchemaError("flat schema line " + std::to_string(lineno) + ": " +
                      why);
  };
  auto split_ref = [&](const std::string& word) -> KeyRef {
    std::size_t dot = word.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == word.size())
      bad("expected table.column, got '" + word + "'");
    return KeyRef{word.substr(0, dot), word.substr(dot + 1)};
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    std::string head;
    if (!(words >> head) || head[0] == '#') continue;
    if (head == "db") {
      if (!(words >> schema.db_id)) bad("db line needs an identifier");
    } else if (head == "table") {
      std::string name;
      if (!(words >> name)) bad("table line needs a name");
      schema.tables.push_back(Table{name, {}});
    } else if (head == "column") {
      if (schema.tables.empty()) bad("column line before any table");
      std::string name, type;
      if (!(words >> name >> type)) bad("column line needs name and type");
      schema.tables.back().columns.push_back(
          Column{name, col_type_from(type)});
    } else if (head == "pk") {
      std::string ref;
      if (!(words >> ref)) bad("pk line needs table.column");
      schema.primary_keys.push_back(split_ref(ref));
    } else if (head == "fk") {
      std::string from, arrow, to;
      if (!(words >> from >> arrow >> to) || arrow != "->")
        bad("fk line needs 'table.column -> table.column'");
      schema.foreign_keys.emplace_back(split_ref(from), split_ref(to));
    } else {
      bad("unknown directive '" + head + "'");
    }
    std::string extra;
    if (words >> extra && extra[0] != '#') bad("unexpected trailing '" + extra + "'");
  }
  schema.validate();
  return schema;
}

inline DbSchema load_flat_file(const std::string& path) {
  return from_flat(detail::read_file(path));
}

inline void save_flat_file(const DbSchema& schema, const std::string& path) {
  detail::write_file(path, to_flat(schema));
}

}  // namespace nl2sql
