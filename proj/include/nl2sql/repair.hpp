#pragma once

// Schema-aware post-correction: scan a generated query for table/column
// names that do not exist in the schema and splice in the nearest valid
// name. Context (table position vs column position, plus the FROM-clause
// scope) comes from the parse tree; distance is case-insensitive
// Levenshtein with an absolute threshold.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nl2sql/parser.hpp"
#include "nl2sql/schema.hpp"

namespace nl2sql {

inline int edit_distance(std::string_view a, std::string_view b) {
  std::string la = detail::ascii_lower(a);
  std::string lb = detail::ascii_lower(b);
  std::vector<int> prev(lb.size() + 1), cur(lb.size() + 1);
  for (std::size_t j = 0; j <= lb.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= la.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= lb.size(); ++j) {
      int subst = prev[j - 1] + (la[i - 1] == lb[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[lb.size()];
}

// Minimal distance wins; ties keep the earlier candidate (the list order is
// the scope ranking from candidate_names); absent when nothing is within
// the threshold.
inline std::optional<std::pair<std::string, int>> best_candidate(
    std::string_view name, const std::vector<std::string>& candidates,
    int threshold) {
  std::optional<std::pair<std::string, int>> best;
  for (const std::string& c : candidates) {
    int d = edit_distance(name, c);
    if (!best || d < best->second) best = {c, d};
  }
  if (best && best->second <= threshold) return best;
  return std::nullopt;
}

struct Edit {
  std::size_t token_index;
  std::size_t begin = 0;  // source character span of the replaced token
  std::size_t end = 0;
  std::string original;     // token text as written, quotes included
  std::string replacement;  // spliced text, quoted only if required
  int distance = 0;
  IdentifierContext context;
};

enum class RepairStatus { clean, repaired, unrepairable };

inline const char* repair_status_name(RepairStatus s) {
  switch (s) {
    case RepairStatus::clean: return "clean";
    case RepairStatus::repaired: return "repaired";
    case RepairStatus::unrepairable: return "unrepairable";
  }
  return "unrepairable";
}

struct RepairReport {
  std::string original_sql;
  std::string repaired_sql;
  std::vector<Edit> edits;
  RepairStatus status = RepairStatus::clean;
};

struct RepairOptions {
  int threshold = 2;
  // Also rewrite a qualifier that names a real table which lacks the
  // qualified column, when exactly one visible table has it.
  bool fix_qualifiers = false;
};

namespace detail {

inline bool plain_identifier(const std::string& name) {
  if (name.empty() || !is_ident_start(name[0])) return false;
  for (char c : name)
    if (!is_ident_char(c)) return false;
  if (is_keyword(ascii_upper(name))) return false;
  AggFn fn;
  if (is_agg_name(name, fn)) return false;  // would lex as a call head
  return true;
}

inline std::string identifier_text(const std::string& name) {
  return plain_identifier(name) ? name : "\"" + name + "\"";
}

// One FROM-clause binding: the name as written (or an alias), and the schema
// table it denotes after phase A — empty when the table stayed unknown.
struct Binding {
  std::string written_lower;
  std::string written;  // original casing, for use as a replacement
  std::string table;    // schema casing; empty if unresolved
  bool repaired = false;
};

class Repairer {
 public:
  Repairer(const DbSchema& schema, RepairOptions opts)
      : schema_(schema), opts_(opts) {}

  RepairReport run(const std::string& sql) {
    RepairReport report;
    report.original_sql = sql;
    ParsedQuery parsed;
    try {
      parsed = parse_full(sql);
    } catch (const LexError&) {
      report.repaired_sql = sql;
      report.status = RepairStatus::unrepairable;
      return report;
    } catch (const SyntaxError&) {
      report.repaired_sql = sql;
      report.status = RepairStatus::unrepairable;
      return report;
    }
    tokens_ = &parsed.tokens;
    scopes_ = &parsed.scopes;
    bindings_.assign(parsed.scopes.size(), {});

    resolve_tables(parsed);
    resolve_columns(parsed);

    std::sort(edits_.begin(), edits_.end(),
              [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
    report.edits = std::move(edits_);
    report.repaired_sql = splice(sql, report.edits);
    report.status = failed_ ? RepairStatus::unrepairable
                   : report.edits.empty() ? RepairStatus::clean
                                          : RepairStatus::repaired;
    return report;
  }

 private:
  // -- phase A: FROM-clause tables --------------------------------------

  void resolve_tables(const ParsedQuery& parsed) {
    // Aliases bind to the table reference they follow in the use stream.
    std::unordered_map<std::size_t, std::string> alias_of;  // table tok -> alias
    for (std::size_t i = 0; i + 1 < parsed.uses.size(); ++i)
      if (parsed.uses[i].role == IdentifierRole::table_ref &&
          parsed.uses[i + 1].role == IdentifierRole::alias_def)
        alias_of[parsed.uses[i].token] = token_name(parsed.uses[i + 1].token);

    for (std::size_t scope = 0; scope < parsed.scopes.size(); ++scope) {
      for (std::size_t tok : parsed.scopes[scope].from_table_tokens) {
        std::string written = token_name(tok);
        Binding binding;
        binding.written_lower = ascii_lower(written);
        binding.written = written;
        if (const Table* t = schema_.find_table(written)) {
          binding.table = t->name;
        } else {
          auto cand = candidate_names(schema_, TablePosition{});
          if (auto hit = best_candidate(written, cand, opts_.threshold)) {
            binding.table = hit->first;
            binding.repaired = true;
            add_edit(tok, hit->first, hit->second, TablePosition{});
          } else {
            failed_ = true;
          }
        }
        if (auto it = alias_of.find(tok); it != alias_of.end())
          bindings_[scope].push_back(Binding{ascii_lower(it->second),
                                             it->second, binding.table,
                                             false});
        if (binding.repaired)
          // The corrected spelling is also addressable as a qualifier.
          bindings_[scope].push_back(Binding{ascii_lower(binding.table),
                                             binding.table, binding.table,
                                             false});
        bindings_[scope].push_back(std::move(binding));
      }
    }
  }

  // -- phase B: qualifiers and columns, left to right --------------------

  void resolve_columns(const ParsedQuery& parsed) {
    for (std::size_t i = 0; i < parsed.uses.size(); ++i) {
      const IdentifierUse& use = parsed.uses[i];
      if (use.role == IdentifierRole::qualifier)
        resolve_qualifier(use);
      else if (use.role == IdentifierRole::column_ref)
        resolve_column(use);
    }
  }

  void resolve_qualifier(const IdentifierUse& use) {
    std::string written = token_name(use.token);
    std::string low = ascii_lower(written);
    if (const Binding* b = lookup_binding(use.scope, low)) {
      // Known binder. If phase A respelled the table and the qualifier still
      // carries the old spelling, rewrite it to match.
      if (b->repaired && low != ascii_lower(b->table))
        add_edit(use.token, b->table, edit_distance(written, b->table),
                 TablePosition{});
      return;
    }
    if (schema_.find_table(written)) return;  // real table, just not in FROM
    // Unknown qualifier: candidates are scope binders first, then tables.
    // A respelled FROM token's old spelling is not offered — it no longer
    // appears in the repaired text.
    std::vector<std::string> cand;
    for (int s = use.scope; s >= 0; s = (*scopes_)[s].parent)
      for (const Binding& b : bindings_[s])
        if (!b.table.empty() && !b.repaired) cand.push_back(b.written);
    for (const std::string& t : candidate_names(schema_, TablePosition{}))
      cand.push_back(t);
    if (auto hit = best_candidate(written, cand, opts_.threshold))
      add_edit(use.token, hit->first, hit->second, TablePosition{});
    else
      failed_ = true;
  }

  void resolve_column(const IdentifierUse& use) {
    std::string written = token_name(use.token);
    // Visibility: the qualifier's table when qualified, otherwise every
    // table bound on the scope chain.
    std::vector<std::string> visible;
    bool qualified = use.qualifier_token != static_cast<std::size_t>(-1);
    if (qualified) {
      std::string qual = qualifier_table(use);
      if (!qual.empty()) visible.push_back(qual);
    } else {
      for (int s = use.scope; s >= 0; s = (*scopes_)[s].parent)
        for (const Binding& b : bindings_[s])
          if (!b.table.empty() &&
              std::find(visible.begin(), visible.end(), b.table) ==
                  visible.end())
            visible.push_back(b.table);
    }
    if (column_exists(visible, written, qualified)) return;
    if (qualified && opts_.fix_qualifiers && !visible.empty() &&
        resolve_identifier(schema_, written).kind == ResolvedKind::column) {
      fix_qualifier(use, written);
      return;
    }
    ColumnPosition context{visible};
    auto cand = candidate_names(schema_, context);
    if (auto hit = best_candidate(written, cand, opts_.threshold)) {
      // Distance 0: the spelling is already a schema column, merely owned by
      // a table other than the written qualifier. Re-qualification is the
      // opt-in fix above; respelling has nothing to do.
      if (hit->second > 0)
        add_edit(use.token, hit->first, hit->second, std::move(context));
    } else {
      failed_ = true;
    }
  }

  // A column is in place if its table has it (qualified) or any table in the
  // whole schema has it (bare; out-of-scope columns are a semantic issue,
  // not a spelling one).
  bool column_exists(const std::vector<std::string>& visible,
                     const std::string& name, bool qualified) const {
    if (qualified && !visible.empty()) {
      const Table* t = schema_.find_table(visible.front());
      if (!t) return false;
      std::string low = ascii_lower(name);
      for (const Column& c : t->columns)
        if (ascii_lower(c.name) == low) return true;
      return false;
    }
    return resolve_identifier(schema_, name).kind == ResolvedKind::column;
  }

  // --repair-qualifiers: the column is real but lives elsewhere; repoint the
  // qualifier when exactly one scope-visible table owns the column.
  void fix_qualifier(const IdentifierUse& use, const std::string& column) {
    std::vector<std::string> owners;
    std::string low = ascii_lower(column);
    for (int s = use.scope; s >= 0; s = (*scopes_)[s].parent)
      for (const Binding& b : bindings_[s]) {
        if (b.table.empty()) continue;
        const Table* t = schema_.find_table(b.table);
        if (!t) continue;
        for (const Column& c : t->columns)
          if (ascii_lower(c.name) == low &&
              std::find(owners.begin(), owners.end(), b.table) ==
                  owners.end())
            owners.push_back(b.table);
      }
    if (owners.size() != 1) {
      failed_ = true;
      return;
    }
    std::string written = token_name(use.qualifier_token);
    add_edit(use.qualifier_token, owners.front(),
             edit_distance(written, owners.front()), TablePosition{});
  }

  // -- helpers ------------------------------------------------------------

  std::string token_name(std::size_t tok) const {
    const SqlToken& t = (*tokens_)[tok];
    return t.kind == TokenKind::quoted_identifier ? unquote_identifier(t.text)
                                                  : t.text;
  }

  const Binding* lookup_binding(int scope, const std::string& low) const {
    for (int s = scope; s >= 0; s = (*scopes_)[s].parent)
      for (const Binding& b : bindings_[s])
        if (b.written_lower == low) return &b;
    return nullptr;
  }

  // The schema table a column's qualifier denotes, after phase A repairs.
  std::string qualifier_table(const IdentifierUse& use) const {
    std::string low = ascii_lower(token_name(use.qualifier_token));
    // A pending edit on the qualifier token supersedes the written text.
    for (const Edit& e : edits_)
      if (e.token_index == use.qualifier_token) low = ascii_lower(e.replacement);
    if (const Binding* b = lookup_binding(use.scope, low))
      return b->table;
    if (const Table* t = schema_.find_table(low)) return t->name;
    return "";
  }

  void add_edit(std::size_t tok, const std::string& name, int distance,
                IdentifierContext context) {
    const SqlToken& t = (*tokens_)[tok];
    Edit e;
    e.token_index = tok;
    e.begin = t.begin;
    e.end = t.end;
    e.original = t.text;
    e.replacement = identifier_text(name);
    e.distance = distance;
    e.context = std::move(context);
    edits_.push_back(std::move(e));
  }

  static std::string splice(const std::string& sql,
                            const std::vector<Edit>& edits) {
    std::string out;
    std::size_t pos = 0;
    for (const Edit& e : edits) {
      out.append(sql, pos, e.begin - pos);
      out += e.replacement;
      pos = e.end;
    }
    out.append(sql, pos, std::string::npos);
    return out;
  }

  const DbSchema& schema_;
  RepairOptions opts_;
  const std::vector<SqlToken>* tokens_ = nullptr;
  const std::vector<ScopeInfo>* scopes_ = nullptr;
  std::vector<std::vector<Binding>> bindings_;
  std::vector<Edit> edits_;
  bool failed_ = false;
};

}  // namespace detail

inline RepairReport repair(const std::string& sql, const DbSchema& schema,
                           RepairOptions opts = {}) {
  return detail::Repairer(schema, opts).run(sql);
}

}  // namespace nl2sql
