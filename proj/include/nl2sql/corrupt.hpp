#pragma once

// Seeded corruption generator for repair stress corpora.
//
// Takes a schema-valid query and mutates exactly one schema-resolving
// identifier (a table reference, a column reference, or a table-name
// qualifier) by a bounded number of random character edits. Generation only
// accepts a mutation when the original spelling remains the unique nearest
// name in the candidate set a threshold-limited fuzzy match consults, so a
// corruption produced here is restorable to the byte-exact original by
// construction. Alias definitions are never mutated: an alias is not a
// schema element, so no dictionary exists to restore it from.

#include <nl2sql/lexer.hpp>
#include <nl2sql/parser.hpp>
#include <nl2sql/repair.hpp>
#include <nl2sql/schema.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nl2sql {

struct Corruption {
  std::string original_sql;
  std::string corrupted_sql;
  std::string original_token;
  std::string corrupted_token;
  std::size_t token_index = 0;  // token position of the mutated identifier
  int distance = 0;             // edit distance corrupted -> original
};

namespace detail {

// One mutable identifier position plus the candidate dictionary that a
// fuzzy match would consult for it.
struct CorruptionSite {
  std::size_t token_index;
  std::vector<std::string> candidates;
};

inline const Table* table_by_name(const DbSchema& schema,
                                  const std::string& name) {
  return schema.find_table(name);
}

// Collect every mutation-eligible identifier in the query. A site is
// eligible only when the written name resolves exactly in the schema and its
// candidate dictionary is independent of spelling accidents:
//   - table references anywhere in FROM,
//   - column references whose visible-table set is recoverable (bare columns
//     in scopes whose FROM tables are all real, or columns qualified by a
//     real table name or by an alias of one),
//   - qualifiers written as real table names, in queries that bind no
//     aliases (alias bindings would enlarge the qualifier dictionary).
inline std::vector<CorruptionSite> corruption_sites(const ParsedQuery& query,
                                                    const DbSchema& schema) {
  std::vector<CorruptionSite> sites;
  bool has_alias = false;
  for (const IdentifierUse& use : query.uses)
    if (use.role == IdentifierRole::alias_def) has_alias = true;

  // alias (lowercase) -> underlying table name, mirroring how consecutive
  // table/alias identifier uses pair up in FROM clauses.
  std::map<std::string, std::string> alias_table;
  for (std::size_t i = 0; i + 1 < query.uses.size(); ++i) {
    const IdentifierUse& t = query.uses[i];
    const IdentifierUse& a = query.uses[i + 1];
    if (t.role == IdentifierRole::table_ref &&
        a.role == IdentifierRole::alias_def && a.scope == t.scope) {
      const std::string& table_text = query.tokens[t.token].text;
      if (table_by_name(schema, table_text))
        alias_table[ascii_lower(query.tokens[a.token].text)] = table_text;
    }
  }

  auto scope_tables = [&](int scope) -> std::optional<std::vector<std::string>> {
    std::vector<std::string> visible;
    for (int s = scope; s >= 0; s = query.scopes[s].parent) {
      for (std::size_t tok : query.scopes[s].from_table_tokens) {
        const Table* table = table_by_name(schema, query.tokens[tok].text);
        if (!table) return std::nullopt;  // scope not fully schema-resolved
        bool seen = false;
        for (const std::string& v : visible)
          if (ascii_lower(v) == ascii_lower(table->name)) seen = true;
        if (!seen) visible.push_back(table->name);
      }
    }
    return visible;
  };

  for (const IdentifierUse& use : query.uses) {
    const SqlToken& tok = query.tokens[use.token];
    if (!plain_identifier(tok.text)) continue;
    switch (use.role) {
      case IdentifierRole::table_ref: {
        if (!table_by_name(schema, tok.text)) break;
        sites.push_back({use.token, candidate_names(schema, TablePosition{})});
        break;
      }
      case IdentifierRole::qualifier: {
        if (has_alias) break;
        if (!table_by_name(schema, tok.text)) break;
        sites.push_back({use.token, candidate_names(schema, TablePosition{})});
        break;
      }
      case IdentifierRole::column_ref: {
        if (tok.text == "*") break;
        std::vector<std::string> visible;
        if (use.qualifier_token != static_cast<std::size_t>(-1)) {
          const std::string& qual = query.tokens[use.qualifier_token].text;
          const Table* owner = table_by_name(schema, qual);
          if (!owner) {
            auto it = alias_table.find(ascii_lower(qual));
            if (it == alias_table.end()) break;
            owner = table_by_name(schema, it->second);
          }
          if (!owner) break;
          bool has_col = false;
          for (const Column& c : owner->columns)
            if (ascii_lower(c.name) == ascii_lower(tok.text)) has_col = true;
          if (!has_col) break;
          visible = {owner->name};
        } else {
          auto tables = scope_tables(use.scope);
          if (!tables) break;
          visible = std::move(*tables);
          Resolution r = resolve_identifier(schema, tok.text);
          if (r.kind != ResolvedKind::column) break;
        }
        sites.push_back(
            {use.token, candidate_names(schema, ColumnPosition{visible})});
        break;
      }
      case IdentifierRole::alias_def:
        break;
    }
  }
  return sites;
}

// Apply `ops` random single-character edits (insert / delete / substitute
// over lowercase letters) to a copy of `name`.
inline std::string mutate_name(const std::string& name, int ops,
                               std::mt19937& rng) {
  std::string s = name;
  std::uniform_int_distribution<int> letter(0, 25);
  for (int i = 0; i < ops; ++i) {
    std::uniform_int_distribution<int> op_dist(0, s.size() > 1 ? 2 : 1);
    int op = op_dist(rng);
    if (op == 0) {  // insert
      std::uniform_int_distribution<std::size_t> pos(0, s.size());
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos(rng)),
               static_cast<char>('a' + letter(rng)));
    } else if (op == 1) {  // substitute
      std::uniform_int_distribution<std::size_t> pos(0, s.size() - 1);
      std::size_t p = pos(rng);
      char replacement = static_cast<char>('a' + letter(rng));
      char current = s[p] >= 'A' && s[p] <= 'Z'
                         ? static_cast<char>(s[p] - 'A' + 'a')
                         : s[p];
      if (current == replacement)
        replacement = replacement == 'z' ? 'a' : static_cast<char>(replacement + 1);
      s[p] = replacement;
    } else {  // delete
      std::uniform_int_distribution<std::size_t> pos(0, s.size() - 1);
      s.erase(s.begin() + static_cast<std::ptrdiff_t>(pos(rng)));
    }
  }
  return s;
}

// True when `mutant` is a usable corruption of `original` against
// `candidates`: a plain identifier within (1, threshold] edits of the
// original, and strictly closer to the original than to any other candidate.
inline bool corruption_ok(const std::string& mutant,
                          const std::string& original,
                          const std::vector<std::string>& candidates,
                          int threshold) {
  if (!plain_identifier(mutant)) return false;
  int d = edit_distance(mutant, original);
  if (d < 1 || d > threshold) return false;
  std::string original_lower = ascii_lower(original);
  for (const std::string& c : candidates) {
    if (ascii_lower(c) == original_lower) continue;
    if (edit_distance(mutant, c) <= d) return false;
  }
  return true;
}

}  // namespace detail

// Mutate one eligible identifier of `sql`. Returns nothing when the query
// has no eligible site or no acceptable mutation was found in `max_tries`
// attempts.
inline std::optional<Corruption> corrupt_query(const std::string& sql,
                                               const DbSchema& schema,
                                               std::mt19937& rng,
                                               int threshold = 2,
                                               int max_tries = 64) {
  ParsedQuery parsed;
  try {
    parsed = parse_full(sql);
  } catch (const LexError&) {
    return std::nullopt;
  } catch (const SyntaxError&) {
    return std::nullopt;
  }
  std::vector<detail::CorruptionSite> sites =
      detail::corruption_sites(parsed, schema);
  if (sites.empty()) return std::nullopt;

  std::uniform_int_distribution<std::size_t> site_dist(0, sites.size() - 1);
  std::uniform_int_distribution<int> ops_dist(1, threshold);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    const detail::CorruptionSite& site = sites[site_dist(rng)];
    const SqlToken& tok = parsed.tokens[site.token_index];
    std::string mutant = detail::mutate_name(tok.text, ops_dist(rng), rng);
    if (!detail::corruption_ok(mutant, tok.text, site.candidates, threshold))
      continue;
    Corruption c;
    c.original_sql = sql;
    c.corrupted_sql =
        sql.substr(0, tok.begin) + mutant + sql.substr(tok.end);
    c.original_token = tok.text;
    c.corrupted_token = mutant;
    c.token_index = site.token_index;
    c.distance = edit_distance(mutant, tok.text);
    return c;
  }
  return std::nullopt;
}

// Cycle through `corpus` generating corruptions until `count` are collected.
// Deterministic for a fixed seed. Throws when the corpus cannot supply any
// corruption at all (e.g. every query is alias-only projection of unknown
// names), to avoid looping forever.
inline std::vector<Corruption> generate_corruptions(
    const std::vector<std::string>& corpus, const DbSchema& schema,
    std::uint32_t seed, std::size_t count, int threshold = 2) {
  if (corpus.empty())
    throw std::invalid_argument("corruption corpus is empty");
  std::mt19937 rng(seed);
  std::vector<Corruption> out;
  std::size_t barren_streak = 0;
  for (std::size_t i = 0; out.size() < count; ++i) {
    const std::string& sql = corpus[i % corpus.size()];
    std::optional<Corruption> c = corrupt_query(sql, schema, rng, threshold);
    if (c) {
      out.push_back(std::move(*c));
      barren_streak = 0;
    } else if (++barren_streak > corpus.size()) {
      throw std::runtime_error("no corruptible identifier in corpus");
    }
  }
  return out;
}

// Read a one-query-per-line corpus file; blank lines and lines starting with
// `--` are skipped.
inline std::vector<std::string> load_query_corpus(const std::string& path) {
  std::string text = detail::read_file(path);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line.compare(first, 2, "--") != 0)
      out.push_back(line.substr(first));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace nl2sql
