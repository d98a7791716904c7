#pragma once

// Structural decomposition of a query into normalized per-clause component
// multisets. Fragments are serialized with identifiers case-folded and table
// aliases resolved away, so component comparison is insensitive to conjunct
// order, identifier casing, and alias naming.

#include <algorithm>
#include <string>
#include <vector>

#include "nl2sql/ast.hpp"

namespace nl2sql {

struct ComponentSet {
  // Sorted multisets of canonical fragment strings. DISTINCT is carried as a
  // "DISTINCT " prefix on every select item so it participates in matching.
  std::vector<std::string> select_items;
  std::vector<std::string> from_tables;
  std::vector<std::string> join_conditions;
  std::vector<std::string> where_conjuncts;
  std::vector<std::string> group_by_keys;
  std::vector<std::string> having_conjuncts;
  // Order-by keys keep their written order: "a ASC, b DESC" is not the same
  // sort as "b DESC, a ASC".
  std::vector<std::string> order_by_keys;
  std::string limit_value;  // empty when the query has no LIMIT
  // Set-operation arms, in order; kinds are "UNION", "UNION ALL", etc.
  std::vector<std::string> set_arm_kinds;
  std::vector<ComponentSet> set_arms;

  bool operator==(const ComponentSet&) const = default;
};

namespace detail {

// Top-level AND conjuncts of a condition; an OR node is a single conjunct.
inline std::vector<const Condition*> and_conjuncts(const Condition& c) {
  if (const auto* log = std::get_if<Logical>(&c.node);
      log && log->op == LogicalOp::and_) {
    std::vector<const Condition*> out;
    out.reserve(log->children.size());
    for (const Condition& child : log->children) out.push_back(&child);
    return out;
  }
  return {&c};
}

inline ComponentSet decompose_select(const SelectStmt& s) {
  Writer w(SerializeOptions{/*fold_identifiers=*/true,
                            /*resolve_aliases=*/true});
  w.push_scope(s);
  ComponentSet cs;
  for (const Expr& item : s.items) {
    std::string text = w.write_expr(item);
    cs.select_items.push_back(s.distinct ? "DISTINCT " + text : text);
  }
  auto add_table = [&](const TableRef& t) {
    cs.from_tables.push_back(ascii_lower(t.table));
  };
  for (const TableRef& t : s.from) add_table(t);
  for (const Join& j : s.joins) {
    add_table(j.table);
    if (j.on)
      for (const Condition* part : and_conjuncts(*j.on))
        cs.join_conditions.push_back(w.write_condition(*part));
  }
  if (s.where)
    for (const Condition* part : and_conjuncts(*s.where))
      cs.where_conjuncts.push_back(w.write_condition(*part));
  for (const Expr& key : s.group_by)
    cs.group_by_keys.push_back(w.write_expr(key));
  if (s.having)
    for (const Condition* part : and_conjuncts(*s.having))
      cs.having_conjuncts.push_back(w.write_condition(*part));
  for (const OrderKey& key : s.order_by)
    cs.order_by_keys.push_back(w.write_order_key(key));
  if (s.limit) cs.limit_value = *s.limit;
  w.pop_scope();
  std::sort(cs.select_items.begin(), cs.select_items.end());
  std::sort(cs.from_tables.begin(), cs.from_tables.end());
  std::sort(cs.join_conditions.begin(), cs.join_conditions.end());
  std::sort(cs.where_conjuncts.begin(), cs.where_conjuncts.end());
  std::sort(cs.group_by_keys.begin(), cs.group_by_keys.end());
  std::sort(cs.having_conjuncts.begin(), cs.having_conjuncts.end());
  return cs;
}

}  // namespace detail

inline ComponentSet decompose(const SqlAst& ast) {
  ComponentSet cs = detail::decompose_select(ast.head);
  for (const SetArm& arm : ast.arms) {
    std::string kind = set_op_name(arm.kind);
    if (arm.all) kind += " ALL";
    cs.set_arm_kinds.push_back(std::move(kind));
    cs.set_arms.push_back(detail::decompose_select(arm.stmt));
  }
  return cs;
}

}  // namespace nl2sql
