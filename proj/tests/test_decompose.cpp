#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "nl2sql/decompose.hpp"
#include "nl2sql/parser.hpp"

using nl2sql::ComponentSet;
using nl2sql::decompose;
using nl2sql::parse;

namespace {

ComponentSet comp(const std::string& sql) { return decompose(parse(sql)); }

bool same(const std::string& a, const std::string& b) {
  return comp(a) == comp(b);
}

}  // namespace

TEST_CASE("conjunct order does not matter") {
  CHECK(same("SELECT name FROM stores WHERE city = 'PDX' AND region = 'west'",
             "SELECT name FROM stores WHERE region = 'west' AND city = 'PDX'"));
  // Three conjuncts, rotated.
  CHECK(same("SELECT a FROM t WHERE x = 1 AND y = 2 AND z = 3",
             "SELECT a FROM t WHERE z = 3 AND x = 1 AND y = 2"));
}

TEST_CASE("an OR group is one conjunct, not reorderable inside") {
  ComponentSet cs = comp("SELECT a FROM t WHERE x = 1 OR y = 2");
  REQUIRE(cs.where_conjuncts.size() == 1);
  CHECK(cs.where_conjuncts[0] == "x = 1 OR y = 2");
  // The OR operands keep their written order: a disjunction is treated as an
  // opaque unit, so swapping its sides produces a different fragment.
  CHECK_FALSE(same("SELECT a FROM t WHERE x = 1 OR y = 2",
                   "SELECT a FROM t WHERE y = 2 OR x = 1"));
}

TEST_CASE("select item order does not matter") {
  CHECK(same("SELECT city, name FROM stores", "SELECT name, city FROM stores"));
  ComponentSet cs = comp("SELECT name, city FROM stores");
  REQUIRE(cs.select_items.size() == 2);
  CHECK(cs.select_items[0] == "city");  // sorted multiset
  CHECK(cs.select_items[1] == "name");
}

TEST_CASE("identifier casing does not matter") {
  CHECK(same("SELECT LOCATION FROM METERS WHERE INSTALL_YEAR = 2018",
             "select location from meters where install_year = 2018"));
  ComponentSet cs = comp("SELECT Location FROM Meters");
  CHECK(cs.select_items == std::vector<std::string>{"location"});
  CHECK(cs.from_tables == std::vector<std::string>{"meters"});
}

TEST_CASE("aliases are resolved away") {
  // Same query under three spellings: aliased, re-aliased, unaliased.
  const char* aliased =
      "SELECT m.location FROM meters AS m WHERE m.install_year = 2018";
  const char* realiased =
      "SELECT x.location FROM meters AS x WHERE x.install_year = 2018";
  const char* unaliased =
      "SELECT meters.location FROM meters WHERE meters.install_year = 2018";
  CHECK(same(aliased, realiased));
  CHECK(same(aliased, unaliased));
  ComponentSet cs = comp(aliased);
  CHECK(cs.select_items == std::vector<std::string>{"meters.location"});
  CHECK(cs.from_tables == std::vector<std::string>{"meters"});
  CHECK(cs.where_conjuncts ==
        std::vector<std::string>{"meters.install_year = 2018"});
}

TEST_CASE("alias resolution covers join conditions") {
  const char* a =
      "SELECT m.location FROM meters AS m JOIN readings AS r "
      "ON m.meter_id = r.meter_id";
  const char* b =
      "SELECT p.location FROM meters AS p JOIN readings AS q "
      "ON p.meter_id = q.meter_id";
  CHECK(same(a, b));
  ComponentSet cs = comp(a);
  CHECK(cs.join_conditions ==
        std::vector<std::string>{"meters.meter_id = readings.meter_id"});
  // Joined tables land in the same from_tables pool as the FROM list.
  REQUIRE(cs.from_tables.size() == 2);
  CHECK(cs.from_tables[0] == "meters");
  CHECK(cs.from_tables[1] == "readings");
}

TEST_CASE("join ON conjuncts are pooled individually") {
  ComponentSet cs = comp(
      "SELECT a FROM t JOIN u ON t.id = u.id AND u.kind = 'x' "
      "JOIN v ON v.id = t.id");
  REQUIRE(cs.join_conditions.size() == 3);
  // Sorted multiset across all joins.
  CHECK(cs.join_conditions[0] == "t.id = u.id");
  CHECK(cs.join_conditions[1] == "u.kind = 'x'");
  CHECK(cs.join_conditions[2] == "v.id = t.id");
}

TEST_CASE("qualified and bare references are distinct components") {
  CHECK_FALSE(same("SELECT location FROM meters",
                   "SELECT meters.location FROM meters"));
  ComponentSet bare = comp("SELECT location FROM meters");
  CHECK(bare.select_items == std::vector<std::string>{"location"});
}

TEST_CASE("ORDER BY keys keep their written order") {
  CHECK_FALSE(same("SELECT a FROM t ORDER BY a, b",
                   "SELECT a FROM t ORDER BY b, a"));
  ComponentSet cs = comp("SELECT a FROM t ORDER BY a DESC, b");
  REQUIRE(cs.order_by_keys.size() == 2);
  CHECK(cs.order_by_keys[0] == "a DESC");
  CHECK(cs.order_by_keys[1] == "b ASC");  // direction made explicit
  // Direction participates in matching.
  CHECK_FALSE(same("SELECT a FROM t ORDER BY a",
                   "SELECT a FROM t ORDER BY a DESC"));
  // Explicit ASC equals the implicit default.
  CHECK(same("SELECT a FROM t ORDER BY a",
             "SELECT a FROM t ORDER BY a ASC"));
}

TEST_CASE("DISTINCT is carried on every select item") {
  ComponentSet cs = comp("SELECT DISTINCT city, name FROM stores");
  REQUIRE(cs.select_items.size() == 2);
  CHECK(cs.select_items[0] == "DISTINCT city");
  CHECK(cs.select_items[1] == "DISTINCT name");
  CHECK_FALSE(same("SELECT DISTINCT city FROM stores",
                   "SELECT city FROM stores"));
}

TEST_CASE("LIMIT participates in matching") {
  CHECK_FALSE(same("SELECT a FROM t LIMIT 5", "SELECT a FROM t LIMIT 10"));
  CHECK_FALSE(same("SELECT a FROM t LIMIT 5", "SELECT a FROM t"));
  CHECK(comp("SELECT a FROM t").limit_value.empty());
  CHECK(comp("SELECT a FROM t LIMIT 5").limit_value == "5");
}

TEST_CASE("GROUP BY and HAVING decompose into pools") {
  ComponentSet cs = comp(
      "SELECT city, count(*) FROM stores GROUP BY city "
      "HAVING count(*) > 2 AND city != 'NA'");
  CHECK(cs.group_by_keys == std::vector<std::string>{"city"});
  REQUIRE(cs.having_conjuncts.size() == 2);
  CHECK(cs.having_conjuncts[0] == "city != 'NA'");
  CHECK(cs.having_conjuncts[1] == "count(*) > 2");
  // HAVING conjunct order does not matter either.
  CHECK(same(
      "SELECT city FROM stores GROUP BY city HAVING count(*) > 2 AND city != 'NA'",
      "SELECT city FROM stores GROUP BY city HAVING city != 'NA' AND count(*) > 2"));
}

TEST_CASE("set operations: kind, arm order, and arm contents all matter") {
  CHECK_FALSE(same("SELECT a FROM t UNION SELECT a FROM u",
                   "SELECT a FROM t UNION ALL SELECT a FROM u"));
  CHECK_FALSE(same("SELECT a FROM t UNION SELECT a FROM u",
                   "SELECT a FROM u UNION SELECT a FROM t"));
  CHECK_FALSE(same("SELECT a FROM t INTERSECT SELECT a FROM u",
                   "SELECT a FROM t EXCEPT SELECT a FROM u"));
  ComponentSet cs = comp("SELECT a FROM t UNION ALL SELECT a FROM u");
  CHECK(cs.set_arm_kinds == std::vector<std::string>{"UNION ALL"});
  REQUIRE(cs.set_arms.size() == 1);
  CHECK(cs.set_arms[0].from_tables == std::vector<std::string>{"u"});
  // Normalization still applies inside an arm.
  CHECK(same("SELECT a FROM t UNION SELECT b FROM u WHERE x = 1 AND y = 2",
             "SELECT a FROM t UNION SELECT b FROM u WHERE y = 2 AND x = 1"));
}

TEST_CASE("whole-query differences are caught") {
  CHECK_FALSE(same("SELECT a FROM t", "SELECT a FROM u"));
  CHECK_FALSE(same("SELECT a FROM t", "SELECT b FROM t"));
  CHECK_FALSE(same("SELECT a FROM t WHERE x = 1", "SELECT a FROM t"));
  CHECK_FALSE(same("SELECT max(a) FROM t", "SELECT min(a) FROM t"));
  CHECK_FALSE(same("SELECT count(a) FROM t", "SELECT count(DISTINCT a) FROM t"));
}
