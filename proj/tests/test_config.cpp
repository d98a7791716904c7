#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "helpers.hpp"
#include "nl2sql/config.hpp"

using nl2sql::Config;
using nl2sql::ConfigError;

TEST_CASE("config parses sections, comments, and quoting") {
  Config c = Config::parse(
      "# leading comment\n"
      "[repair]\n"
      "enabled = true   # trailing comment\n"
      "threshold = 3\n"
      "\n"
      "[backend]\n"
      "kind = \"baseline\"\n"
      "endpoint = \"http://host:1234/#frag\"\n");
  CHECK(c.has("repair.enabled"));
  CHECK(c.get_bool("repair.enabled", false));
  CHECK(c.get_int("repair.threshold", 0) == 3);
  CHECK(c.get_string("backend.kind") == "baseline");
  // '#' inside a quoted value is not a comment.
  CHECK(c.get_string("backend.endpoint") == "http://host:1234/#frag");
  CHECK_FALSE(c.has("backend.predictions"));
}

TEST_CASE("unknown and duplicate keys are rejected with line numbers") {
  using Catch::Matchers::ContainsSubstring;
  using Catch::Matchers::MessageMatches;
  CHECK_THROWS_MATCHES(
      Config::parse("[repair]\nthresold = 2\n"), ConfigError,
      MessageMatches(ContainsSubstring("config line 2") &&
                     ContainsSubstring("unknown key 'repair.thresold'")));
  CHECK_THROWS_MATCHES(
      Config::parse("[repair]\nthreshold = 2\nthreshold = 3\n"), ConfigError,
      MessageMatches(ContainsSubstring("config line 3") &&
                     ContainsSubstring("duplicate key 'repair.threshold'")));
  CHECK_THROWS_MATCHES(
      Config::parse("threshold = 2\n"), ConfigError,
      MessageMatches(ContainsSubstring("outside any section")));
  CHECK_THROWS_MATCHES(
      Config::parse("[repair\nthreshold = 2\n"), ConfigError,
      MessageMatches(ContainsSubstring("unterminated section header")));
  CHECK_THROWS_MATCHES(
      Config::parse("[repair]\njust words\n"), ConfigError,
      MessageMatches(ContainsSubstring("expected key = value")));
  CHECK_THROWS_MATCHES(
      Config::parse("[backend]\nkind = \"oops\n"), ConfigError,
      MessageMatches(ContainsSubstring("unterminated string value")));
}

TEST_CASE("typed getters validate their values") {
  Config c = Config::parse(
      "[repair]\nthreshold = 2\nenabled = off\n[coverage]\nmin = 0\n");
  CHECK(c.get_int("repair.threshold", 9) == 2);
  CHECK(c.get_int("coverage.min", 9) == 0);
  CHECK(c.get_int("evaluate.parallelism", 7) == 7);  // fallback when absent
  CHECK_FALSE(c.get_bool("repair.enabled", true));
  CHECK(c.get_bool("prompt.schema", true));  // fallback when absent

  Config bad_int = Config::parse("[repair]\nthreshold = two\n");
  CHECK_THROWS_MATCHES(
      bad_int.get_int("repair.threshold", 0), ConfigError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("not an integer")));
  Config bad_bool = Config::parse("[repair]\nenabled = maybe\n");
  CHECK_THROWS_MATCHES(
      bad_bool.get_bool("repair.enabled", false), ConfigError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("not a boolean")));
}

TEST_CASE("boolean spellings") {
  Config c = Config::parse(
      "[repair]\nenabled = YES\nqualifiers = 0\n[prompt]\nschema = On\n");
  CHECK(c.get_bool("repair.enabled", false));
  CHECK_FALSE(c.get_bool("repair.qualifiers", true));
  CHECK(c.get_bool("prompt.schema", false));
}

TEST_CASE("the bundled sample configuration covers every known key") {
  Config c = Config::load(testutil::testdata("sample_config.toml"));
  for (const std::string& key : Config::known_keys()) {
    INFO(key);
    CHECK(c.has(key));
  }
  CHECK(c.get_string("backend.kind") == "baseline");
  CHECK(c.get_int("evaluate.timeout_ms", 0) == 5000);
  CHECK(c.get_bool("repair.enabled", false));
  CHECK(c.values().size() == Config::known_keys().size());
}
