// End-to-end walkthrough of the pipeline on the bundled utility-company
// fixture: load a schema, canonicalize SQL, repair a misspelled query,
// translate questions with the template baseline, and run a small evaluation
// against a SQLite database built on the fly.
//
// Usage: pipeline_demo [testdata-dir]   (default: the in-tree testdata/)

#include <nl2sql/nl2sql.hpp>

#include <sqlite3.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#ifndef DEMO_TESTDATA_DIR
#define DEMO_TESTDATA_DIR "testdata"
#endif

using namespace nl2sql;

namespace {

// The evaluation engine opens databases read-only, so the demo creates its
// fixture with the SQLite C API directly.
void build_fixture_db(const std::string& sql_path, const std::string& db_path) {
  std::filesystem::remove(db_path);
  sqlite3* db = nullptr;
  if (sqlite3_open(db_path.c_str(), &db) != SQLITE_OK)
    throw std::runtime_error("cannot create " + db_path);
  std::string script = detail::read_file(sql_path);
  char* err = nullptr;
  if (sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown sqlite error";
    sqlite3_free(err);
    sqlite3_close(db);
    throw std::runtime_error("fixture load failed: " + msg);
  }
  sqlite3_close(db);
}

void banner(const char* title) { std::printf("\n== %s ==\n", title); }

}  // namespace

int main(int argc, char** argv) {
  std::string testdata = argc > 1 ? argv[1] : DEMO_TESTDATA_DIR;
  try {
    banner("schema");
    DbSchema schema = load_flat_file(testdata + "/utility.schema");
    std::printf("db '%s': %zu tables, %zu primary keys, %zu foreign keys\n",
                schema.db_id.c_str(), schema.tables.size(),
                schema.primary_keys.size(), schema.foreign_keys.size());

    banner("canonical serialization");
    std::string messy =
        "select  Name , CITY from STORES where city='Vancouver' order by name";
    SqlAst ast = parse(messy);
    std::printf("in:  %s\nout: %s\n", messy.c_str(),
                serialize(ast).c_str());

    banner("schema-aware repair");
    std::string broken =
        "SELECT locaton FROM metres WHERE instal_year = 2018";
    RepairReport rep = repair(broken, schema);
    std::printf("in:  %s\nout: %s  [%s]\n", broken.c_str(),
                rep.repaired_sql.c_str(), repair_status_name(rep.status));
    for (const Edit& e : rep.edits)
      std::printf("     '%s' -> '%s' (distance %d)\n", e.original.c_str(),
                  e.replacement.c_str(), e.distance);

    banner("template baseline translation");
    std::vector<std::string> questions = {
        "How many rows are in meters?",
        "List city of stores where name equals Harbour?",
        "What is the max usage_kwh in readings?",
    };
    SchemaList schemas{schema};
    BaselineBackend baseline(schemas);
    for (const std::string& q : questions) {
      TranslationRequest req{q, schema.db_id,
                             prompt_schema_segment(schema), std::nullopt};
      std::printf("Q: %s\nS: %s\n", q.c_str(),
                  baseline.translate(req).sql.c_str());
    }

    banner("evaluation");
    std::string db_path =
        (std::filesystem::temp_directory_path() / "nl2sql_demo.sqlite")
            .string();
    build_fixture_db(testdata + "/utility_fixture.sql", db_path);
    IngestResult custom =
        ingest_custom(testdata + "/eval20_pairs.jsonl", schema);
    std::vector<std::string> predictions =
        read_predictions(testdata + "/eval20_predictions.jsonl");
    EvalReport report =
        evaluate_corpus(custom.pairs, predictions, schemas,
                        {{schema.db_id, db_path}});
    std::fputs(human_table(report).c_str(), stdout);
    std::printf("%s\n", summary_line(report).c_str());
    std::printf("label: %s\n", report.test_label.c_str());
    std::filesystem::remove(db_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "demo failed: %s\n", e.what());
    return 1;
  }
  return 0;
}
