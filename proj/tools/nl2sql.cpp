// nl2sql — command-line front end for the NL-to-SQL pipeline toolkit.
//
// Subcommands: ingest, coverage, prepare-train, translate, repair, corrupt,
// evaluate, serve-mock, repl. Exit codes: 0 success, 1 quality-gate failure
// (uncovered schema elements, unrepairable SQL), 2 usage or I/O error.

#include <CLI11.hpp>
#include <nl2sql/nl2sql.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#ifndef _WIN32
#include <unistd.h>
#endif

namespace {

using namespace nl2sql;

bool on(const std::string& v) { return v == "on"; }

// Load schemas from a Spider tables.json and/or a flat schema file.
SchemaList load_schemas(const std::string& tables_path,
                        const std::string& flat_path) {
  SchemaList schemas;
  if (!tables_path.empty()) schemas = load_spider_tables(tables_path);
  if (!flat_path.empty()) schemas.push_back(load_flat_file(flat_path));
  return schemas;
}

const DbSchema& pick_schema(const SchemaList& schemas,
                            const std::string& db_id) {
  if (schemas.empty())
    throw ConfigError("no schema loaded: pass --tables and/or --schema");
  if (db_id.empty()) {
    if (schemas.size() == 1) return schemas[0];
    throw ConfigError("multiple schemas loaded: pass --db <db_id>");
  }
  const DbSchema* s = find_schema(schemas, db_id);
  if (!s) throw ConfigError("unknown db_id '" + db_id + "'");
  return *s;
}

// Map each distinct db_id in `pairs` to a SQLite file under `dir`, accepting
// both flat (<dir>/<db_id>.sqlite) and Spider (<dir>/<db_id>/<db_id>.sqlite)
// layouts. Pairs without a database file are scored on exact match only.
std::map<std::string, std::string> db_paths_for(
    const std::vector<QueryPair>& pairs, const std::string& dir) {
  std::map<std::string, std::string> out;
  if (dir.empty()) return out;
  namespace fs = std::filesystem;
  for (const QueryPair& p : pairs) {
    if (out.count(p.db_id)) continue;
    fs::path flat = fs::path(dir) / (p.db_id + ".sqlite");
    fs::path nested = fs::path(dir) / p.db_id / (p.db_id + ".sqlite");
    if (fs::exists(flat))
      out[p.db_id] = flat.string();
    else if (fs::exists(nested))
      out[p.db_id] = nested.string();
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const std::string& kind,
                                      const std::string& endpoint,
                                      const std::string& predictions_path,
                                      const SchemaList& schemas) {
  if (kind == "baseline") return std::make_unique<BaselineBackend>(schemas);
  if (kind == "replay") {
    if (predictions_path.empty())
      throw ConfigError("replay backend requires --predictions <path>");
    return std::make_unique<ReplayBackend>(read_predictions(predictions_path));
  }
  if (kind == "http") {
    std::string url = endpoint;
    if (url.empty()) {
      const char* env = std::getenv("NL2SQL_ENDPOINT");
      if (env) url = env;
    }
    if (url.empty())
      throw ConfigError(
          "http backend requires --endpoint <url>, backend.endpoint in the "
          "config file, or NL2SQL_ENDPOINT in the environment");
    return std::make_unique<HttpBackend>(url);
  }
  throw ConfigError("unknown backend '" + kind + "'");
}

TranslationRequest make_request(const std::string& question,
                                const std::string& db_id,
                                const SchemaList& schemas,
                                bool include_schema) {
  TranslationRequest req;
  req.question = question;
  req.db_id = db_id;
  if (include_schema) {
    const DbSchema* s = find_schema(schemas, db_id);
    if (s) req.schema_serialization = prompt_schema_segment(*s);
  }
  return req;
}

std::string cell_text(const ResultTable::Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return "NULL";
  if (const long long* i = std::get_if<long long>(&cell))
    return std::to_string(*i);
  if (const double* d = std::get_if<double>(&cell)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", *d);
    return buf;
  }
  return std::get<std::string>(cell);
}

void print_result_table(const ResultTable& table, std::ostream& out) {
  std::string header;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) header += " | ";
    header += table.columns[i];
  }
  out << header << "\n";
  for (const auto& row : table.rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += " | ";
      line += cell_text(row[i]);
    }
    out << line << "\n";
  }
  out << "(" << table.rows.size() << " row"
      << (table.rows.size() == 1 ? "" : "s") << ")\n";
}

void print_edits(const RepairReport& rep, const std::string& prefix,
                 std::ostream& out) {
  for (const Edit& e : rep.edits)
    out << prefix << "edit: '" << e.original << "' -> '" << e.replacement
        << "' (distance " << e.distance << ")\n";
}

// Batch-translate input: JSON-lines records with a "question" field and an
// optional "db_id"; extra fields (e.g. "sql", "split" from a dataset file)
// are ignored, so a custom dataset can be replayed directly.
struct BatchQuestion {
  std::string question;
  std::string db_id;  // empty: fall back to --db / single loaded schema
};

std::vector<BatchQuestion> read_batch_questions(const std::string& path) {
  std::string text = detail::read_file(path);
  std::vector<BatchQuestion> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) {
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DatasetError(path + " line " + std::to_string(line_no) + ": " +
                           e.what());
      }
      if (!rec.is_object() || !rec.contains("question") ||
          !rec["question"].is_string())
        throw DatasetError(path + " line " + std::to_string(line_no) +
                           ": expected an object with a \"question\" string");
      BatchQuestion q;
      q.question = rec["question"].get<std::string>();
      if (rec.contains("db_id") && rec["db_id"].is_string())
        q.db_id = rec["db_id"].get<std::string>();
      out.push_back(std::move(q));
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NL-to-SQL pipeline toolkit: dataset ingestion, coverage "
               "checks, training export, translation backends, schema-aware "
               "SQL repair, and dual-metric evaluation."};
  app.require_subcommand(1);
  int rc = 0;

  // Shared option storage. Each subcommand registers only the flags it
  // honors; config-file values fill in wherever the flag was not passed.
  struct {
    std::string config_path;
    std::string tables, flat_schema, train, dev, custom;
    std::string db_id, dbs_dir;
    std::string backend = "baseline", endpoint, predictions;
    std::string repair_enabled = "on", repair_qualifiers = "off";
    std::string prompt_schema = "on";
    int repair_threshold = 2;
    int min_coverage = 2;
    int parallelism = 4;
    int timeout_ms = 5000;
    std::string report_path;
    std::string split = "all";
    std::string question, sql_text, in_path, out_path = "-";
    std::string corpus_path, out_pairs, out_predictions, default_sql;
    std::string canned_path, db_file;
    bool show_edits = false;
    unsigned seed = 0;
    std::size_t count = 200;
    int port = 0;
  } o;

  const auto onoff = CLI::IsMember({"on", "off"});
  const auto backend_kinds = CLI::IsMember({"baseline", "replay", "http"});

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path,
                    "TOML-style config file; explicit flags win");
  };
  auto add_schema_opts = [&](CLI::App* sub) {
    sub->add_option("--tables", o.tables, "Spider tables.json");
    sub->add_option("--schema", o.flat_schema, "flat schema file");
  };
  auto add_dataset_opts = [&](CLI::App* sub) {
    sub->add_option("--train", o.train, "Spider train JSON");
    sub->add_option("--dev", o.dev, "Spider dev JSON");
    sub->add_option("--custom", o.custom, "custom JSON-lines dataset");
  };
  auto add_repair_opts = [&](CLI::App* sub) {
    sub->add_option("--repair-threshold", o.repair_threshold,
                    "max identifier edit distance (default 2)");
    sub->add_option("--repair-qualifiers", o.repair_qualifiers,
                    "also rewrite wrong-table qualifiers (on|off)")
        ->check(onoff);
  };
  auto add_backend_opts = [&](CLI::App* sub) {
    sub->add_option("--backend", o.backend,
                    "translation backend: baseline|replay|http")
        ->check(backend_kinds);
    sub->add_option("--endpoint", o.endpoint,
                    "http backend URL (fallback: NL2SQL_ENDPOINT)");
    sub->add_option("--predictions", o.predictions,
                    "prediction replay file (JSON-lines or plain text)");
  };

  // Resolve config-file values for flags the user did not pass.
  auto apply_config = [&](CLI::App* sub) {
    if (o.config_path.empty()) return;
    Config cfg = Config::load(o.config_path);
    auto fill_str = [&](const char* flag, const char* key, std::string& var) {
      CLI::Option* opt = sub->get_option_no_throw(flag);
      if (opt && opt->count() == 0 && cfg.has(key)) var = cfg.get_string(key);
    };
    auto fill_int = [&](const char* flag, const char* key, int& var) {
      CLI::Option* opt = sub->get_option_no_throw(flag);
      if (opt && opt->count() == 0 && cfg.has(key))
        var = cfg.get_int(key, var);
    };
    auto fill_onoff = [&](const char* flag, const char* key,
                          std::string& var) {
      CLI::Option* opt = sub->get_option_no_throw(flag);
      if (opt && opt->count() == 0 && cfg.has(key))
        var = cfg.get_bool(key, false) ? "on" : "off";
    };
    fill_str("--tables", "schema.tables", o.tables);
    fill_str("--schema", "schema.flat", o.flat_schema);
    fill_str("--train", "dataset.spider_train", o.train);
    fill_str("--dev", "dataset.spider_dev", o.dev);
    fill_str("--custom", "dataset.custom", o.custom);
    fill_str("--dbs", "dataset.dbs", o.dbs_dir);
    fill_str("--backend", "backend.kind", o.backend);
    fill_str("--endpoint", "backend.endpoint", o.endpoint);
    fill_str("--predictions", "backend.predictions", o.predictions);
    fill_onoff("--repair", "repair.enabled", o.repair_enabled);
    fill_int("--repair-threshold", "repair.threshold", o.repair_threshold);
    fill_onoff("--repair-qualifiers", "repair.qualifiers",
               o.repair_qualifiers);
    fill_onoff("--prompt-schema", "prompt.schema", o.prompt_schema);
    fill_int("--min-coverage", "coverage.min", o.min_coverage);
    fill_int("--parallelism", "evaluate.parallelism", o.parallelism);
    fill_int("--timeout-ms", "evaluate.timeout_ms", o.timeout_ms);
    fill_str("--report", "evaluate.report", o.report_path);
  };

  // Load datasets named by the resolved options. Spider pairs come first so
  // prediction files align with (spider..., custom...) order.
  struct LoadedData {
    SchemaList schemas;
    std::vector<QueryPair> spider_pairs, custom_pairs;
    std::vector<QueryPair> pairs;  // spider then custom
    DatasetStats spider_stats, custom_stats;
    bool have_spider = false, have_custom = false;
  };
  auto load_data = [&]() {
    LoadedData d;
    d.schemas = load_schemas(o.tables, o.flat_schema);
    if (!o.train.empty() || !o.dev.empty()) {
      if (o.train.empty() || o.dev.empty() || o.tables.empty())
        throw ConfigError(
            "Spider ingestion needs --tables, --train, and --dev together");
      IngestResult r = ingest_spider(o.train, o.dev, o.tables);
      d.spider_stats = r.stats;
      d.spider_pairs = std::move(r.pairs);
      d.have_spider = true;
    }
    if (!o.custom.empty()) {
      if (o.flat_schema.empty())
        throw ConfigError("--custom requires --schema <flat schema file>");
      // load_schemas appends the flat schema last.
      IngestResult r = ingest_custom(o.custom, d.schemas.back());
      d.custom_stats = r.stats;
      d.custom_pairs = std::move(r.pairs);
      d.have_custom = true;
    }
    d.pairs = d.spider_pairs;
    d.pairs.insert(d.pairs.end(), d.custom_pairs.begin(),
                   d.custom_pairs.end());
    return d;
  };

  auto stats_line = [](const char* label, const DatasetStats& s) {
    std::printf("%s: train=%zu test=%zu databases=%zu unparseable=%zu\n",
                label, s.n_train, s.n_test, s.n_databases, s.n_unparseable);
  };

  // ---- ingest ----------------------------------------------------------
  CLI::App* ingest = app.add_subcommand(
      "ingest", "Load datasets and print per-source statistics");
  add_config(ingest);
  add_schema_opts(ingest);
  add_dataset_opts(ingest);
  ingest->callback([&] {
    apply_config(ingest);
    LoadedData d = load_data();
    if (!d.have_spider && !d.have_custom)
      throw ConfigError(
          "nothing to ingest: pass --tables/--train/--dev and/or "
          "--schema/--custom");
    if (d.have_spider) stats_line("spider", d.spider_stats);
    if (d.have_custom) stats_line("custom", d.custom_stats);
  });

  // ---- coverage --------------------------------------------------------
  CLI::App* coverage = app.add_subcommand(
      "coverage",
      "Check that every schema element is exercised by training data");
  add_config(coverage);
  add_schema_opts(coverage);
  add_dataset_opts(coverage);
  coverage->add_option("--min-coverage", o.min_coverage,
                       "required mentions per element (default 2)");
  coverage->callback([&] {
    apply_config(coverage);
    LoadedData d = load_data();
    if (!d.have_spider && !d.have_custom)
      throw ConfigError("no dataset given: pass --train/--dev or --custom");
    CoverageReport report =
        coverage_report(d.pairs, d.schemas, o.min_coverage);
    std::printf("pairs: train=%zu test=%zu\n", report.stats.n_train,
                report.stats.n_test);
    std::printf("coverage (threshold %d):\n", o.min_coverage);
    for (const auto& [key, count] : report.stats.coverage)
      std::printf("%6d  %s\n", count, key.c_str());
    if (report.uncovered.empty()) {
      std::printf("all %zu elements covered\n",
                  report.stats.coverage.size());
    } else {
      std::printf("uncovered:\n");
      for (const std::string& key : report.uncovered)
        std::printf("  %s\n", key.c_str());
      rc = 1;
    }
  });

  // ---- prepare-train ---------------------------------------------------
  CLI::App* prepare = app.add_subcommand(
      "prepare-train", "Export train-split pairs as prompt/target TSV");
  add_config(prepare);
  add_schema_opts(prepare);
  add_dataset_opts(prepare);
  prepare->add_option("--out", o.out_path, "output TSV path")->required();
  prepare->add_option("--prompt-schema", o.prompt_schema,
                      "append schema to each prompt (on|off)")
      ->check(onoff);
  prepare->callback([&] {
    apply_config(prepare);
    LoadedData d = load_data();
    if (!d.have_spider && !d.have_custom)
      throw ConfigError("no dataset given: pass --train/--dev or --custom");
    PromptOptions popts;
    popts.include_schema = on(o.prompt_schema);
    std::vector<TrainingExample> examples =
        assemble_training(d.spider_pairs, d.custom_pairs, d.schemas, popts);
    detail::write_file(o.out_path, write_training_tsv(examples));
    std::printf("wrote %zu training examples to %s\n", examples.size(),
                o.out_path.c_str());
  });

  // ---- translate -------------------------------------------------------
  CLI::App* translate = app.add_subcommand(
      "translate", "Translate one question or a batch file to SQL");
  add_config(translate);
  add_schema_opts(translate);
  add_backend_opts(translate);
  translate->add_option("--db", o.db_id, "db_id for the question(s)");
  translate->add_option("--question", o.question, "single question");
  translate->add_option("--in", o.in_path,
                        "batch input: JSON-lines with \"question\" (and "
                        "optional \"db_id\") fields");
  translate->add_option("--out", o.out_path,
                        "batch output path for predictions ('-' = stdout)");
  translate->add_option("--prompt-schema", o.prompt_schema,
                        "send schema text with each request (on|off)")
      ->check(onoff);
  translate->callback([&] {
    apply_config(translate);
    SchemaList schemas = load_schemas(o.tables, o.flat_schema);
    std::unique_ptr<Backend> backend =
        make_backend(o.backend, o.endpoint, o.predictions, schemas);
    auto default_db = [&]() -> std::string {
      if (!o.db_id.empty()) return o.db_id;
      if (schemas.size() == 1) return schemas[0].db_id;
      return "";
    };
    if (!o.question.empty() && !o.in_path.empty())
      throw ConfigError("pass either --question or --in, not both");
    if (o.question.empty() && o.in_path.empty())
      throw ConfigError("pass --question <text> or --in <file>");
    if (!o.question.empty()) {
      if (o.backend == "replay")
        throw ConfigError("replay backend needs batch mode (--in)");
      std::string db = default_db();
      if (db.empty())
        throw ConfigError("pass --db <db_id> (multiple schemas loaded)");
      TranslationRequest req =
          make_request(o.question, db, schemas, on(o.prompt_schema));
      std::printf("%s\n", backend->translate(req).sql.c_str());
      return;
    }
    std::vector<BatchQuestion> batch = read_batch_questions(o.in_path);
    std::vector<std::string> predictions;
    predictions.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::string db = batch[i].db_id.empty() ? default_db() : batch[i].db_id;
      if (db.empty())
        throw ConfigError("record " + std::to_string(i) +
                          ": no db_id (pass --db or add a db_id field)");
      TranslationRequest req =
          make_request(batch[i].question, db, schemas, on(o.prompt_schema));
      req.index = i;
      predictions.push_back(backend->translate(req).sql);
    }
    std::string payload = write_predictions_jsonl(predictions);
    if (o.out_path == "-") {
      std::fputs(payload.c_str(), stdout);
    } else {
      detail::write_file(o.out_path, payload);
      std::printf("wrote %zu predictions to %s\n", predictions.size(),
                  o.out_path.c_str());
    }
  });

  // ---- repair ----------------------------------------------------------
  CLI::App* repair_cmd = app.add_subcommand(
      "repair", "Repair near-miss identifiers in SQL against a schema");
  add_config(repair_cmd);
  add_schema_opts(repair_cmd);
  add_repair_opts(repair_cmd);
  repair_cmd->add_option("--db", o.db_id, "schema to repair against");
  repair_cmd->add_option("--sql", o.sql_text, "single statement to repair");
  repair_cmd->add_option("--in", o.in_path,
                         "file with one SQL statement per line");
  repair_cmd->add_flag("--show-edits", o.show_edits,
                       "print status and edit list as '--' comment lines");
  repair_cmd->callback([&] {
    apply_config(repair_cmd);
    SchemaList schemas = load_schemas(o.tables, o.flat_schema);
    const DbSchema& schema = pick_schema(schemas, o.db_id);
    if (!o.sql_text.empty() && !o.in_path.empty())
      throw ConfigError("pass either --sql or --in, not both");
    if (o.sql_text.empty() && o.in_path.empty())
      throw ConfigError("pass --sql <statement> or --in <file>");
    std::vector<std::string> inputs;
    if (!o.sql_text.empty())
      inputs.push_back(o.sql_text);
    else
      inputs = load_query_corpus(o.in_path);
    RepairOptions ropts;
    ropts.threshold = o.repair_threshold;
    ropts.fix_qualifiers = on(o.repair_qualifiers);
    for (const std::string& sql : inputs) {
      RepairReport rep = repair(sql, schema, ropts);
      std::printf("%s\n", rep.repaired_sql.c_str());
      if (o.show_edits) {
        std::printf("-- status: %s\n", repair_status_name(rep.status));
        print_edits(rep, "-- ", std::cout);
      }
      if (rep.status == RepairStatus::unrepairable) rc = 1;
    }
  });

  // ---- corrupt ---------------------------------------------------------
  CLI::App* corrupt = app.add_subcommand(
      "corrupt",
      "Generate a seeded identifier-corruption corpus for repair testing");
  add_config(corrupt);
  corrupt->add_option("--schema", o.flat_schema, "flat schema file")
      ->required();
  corrupt->add_option("--corpus", o.corpus_path,
                      "one-query-per-line corpus of schema-valid SQL")
      ->required();
  corrupt->add_option("--count", o.count, "corruptions to emit (default 200)");
  corrupt->add_option("--seed", o.seed, "RNG seed (default 0)");
  corrupt->add_option("--repair-threshold", o.repair_threshold,
                      "max edits per corruption (default 2)");
  corrupt->add_option("--out-pairs", o.out_pairs,
                      "dataset JSON-lines: gold = original query")
      ->required();
  corrupt->add_option("--out-predictions", o.out_predictions,
                      "predictions JSON-lines: corrupted query")
      ->required();
  corrupt->callback([&] {
    apply_config(corrupt);
    DbSchema schema = load_flat_file(o.flat_schema);
    std::vector<std::string> corpus = load_query_corpus(o.corpus_path);
    std::vector<Corruption> corruptions = generate_corruptions(
        corpus, schema, o.seed, o.count, o.repair_threshold);
    std::vector<QueryPair> pairs;
    std::vector<std::string> predictions;
    for (std::size_t i = 0; i < corruptions.size(); ++i) {
      QueryPair p;
      p.question = "restore corrupted query " + std::to_string(i) + " ('" +
                   corruptions[i].original_token + "' -> '" +
                   corruptions[i].corrupted_token + "')";
      p.gold_sql = corruptions[i].original_sql;
      p.db_id = schema.db_id;
      p.split = Split::test;
      pairs.push_back(std::move(p));
      predictions.push_back(corruptions[i].corrupted_sql);
    }
    detail::write_file(o.out_pairs, write_custom_jsonl(pairs));
    detail::write_file(o.out_predictions,
                       write_predictions_jsonl(predictions));
    std::printf(
        "generated %zu corruptions (seed %u) from %zu corpus queries\n",
        corruptions.size(), o.seed, corpus.size());
  });

  // ---- evaluate --------------------------------------------------------
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score predictions with exact match and execution checks");
  add_config(evaluate);
  add_schema_opts(evaluate);
  add_dataset_opts(evaluate);
  add_backend_opts(evaluate);
  add_repair_opts(evaluate);
  evaluate->add_option("--repair", o.repair_enabled,
                       "apply repair before scoring (on|off, default on)")
      ->check(onoff);
  evaluate->add_option("--dbs", o.dbs_dir,
                       "directory of SQLite fixtures (<db_id>.sqlite)");
  evaluate->add_option("--split", o.split,
                       "evaluate only this split (train|test|all)")
      ->check(CLI::IsMember({"train", "test", "all"}));
  evaluate->add_option("--parallelism", o.parallelism,
                       "worker threads (default 4)");
  evaluate->add_option("--timeout-ms", o.timeout_ms,
                       "per-statement execution timeout (default 5000)");
  evaluate->add_option("--report", o.report_path, "write JSON report here");
  evaluate->callback([&] {
    apply_config(evaluate);
    LoadedData d = load_data();
    std::vector<QueryPair> pairs;
    for (const QueryPair& p : d.pairs) {
      if (o.split == "train" && p.split != Split::train) continue;
      if (o.split == "test" && p.split != Split::test) continue;
      pairs.push_back(p);
    }
    if (pairs.empty()) throw ConfigError("empty dataset: nothing to evaluate");

    // Prediction source: an explicit live backend (baseline/http) wins;
    // otherwise a predictions file is replayed; otherwise it is an error.
    bool live_backend = evaluate->get_option("--backend")->count() > 0 &&
                        o.backend != "replay";
    if (!live_backend && o.predictions.empty())
      throw ConfigError(
          "no prediction source: pass --predictions <path> or --backend "
          "baseline|http");
    std::vector<std::string> predictions;
    if (!live_backend) {
      predictions = read_predictions(o.predictions);
    } else {
      std::unique_ptr<Backend> backend =
          make_backend(o.backend, o.endpoint, o.predictions, d.schemas);
      predictions.reserve(pairs.size());
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        TranslationRequest req = make_request(
            pairs[i].question, pairs[i].db_id, d.schemas, on(o.prompt_schema));
        req.index = i;
        predictions.push_back(backend->translate(req).sql);
      }
    }

    EvalOptions eopts;
    eopts.repair = on(o.repair_enabled);
    eopts.repair_options.threshold = o.repair_threshold;
    eopts.repair_options.fix_qualifiers = on(o.repair_qualifiers);
    eopts.parallelism = o.parallelism;
    eopts.timeout_ms = o.timeout_ms;
    EvalReport report = evaluate_corpus(
        pairs, predictions, d.schemas, db_paths_for(pairs, o.dbs_dir), eopts);
    std::fputs(human_table(report).c_str(), stdout);
    std::printf("%s\n", summary_line(report).c_str());
    std::printf("label: %s\n", report.test_label.c_str());
    if (!o.report_path.empty()) {
      detail::write_file(o.report_path, report_to_json(report).dump(2) + "\n");
      std::printf("report written to %s\n", o.report_path.c_str());
    }
  });

  // ---- serve-mock ------------------------------------------------------
  CLI::App* serve = app.add_subcommand(
      "serve-mock", "Run a canned-response translation server");
  serve->add_option("--port", o.port, "port (default: pick a free one)");
  serve->add_option("--canned", o.canned_path,
                    "JSON-lines {\"question\", \"sql\"} response map");
  serve->add_option("--default-sql", o.default_sql,
                    "response for questions not in the map");
  serve->callback([&] {
    std::map<std::string, std::string> canned;
    if (!o.canned_path.empty()) {
      std::string text = detail::read_file(o.canned_path);
      std::size_t pos = 0;
      while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) {
          nlohmann::json rec = nlohmann::json::parse(line);
          if (!rec.is_object() || !rec.contains("question") ||
              !rec.contains("sql"))
            throw DatasetError(o.canned_path +
                               ": each line needs question and sql fields");
          canned[rec["question"].get<std::string>()] =
              rec["sql"].get<std::string>();
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
      }
    }
    std::optional<std::string> default_sql;
    if (serve->get_option("--default-sql")->count() > 0)
      default_sql = o.default_sql;
    std::unique_ptr<MockServer> server =
        serve_mock(o.port, std::move(canned), std::move(default_sql));
    std::printf("mock backend listening on %s\n", server->url().c_str());
    std::fflush(stdout);
    std::promise<void>().get_future().wait();  // run until killed
  });

  // ---- repl ------------------------------------------------------------
  CLI::App* repl = app.add_subcommand(
      "repl", "Interactive loop: translate, repair, optionally execute");
  add_config(repl);
  add_schema_opts(repl);
  add_backend_opts(repl);
  add_repair_opts(repl);
  repl->add_option("--repair", o.repair_enabled,
                   "apply repair to translations (on|off, default on)")
      ->check(onoff);
  repl->add_option("--db", o.db_id, "schema to use");
  repl->add_option("--db-file", o.db_file,
                   "SQLite file: execute each repaired query");
  repl->add_option("--prompt-schema", o.prompt_schema,
                   "send schema text with each request (on|off)")
      ->check(onoff);
  repl->callback([&] {
    apply_config(repl);
    SchemaList schemas = load_schemas(o.tables, o.flat_schema);
    const DbSchema& schema = pick_schema(schemas, o.db_id);
    std::unique_ptr<Backend> backend =
        make_backend(o.backend, o.endpoint, o.predictions, schemas);
    std::optional<SqliteDb> db;
    if (!o.db_file.empty()) db.emplace(o.db_file);
    RepairOptions ropts;
    ropts.threshold = o.repair_threshold;
    ropts.fix_qualifiers = on(o.repair_qualifiers);
#ifndef _WIN32
    bool interactive = isatty(fileno(stdin)) != 0;
#else
    bool interactive = false;
#endif
    std::size_t counter = 0;
    std::string line;
    for (;;) {
      if (interactive) {
        std::fputs("nl2sql> ", stdout);
        std::fflush(stdout);
      }
      if (!std::getline(std::cin, line)) break;
      if (line == "\\q") break;
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        TranslationRequest req =
            make_request(line, schema.db_id, schemas, on(o.prompt_schema));
        req.index = counter++;
        std::string sql = backend->translate(req).sql;
        std::printf("sql: %s\n", sql.c_str());
        if (on(o.repair_enabled)) {
          RepairReport rep = repair(sql, schema, ropts);
          if (rep.status == RepairStatus::repaired) {
            std::printf("repaired: %s\n", rep.repaired_sql.c_str());
            print_edits(rep, "  ", std::cout);
          } else if (rep.status == RepairStatus::unrepairable) {
            std::printf("repair: unrepairable, passing through\n");
          }
          sql = rep.repaired_sql;
        }
        if (db) print_result_table(db->execute(sql, o.timeout_ms), std::cout);
      } catch (const std::exception& e) {
        std::printf("error: %s\n", e.what());
      }
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
