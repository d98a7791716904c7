#pragma once

// Translation sources behind one interface: an HTTP client speaking the
// wire protocol below, a replay backend over prediction files, a template
// baseline for model-free pipeline tests, and a mock server.
//
// Wire protocol (version 1):
//   POST /translate
//   X-NL2SQL-Proto: 1
//   request  {"question": "...", "db_id": "...", "schema": "..."}
//   response {"sql": "..."}
// 30 s default timeout; one retry on transport errors, none on HTTP errors.

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nl2sql/dataset.hpp"
#include "nl2sql/schema.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace nl2sql {

struct TranslationRequest {
  std::string question;
  std::string db_id;
  std::string schema_serialization;  // prompt_schema_segment format
  // Dataset position, set by batch drivers; the replay backend requires it.
  std::optional<std::size_t> index;
};

struct TranslationResponse {
  std::string sql;
  double latency_ms = 0.0;
  std::string backend_id;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendError : public std::runtime_error {
 public:
  BackendError(int status, const std::string& body)
      : std::runtime_error("backend returned HTTP " + std::to_string(status) +
                           ": " + body),
        status_(status),
        body_(body) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class NoMatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual TranslationResponse translate(const TranslationRequest& req) = 0;
  virtual std::string id() const = 0;
};

// -- replay -------------------------------------------------------------

class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::vector<std::string> predictions)
      : predictions_(std::move(predictions)) {}

  TranslationResponse translate(const TranslationRequest& req) override {
    if (!req.index)
      throw AlignmentError("replay backend requires an indexed request");
    if (*req.index >= predictions_.size())
      throw AlignmentError("prediction index " + std::to_string(*req.index) +
                           " out of range (have " +
                           std::to_string(predictions_.size()) + ")");
    return TranslationResponse{predictions_[*req.index], 0.0, id()};
  }

  std::string id() const override { return "replay"; }

 private:
  std::vector<std::string> predictions_;
};

// -- template baseline -----------------------------------------------------

// Template families (matched case-insensitively, trailing ?/./! ignored):
//   how many rows are in <t>            -> SELECT count(*) FROM <t>
//   how many <t> are there              -> SELECT count(*) FROM <t>
//   list <c> of <t>                     -> SELECT <c> FROM <t>
//   what is the max <c> in <t>          -> SELECT max(<c>) FROM <t>   (or min)
//   list <c> of <t> where <c2> equals <v> -> SELECT <c> FROM <t> WHERE <c2> = <v>
inline std::string baseline_translate(const std::string& question,
                                      const DbSchema& schema) {
  (void)schema;  // templates are purely syntactic
  std::string trimmed = question;
  while (!trimmed.empty() &&
         (trimmed.back() == '?' || trimmed.back() == '.' ||
          trimmed.back() == '!' || trimmed.back() == ' '))
    trimmed.pop_back();
  std::vector<std::string> words;
  std::istringstream in(trimmed);
  std::string w;
  while (in >> w) words.push_back(w);
  auto low = [&](std::size_t i) { return detail::ascii_lower(words[i]); };
  auto quote_value = [](const std::string& v) {
    bool numeric = !v.empty();
    for (std::size_t i = 0; i < v.size(); ++i) {
      char c = v[i];
      if (!(std::isdigit(static_cast<unsigned char>(c)) ||
            (i == 0 && c == '-') || c == '.'))
        numeric = false;
    }
    if (numeric) return v;
    std::string out = "'";
    for (char c : v) {
      if (c == '\'') out += '\'';
      out += c;
    }
    out += '\'';
    return out;
  };
  if (words.size() == 6 && low(0) == "how" && low(1) == "many" &&
      low(2) == "rows" && low(3) == "are" && low(4) == "in")
    return "SELECT count(*) FROM " + words[5];
  if (words.size() == 5 && low(0) == "how" && low(1) == "many" &&
      low(3) == "are" && low(4) == "there")
    return "SELECT count(*) FROM " + words[2];
  if (words.size() >= 8 && low(0) == "list" && low(2) == "of" &&
      low(4) == "where" && low(6) == "equals") {
    std::string value = words[7];
    for (std::size_t i = 8; i < words.size(); ++i) value += " " + words[i];
    return "SELECT " + words[1] + " FROM " + words[3] + " WHERE " + words[5] +
           " = " + quote_value(value);
  }
  if (words.size() == 4 && low(0) == "list" && low(2) == "of")
    return "SELECT " + words[1] + " FROM " + words[3];
  if (words.size() == 7 && low(0) == "what" && low(1) == "is" &&
      low(2) == "the" && (low(3) == "max" || low(3) == "min") &&
      low(5) == "in")
    return "SELECT " + low(3) + "(" + words[4] + ") FROM " + words[6];
  throw NoMatchError("question matches no baseline template: " + question);
}

class BaselineBackend : public Backend {
 public:
  explicit BaselineBackend(SchemaList schemas)
      : schemas_(std::move(schemas)) {}

  TranslationResponse translate(const TranslationRequest& req) override {
    const DbSchema* schema = find_schema(schemas_, req.db_id);
    if (!schema)
      throw NoMatchError("baseline backend has no schema for db_id '" +
                         req.db_id + "'");
    return TranslationResponse{baseline_translate(req.question, *schema), 0.0,
                               id()};
  }

  std::string id() const override { return "baseline"; }

 private:
  SchemaList schemas_;
};

// -- HTTP client ----------------------------------------------------------

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(std::string endpoint, double timeout_s = 30.0)
      : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {}

  TranslationResponse translate(const TranslationRequest& req) override {
    nlohmann::ordered_json body;
    body["question"] = req.question;
    body["db_id"] = req.db_id;
    body["schema"] = req.schema_serialization;
    std::string payload = body.dump();
    httplib::Headers headers{{"X-NL2SQL-Proto", "1"}};

    auto start = std::chrono::steady_clock::now();
    auto client = acquire();
    httplib::Result res =
        client->Post("/translate", headers, payload, "application/json");
    if (!res) {
      // One retry on transport failure; the request is idempotent.
      res = client->Post("/translate", headers, payload, "application/json");
    }
    release(std::move(client));
    double latency_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();

    if (!res)
      throw TransportError("transport error talking to " + endpoint_ + ": " +
                           httplib::to_string(res.error()));
    if (res->status != 200) throw BackendError(res->status, res->body);
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(res->status,
                         std::string("unparseable response body: ") + e.what());
    }
    if (!reply.contains("sql") || !reply["sql"].is_string())
      throw BackendError(res->status, "response lacks a \"sql\" field");
    return TranslationResponse{reply["sql"].get<std::string>(), latency_ms,
                               id()};
  }

  std::string id() const override { return "http"; }

 private:
  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!idle_.empty()) {
        auto client = std::move(idle_.back());
        idle_.pop_back();
        return client;
      }
    }
    auto client = std::make_unique<httplib::Client>(endpoint_);
    client->set_connection_timeout(std::chrono::duration<double>(timeout_s_));
    client->set_read_timeout(std::chrono::duration<double>(timeout_s_));
    client->set_write_timeout(std::chrono::duration<double>(timeout_s_));
    return client;
  }

  void release(std::unique_ptr<httplib::Client> client) {
    std::lock_guard<std::mutex> lock(mutex_);
    idle_.push_back(std::move(client));
  }

  std::string endpoint_;
  double timeout_s_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
};

// -- mock server ------------------------------------------------------------

class MockServer {
 public:
  // port 0 binds any free port on 127.0.0.1.
  explicit MockServer(std::map<std::string, std::string> canned,
                      std::optional<std::string> default_sql = std::nullopt,
                      int port = 0)
      : canned_(std::move(canned)), default_sql_(std::move(default_sql)) {
    server_.Post("/translate", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      handle(req, res);
    });
    if (port == 0) {
      port_ = server_.bind_to_any_port("127.0.0.1");
    } else {
      port_ = server_.bind_to_port("127.0.0.1", port) ? port : -1;
    }
    if (port_ <= 0) throw TransportError("mock server: bind failure");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  ~MockServer() { stop(); }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::size_t request_count() const { return requests_.load(); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    requests_.fetch_add(1);
    res.set_header("X-NL2SQL-Proto", "1");
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      res.status = 400;
      res.set_content(R"({"error":"malformed JSON body"})", "application/json");
      return;
    }
    if (!body.contains("question") || !body["question"].is_string()) {
      res.status = 400;
      res.set_content(R"({"error":"missing question"})", "application/json");
      return;
    }
    std::string question = body["question"].get<std::string>();
    std::string sql;
    if (auto it = canned_.find(question); it != canned_.end()) {
      sql = it->second;
    } else if (default_sql_) {
      sql = *default_sql_;
    } else {
      res.status = 404;
      res.set_content(R"({"error":"unknown question"})", "application/json");
      return;
    }
    nlohmann::ordered_json reply;
    reply["sql"] = sql;
    res.set_content(reply.dump(), "application/json");
  }

  std::map<std::string, std::string> canned_;
  std::optional<std::string> default_sql_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<std::size_t> requests_{0};
};

inline std::unique_ptr<MockServer> serve_mock(
    int port, std::map<std::string, std::string> canned,
    std::optional<std::string> default_sql = std::nullopt) {
  return std::make_unique<MockServer>(std::move(canned),
                                      std::move(default_sql), port);
}

}  // namespace nl2sql
