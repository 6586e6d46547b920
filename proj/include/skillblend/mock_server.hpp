#pragma once

// Table-driven server for the backend protocol. Used by the protocol tests
// and by `skillblend mockserver`.
//
// Tables file:
//   {"generate": [{"skill": "P", "attempt": 1, "text": "hello", "score": 0.9}, ...],
//    "rank":     [{"skill": "P", "candidates": ["a", "b"], "scores": [0.1, 0.9]}, ...],
//    "nli":      {"pairs": [{"premise": ..., "hypothesis": ..., "label": "contradict", "confidence": 1.0}],
//                 "default": {"label": "neutral", "confidence": 0.5}},
//    "classify": {"texts": [{"text": "hello", "distribution": [0.2, 0.3, 0.5]}],
//                 "default": [0.34, 0.33, 0.33]}}
//
// Match keys other than "skill" (generate) and "text"/"premise"/"hypothesis"
// are optional wildcards. Any entry may carry "fail_times": n (answer the
// first n matches with HTTP 500) or "raw": "..." (send this body verbatim).
// Unmatched /rank requests score every candidate 0; unmatched /generate and
// /classify without a default answer 422.

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "skillblend/error.hpp"

namespace skillblend {

struct MockEntry {
  nlohmann::ordered_json match;             // request fields that must be equal
  nlohmann::ordered_json response;     // body to send when matched
  std::optional<std::string> raw;      // verbatim override
  int fail_times = 0;
};

struct MockTables {
  std::vector<MockEntry> generate;
  std::vector<MockEntry> rank;
  std::vector<MockEntry> nli;
  std::vector<MockEntry> classify;
  nlohmann::ordered_json nli_default = {{"label", "neutral"}, {"confidence", 0.5}};
  std::optional<nlohmann::ordered_json> classify_default;
};

inline MockTables mock_tables_from_json(const nlohmann::ordered_json& j) {
  MockTables t;
  auto entry = [](const nlohmann::ordered_json& e, std::initializer_list<const char*> keys,
                  std::initializer_list<const char*> response_keys) {
    MockEntry out;
    out.match = nlohmann::ordered_json::object();
    for (const char* k : keys) {
      if (e.contains(k)) out.match[k] = e.at(k);
    }
    out.response = nlohmann::ordered_json::object();
    for (const char* k : response_keys) {
      if (e.contains(k)) out.response[k] = e.at(k);
    }
    if (e.contains("raw")) out.raw = e.at("raw").get<std::string>();
    out.fail_times = e.value("fail_times", 0);
    return out;
  };
  try {
    for (const auto& e : j.value("generate", nlohmann::ordered_json::array())) {
      if (!e.contains("skill")) throw Error(ErrorCode::config, "mock tables: generate entry without skill");
      t.generate.push_back(entry(e, {"skill", "attempt"}, {"text", "score"}));
    }
    for (const auto& e : j.value("rank", nlohmann::ordered_json::array())) {
      t.rank.push_back(entry(e, {"skill", "candidates"}, {"scores"}));
    }
    if (j.contains("nli")) {
      const auto& nli = j.at("nli");
      for (const auto& e : nli.value("pairs", nlohmann::ordered_json::array())) {
        t.nli.push_back(entry(e, {"premise", "hypothesis"}, {"label", "confidence"}));
      }
      if (nli.contains("default")) {
        const auto& d = nli.at("default");
        t.nli_default = {{"label", d.at("label")}, {"confidence", d.value("confidence", 0.5)}};
      }
    }
    if (j.contains("classify")) {
      const auto& cls = j.at("classify");
      for (const auto& e : cls.value("texts", nlohmann::ordered_json::array())) {
        t.classify.push_back(entry(e, {"text"}, {"distribution"}));
      }
      if (cls.contains("default")) t.classify_default = nlohmann::ordered_json{{"distribution", cls.at("default")}};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("mock tables: ") + e.what());
  }
  return t;
}

class MockServer {
 public:
  struct Exchange {
    std::string route;
    std::string request;
    int status = 0;
    std::string response;
  };

  // Binds immediately; port 0 picks a free port.
  MockServer(MockTables tables, const std::string& host = "127.0.0.1", int port = 0) : tables_(std::move(tables)) {
    for (const char* route : {"/generate", "/rank", "/nli", "/classify"}) {
      std::string r = route;
      server_.Post(route, [this, r](const httplib::Request& req, httplib::Response& res) { handle(r, req, res); });
    }
    server_.set_keep_alive_max_count(1000);
    server_.set_tcp_nodelay(true);
    // No SO_REUSEPORT, so a taken port is a startup error.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) throw Error(ErrorCode::startup, "mock server: cannot bind " + host + ":" + std::to_string(port));
    host_ = host;
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

  // Blocks until stop() is called from another thread.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string url() const { return "http://" + host_ + ":" + std::to_string(port_); }

  std::vector<Exchange> exchanges() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  void handle(const std::string& route, const httplib::Request& req, httplib::Response& res) {
    int status = 200;
    std::string body;
    {
      std::lock_guard lock(mu_);
      std::tie(status, body) = respond(route, req.body);
      log_.push_back({route, req.body, status, body});
    }
    res.status = status;
    res.set_content(body, "application/json");
  }

  static bool matches(const MockEntry& e, const nlohmann::ordered_json& req) {
    for (const auto& [k, v] : e.match.items()) {
      if (!req.contains(k) || req.at(k) != v) return false;
    }
    return true;
  }

  static std::pair<int, std::string> error(int status, const std::string& message) {
    return {status, nlohmann::ordered_json{{"error", message}}.dump()};
  }

  std::pair<int, std::string> serve(MockEntry& e) {
    if (e.fail_times > 0) {
      --e.fail_times;
      return error(500, "scripted failure");
    }
    if (e.raw) return {200, *e.raw};
    return {200, e.response.dump()};
  }

  std::pair<int, std::string> respond(const std::string& route, const std::string& raw) {
    nlohmann::ordered_json req;
    try {
      req = nlohmann::ordered_json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      return error(400, "request is not valid JSON");
    }
    if (!req.is_object()) return error(400, "request is not a JSON object");

    auto require = [&req](std::initializer_list<const char*> keys) -> std::optional<std::string> {
      for (const char* k : keys) {
        if (!req.contains(k)) return std::string("missing field '") + k + "'";
      }
      return std::nullopt;
    };

    if (route == "/generate") {
      if (auto miss = require({"skill", "context", "dialogue", "attempt"})) return error(400, *miss);
      for (auto& e : tables_.generate) {
        if (matches(e, req)) return serve(e);
      }
      return error(422, "no generate entry for skill " + req.at("skill").dump());
    }
    if (route == "/rank") {
      if (auto miss = require({"skill", "context", "dialogue", "candidates"})) return error(400, *miss);
      if (!req.at("candidates").is_array()) return error(400, "'candidates' is not an array");
      for (auto& e : tables_.rank) {
        if (matches(e, req)) return serve(e);
      }
      auto zeros = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < req.at("candidates").size(); ++i) zeros.push_back(0.0);
      return {200, nlohmann::ordered_json{{"scores", zeros}}.dump()};
    }
    if (route == "/nli") {
      if (auto miss = require({"premise", "hypothesis"})) return error(400, *miss);
      for (auto& e : tables_.nli) {
        if (matches(e, req)) return serve(e);
      }
      return {200, tables_.nli_default.dump()};
    }
    if (route == "/classify") {
      if (auto miss = require({"text"})) return error(400, *miss);
      for (auto& e : tables_.classify) {
        if (matches(e, req)) return serve(e);
      }
      if (tables_.classify_default) return {200, tables_.classify_default->dump()};
      return error(422, "no classify entry");
    }
    return error(404, "unknown route");
  }

  MockTables tables_;
  httplib::Server server_;
  std::thread thread_;
  std::string host_;
  int port_ = -1;
  mutable std::mutex mu_;
  std::vector<Exchange> log_;
};

}  // namespace skillblend
