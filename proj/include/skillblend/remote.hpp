#pragma once

// HTTP clients for remote generator / ranker / NLI / classifier backends.

#include <chrono>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>

#include "skillblend/agents.hpp"
#include "skillblend/classifiers.hpp"
#include "skillblend/wire.hpp"

namespace skillblend {

struct BackendEndpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8080" or "http://host:port/prefix"
  int timeout_ms = 5000;
  int max_retries = 2;
  std::size_t pool_size = 4;

  void validate() const {
    if (base_url.empty()) throw Error(ErrorCode::config, "endpoint: empty base_url");
    if (timeout_ms <= 0) throw Error(ErrorCode::config, "endpoint: timeout_ms must be > 0");
    if (max_retries < 0) throw Error(ErrorCode::config, "endpoint: max_retries must be >= 0");
  }
};

// Owns a small pool of keep-alive connections to one backend; safe to call
// from several threads at once.
class BackendClient {
 public:
  explicit BackendClient(BackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    auto scheme = endpoint_.base_url.find("://");
    auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = endpoint_.base_url.find('/', host_start);
    if (slash == std::string::npos) {
      origin_ = endpoint_.base_url;
    } else {
      origin_ = endpoint_.base_url.substr(0, slash);
      prefix_ = endpoint_.base_url.substr(slash);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  const BackendEndpoint& endpoint() const { return endpoint_; }

  // POSTs `body` to `route`, retrying connection failures and 5xx replies up
  // to max_retries times. Returns the 200 response body.
  std::string post(const std::string& route, const std::string& body) {
    std::string last_problem;
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
      auto conn = acquire();
      auto res = conn->Post(prefix_ + route, body, "application/json");
      if (!res) {
        last_problem = httplib::to_string(res.error());
        continue;  // broken connection is dropped, not returned to the pool
      }
      const int status = res->status;
      std::string reply = res->body;
      release(std::move(conn));
      if (status == 200) return reply;
      if (status >= 500) {
        last_problem = "HTTP " + std::to_string(status);
        continue;
      }
      throw Error(ErrorCode::protocol, route + ": HTTP " + std::to_string(status), reply);
    }
    throw Error(ErrorCode::backend_unavailable,
                route + ": " + endpoint_.base_url + " unavailable after " + std::to_string(endpoint_.max_retries + 1) +
                    " attempt(s) (" + last_problem + ")");
  }

 private:
  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard lock(mu_);
      if (!idle_.empty()) {
        auto c = std::move(idle_.back());
        idle_.pop_back();
        return c;
      }
    }
    auto c = std::make_unique<httplib::Client>(origin_);
    const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
    c->set_connection_timeout(timeout);
    c->set_read_timeout(timeout);
    c->set_write_timeout(timeout);
    c->set_keep_alive(true);
    c->set_tcp_nodelay(true);
    return c;
  }

  void release(std::unique_ptr<httplib::Client> c) {
    std::lock_guard lock(mu_);
    if (idle_.size() < endpoint_.pool_size) idle_.push_back(std::move(c));
  }

  BackendEndpoint endpoint_;
  std::string origin_;
  std::string prefix_;
  std::mutex mu_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
};

inline ResponseCandidate remote_generate(BackendClient& client, const SkillId& skill, const SkillContext& stx,
                                         const DialogueContext& dtx, int attempt) {
  if (attempt < 1) throw Error(ErrorCode::invalid_input, "attempt must be >= 1");
  auto body = client.post("/generate", wire::generate_request(skill, stx, dtx, attempt));
  auto parsed = wire::parse_generate_response(body);
  return ResponseCandidate{std::move(parsed.text), skill, parsed.score, attempt};
}

inline std::vector<double> remote_rank(BackendClient& client, const SkillId& skill, const SkillContext& stx,
                                       const DialogueContext& dtx, std::span<const ResponseCandidate> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_input, "rank: empty candidate list");
  auto body = client.post("/rank", wire::rank_request(skill, stx, dtx, candidates));
  return wire::parse_rank_response(body, candidates.size());
}

inline NliVerdict remote_nli(BackendClient& client, std::string_view premise, std::string_view hypothesis) {
  return wire::parse_nli_response(client.post("/nli", wire::nli_request(premise, hypothesis)));
}

inline SkillDistribution remote_classify(BackendClient& client, std::string_view text, std::size_t roster_size) {
  return wire::parse_classify_response(client.post("/classify", wire::classify_request(text)), roster_size);
}

class RemoteAgent final : public SkillAgent {
 public:
  RemoteAgent(SkillId skill, std::shared_ptr<BackendClient> client) : skill_(std::move(skill)), client_(std::move(client)) {}

  const SkillId& skill() const override { return skill_; }
  ResponseCandidate generate(const SkillContext& stx, const DialogueContext& dtx, int attempt) const override {
    return remote_generate(*client_, skill_, stx, dtx, attempt);
  }
  std::vector<double> rank(const SkillContext& stx, const DialogueContext& dtx,
                           std::span<const ResponseCandidate> candidates) const override {
    return remote_rank(*client_, skill_, stx, dtx, candidates);
  }

 private:
  SkillId skill_;
  std::shared_ptr<BackendClient> client_;
};

class RemoteNliJudge final : public NliJudge {
 public:
  explicit RemoteNliJudge(std::shared_ptr<BackendClient> client) : client_(std::move(client)) {}
  NliVerdict judge(std::string_view premise, std::string_view hypothesis) const override {
    return remote_nli(*client_, premise, hypothesis);
  }

 private:
  std::shared_ptr<BackendClient> client_;
};

class RemoteSkillScorer final : public SkillScorer {
 public:
  RemoteSkillScorer(SkillRoster roster, std::shared_ptr<BackendClient> client)
      : roster_(std::move(roster)), client_(std::move(client)) {}
  SkillDistribution score(std::string_view text) const override {
    return remote_classify(*client_, text, roster_.size());
  }
  const SkillRoster& roster() const override { return roster_; }

 private:
  SkillRoster roster_;
  std::shared_ptr<BackendClient> client_;
};

}  // namespace skillblend
