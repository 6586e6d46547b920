#pragma once

// Skill agents: a generator that proposes one candidate per attempt and a
// ranker that scores a candidate pool. ScriptedAgent is the deterministic
// stand-in; RemoteAgent (remote.hpp) talks to a model server.

#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillblend/core.hpp"
#include "skillblend/text.hpp"

namespace skillblend {

class SkillAgent {
 public:
  virtual ~SkillAgent() = default;
  virtual const SkillId& skill() const = 0;
  virtual ResponseCandidate generate(const SkillContext& stx, const DialogueContext& dtx, int attempt) const = 0;
  virtual std::vector<double> rank(const SkillContext& stx, const DialogueContext& dtx,
                                   std::span<const ResponseCandidate> candidates) const = 0;
};

struct ResponseTemplate {
  // Placeholders: {context} first context line, {last} previous utterance,
  // {last_word} final token of the previous utterance.
  std::string text;
  double base_score = 0.0;
};

struct ScriptedAgentSpec {
  SkillId skill;
  std::vector<ResponseTemplate> templates;
  bool cyclic = true;

  void validate(int max_attempts) const {
    if (templates.empty()) throw Error(ErrorCode::config, "agent " + skill.id + ": no templates");
    if (!cyclic && templates.size() < static_cast<std::size_t>(max_attempts)) {
      throw Error(ErrorCode::config, "agent " + skill.id + ": fewer templates than max_attempts and cyclic reuse disabled");
    }
    for (const auto& t : templates) {
      auto literal = t.text;
      for (const char* ph : {"{context}", "{last_word}", "{last}"}) {
        for (auto pos = literal.find(ph); pos != std::string::npos; pos = literal.find(ph)) {
          literal.erase(pos, std::string_view(ph).size());
        }
      }
      if (is_blank(literal)) throw Error(ErrorCode::config, "agent " + skill.id + ": template without literal text");
    }
  }
};

namespace detail {
inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}
}  // namespace detail

inline ResponseCandidate scripted_generate(const ScriptedAgentSpec& spec, const SkillContext& stx,
                                           const DialogueContext& dtx, int attempt) {
  if (attempt < 1) throw Error(ErrorCode::invalid_input, "attempt must be >= 1");
  if (spec.templates.empty()) throw Error(ErrorCode::config, "agent " + spec.skill.id + ": no templates");
  const auto index = static_cast<std::size_t>(attempt - 1) % spec.templates.size();
  const auto& tmpl = spec.templates[index];

  const std::string context = stx.lines.empty() ? std::string() : stx.lines.front();
  const std::string last = dtx.empty() ? std::string() : dtx.last().text;
  const auto last_tokens = tokenize(last);
  const std::string last_word = last_tokens.empty() ? std::string() : last_tokens.back();

  std::string text = tmpl.text;
  detail::replace_all(text, "{context}", context);
  detail::replace_all(text, "{last_word}", last_word);
  detail::replace_all(text, "{last}", last);
  return ResponseCandidate{std::move(text), spec.skill, tmpl.base_score, attempt};
}

// Distinct candidate tokens that occur anywhere in the context lines, plus
// 0.5 for candidates of the agent's own skill.
inline std::vector<double> scripted_rank(const ScriptedAgentSpec& spec, const SkillContext& stx,
                                         const DialogueContext& /*dtx*/, std::span<const ResponseCandidate> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_input, "rank: empty candidate list");
  std::set<std::string> context_terms;
  for (const auto& line : stx.lines) {
    for (auto& t : tokenize(line)) context_terms.insert(std::move(t));
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    auto terms = tokenize(c.text);
    std::set<std::string> distinct(terms.begin(), terms.end());
    double overlap = 0.0;
    for (const auto& t : distinct) {
      if (context_terms.count(t)) overlap += 1.0;
    }
    if (c.origin == spec.skill) overlap += 0.5;
    scores.push_back(overlap);
  }
  return scores;
}

class ScriptedAgent final : public SkillAgent {
 public:
  explicit ScriptedAgent(ScriptedAgentSpec spec) : spec_(std::move(spec)) {}

  const SkillId& skill() const override { return spec_.skill; }
  const ScriptedAgentSpec& spec() const { return spec_; }

  ResponseCandidate generate(const SkillContext& stx, const DialogueContext& dtx, int attempt) const override {
    return scripted_generate(spec_, stx, dtx, attempt);
  }
  std::vector<double> rank(const SkillContext& stx, const DialogueContext& dtx,
                           std::span<const ResponseCandidate> candidates) const override {
    return scripted_rank(spec_, stx, dtx, candidates);
  }

 private:
  ScriptedAgentSpec spec_;
};

// {"P": {"cyclic": true, "templates": [["text", 0.5], ...]}, ...}
inline std::vector<ScriptedAgentSpec> agent_specs_from_json(const nlohmann::json& j, const SkillRoster& roster) {
  std::vector<ScriptedAgentSpec> specs;
  try {
    for (const auto& skill : roster.skills()) {
      if (!j.contains(skill.id)) throw Error(ErrorCode::config, "agents: no entry for skill " + skill.id);
      const auto& entry = j.at(skill.id);
      ScriptedAgentSpec spec{skill, {}, entry.value("cyclic", true)};
      for (const auto& t : entry.at("templates")) spec.templates.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
      specs.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("agents: ") + e.what());
  }
  return specs;
}

}  // namespace skillblend
