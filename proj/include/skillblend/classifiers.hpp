#pragma once

// The moderator's two perception channels: an NLI judge and a skill scorer.
// Lexical implementations live here; HTTP-backed ones are in remote.hpp.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillblend/core.hpp"
#include "skillblend/distmath.hpp"
#include "skillblend/text.hpp"

namespace skillblend {

enum class NliLabel { entail, neutral, contradict };

inline const char* to_string(NliLabel label) {
  switch (label) {
    case NliLabel::entail: return "entail";
    case NliLabel::neutral: return "neutral";
    case NliLabel::contradict: return "contradict";
  }
  return "neutral";
}

inline std::optional<NliLabel> parse_nli_label(std::string_view s) {
  if (s == "entail") return NliLabel::entail;
  if (s == "neutral") return NliLabel::neutral;
  if (s == "contradict") return NliLabel::contradict;
  return std::nullopt;
}

struct NliVerdict {
  NliLabel label = NliLabel::neutral;
  double confidence = 0.5;

  friend bool operator==(const NliVerdict&, const NliVerdict&) = default;
};

class NliJudge {
 public:
  virtual ~NliJudge() = default;
  virtual NliVerdict judge(std::string_view premise, std::string_view hypothesis) const = 0;
};

class SkillScorer {
 public:
  virtual ~SkillScorer() = default;
  virtual SkillDistribution score(std::string_view text) const = 0;
  virtual const SkillRoster& roster() const = 0;
};

struct WeightedKeyword {
  std::string term;
  double weight = 1.0;
};

struct PatternPair {
  std::string premise;
  std::string hypothesis;
};

// Keyword tables per skill (aligned with `roster`) plus ordered NLI pattern
// tables. Anything that matches no pattern is Neutral.
struct LexiconSpec {
  SkillRoster roster;
  std::vector<std::vector<WeightedKeyword>> keywords;
  std::vector<PatternPair> contradictions;
  std::vector<PatternPair> entailments;

  void validate() const {
    if (keywords.size() != roster.size()) {
      throw Error(ErrorCode::config, "lexicon: keyword table must have one entry per roster skill");
    }
    for (const auto& list : keywords) {
      for (const auto& kw : list) {
        if (kw.term.empty()) throw Error(ErrorCode::config, "lexicon: empty keyword");
        if (!std::isfinite(kw.weight)) throw Error(ErrorCode::config, "lexicon: non-finite weight for '" + kw.term + "'");
      }
    }
    for (const auto* table : {&contradictions, &entailments}) {
      for (const auto& p : *table) {
        if (p.premise.empty() || p.hypothesis.empty()) throw Error(ErrorCode::config, "lexicon: empty pattern");
      }
    }
  }
};

inline NliVerdict lexical_nli(const LexiconSpec& spec, std::string_view premise, std::string_view hypothesis) {
  const auto prem = to_lower(premise);
  const auto hyp = to_lower(hypothesis);
  auto matches = [&](const PatternPair& p) {
    return prem.find(to_lower(p.premise)) != std::string::npos && hyp.find(to_lower(p.hypothesis)) != std::string::npos;
  };
  for (const auto& p : spec.contradictions) {
    if (matches(p)) return {NliLabel::contradict, 1.0};
  }
  for (const auto& p : spec.entailments) {
    if (matches(p)) return {NliLabel::entail, 1.0};
  }
  return {NliLabel::neutral, 0.5};
}

inline SkillDistribution lexical_skill_score(const LexiconSpec& spec, std::string_view text) {
  const auto lowered = to_lower(text);
  std::vector<double> raw(spec.roster.size(), 0.0);
  for (std::size_t s = 0; s < raw.size() && s < spec.keywords.size(); ++s) {
    for (const auto& kw : spec.keywords[s]) {
      if (lowered.find(to_lower(kw.term)) != std::string::npos) raw[s] += kw.weight;
    }
  }
  return softmax(raw);
}

class LexicalNliJudge final : public NliJudge {
 public:
  explicit LexicalNliJudge(LexiconSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  NliVerdict judge(std::string_view premise, std::string_view hypothesis) const override {
    return lexical_nli(spec_, premise, hypothesis);
  }

 private:
  LexiconSpec spec_;
};

class LexicalSkillScorer final : public SkillScorer {
 public:
  explicit LexicalSkillScorer(LexiconSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  SkillDistribution score(std::string_view text) const override { return lexical_skill_score(spec_, text); }
  const SkillRoster& roster() const override { return spec_.roster; }

 private:
  LexiconSpec spec_;
};

inline SkillId classify_label(const SkillScorer& scorer, std::string_view text) {
  auto dist = scorer.score(text);
  return scorer.roster().at(stable_argmax(dist.probs));
}

// {"keywords": {"P": [["love", 1.0], ...], ...},
//  "contradictions": [["premise pattern", "hypothesis pattern"], ...],
//  "entailments": [...]}
inline LexiconSpec lexicon_from_json(const nlohmann::json& j, const SkillRoster& roster) {
  LexiconSpec spec;
  spec.roster = roster;
  spec.keywords.assign(roster.size(), {});
  try {
    if (j.contains("keywords")) {
      for (const auto& [id, list] : j.at("keywords").items()) {
        auto skill = roster.require(id);
        for (const auto& entry : list) {
          spec.keywords[skill.index].push_back({entry.at(0).get<std::string>(), entry.at(1).get<double>()});
        }
      }
    }
    auto pairs = [&j](const char* key) {
      std::vector<PatternPair> out;
      if (!j.contains(key)) return out;
      for (const auto& entry : j.at(key)) out.push_back({entry.at(0).get<std::string>(), entry.at(1).get<std::string>()});
      return out;
    };
    spec.contradictions = pairs("contradictions");
    spec.entailments = pairs("entailments");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("lexicon: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline nlohmann::ordered_json lexicon_to_json(const LexiconSpec& spec) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json kws = nlohmann::ordered_json::object();
  for (std::size_t s = 0; s < spec.roster.size(); ++s) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& kw : spec.keywords[s]) list.push_back({kw.term, kw.weight});
    kws[spec.roster.ids()[s]] = list;
  }
  j["keywords"] = kws;
  auto pairs = [](const std::vector<PatternPair>& in) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& p : in) out.push_back({p.premise, p.hypothesis});
    return out;
  };
  j["contradictions"] = pairs(spec.contradictions);
  j["entailments"] = pairs(spec.entailments);
  return j;
}

}  // namespace skillblend
