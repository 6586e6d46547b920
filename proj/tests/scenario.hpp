#pragma once

// Hand-built mic-passing scenario shared by the orchestrator tests and the
// acceptance suite. Roster P,K,E, seed skill P, alpha 1, 8 turns.
//
// Candidate texts are "<skill>-t<turn>" ("-a<n>" for regenerations). Skill
// distributions (D_P = [.8,.1,.1], D_PK = [.45,.45,.1], D_K = [.1,.8,.1],
// D_E = [.1,.1,.8], D_M = [.2,.4,.4]) and ranker scores per turn:
//
//   turn active prev  candidates (score, dist, gate)                    winner
//   2    P      D_P   P .9 D_P ok   K .5 D_P ok    E .4 D_P ok           P
//   3    P      D_P   P .6 D_P ok   K .8 D_PK ok   E .2 D_P ok           K  (mic -> K)
//   4    K      D_PK  P .3 D_PK ok  K .7 D_K ok    E-a2 .1 D_PK ok       K  (E-t4 refused by NLI)
//   5    K      D_K   P .2 D_K ok   K .6 D_K ok    E .95 D_E KL 1.456    K  (E blocked by alpha)
//   6    K      D_K   P .1 D_K ok   K .5 D_K ok    E .9 D_M KL 0.347     E  (mic -> E)
//   7    E      D_M   P .9 D_P ok   K .2 D_M ok    E .4 D_M ok           P  (mic -> P)

#include <map>
#include <memory>
#include <string>

#include "support.hpp"

namespace sbtest {

class ScenarioAgent final : public SkillAgent {
 public:
  ScenarioAgent(SkillId skill, std::shared_ptr<const std::map<std::string, double>> scores)
      : skill_(std::move(skill)), scores_(std::move(scores)) {}

  const SkillId& skill() const override { return skill_; }
  ResponseCandidate generate(const SkillContext&, const DialogueContext& dtx, int attempt) const override {
    auto text = skill_.id + "-t" + std::to_string(dtx.size());
    if (attempt > 1) text += "-a" + std::to_string(attempt);
    return {text, skill_, 0.0, attempt};
  }
  std::vector<double> rank(const SkillContext&, const DialogueContext&,
                           std::span<const ResponseCandidate> candidates) const override {
    std::vector<double> out;
    for (const auto& c : candidates) out.push_back(scores_->at(c.text));
    return out;
  }

 private:
  SkillId skill_;
  std::shared_ptr<const std::map<std::string, double>> scores_;
};

struct MicScenario {
  SeedEpisode seed;
  Participants parts;
  EngineConfig cfg;
  std::vector<bool> expected_mic;
  std::vector<std::string> expected_active;  // active skill after each turn
  std::vector<std::string> expected_text;
};

inline MicScenario mic_scenario() {
  const SkillRoster roster;
  const std::vector<double> dP = {0.8, 0.1, 0.1}, dPK = {0.45, 0.45, 0.1}, dK = {0.1, 0.8, 0.1}, dE = {0.1, 0.1, 0.8},
                            dM = {0.2, 0.4, 0.4};
  auto scores = std::make_shared<std::map<std::string, double>>();
  auto scorer = std::make_shared<TableScorer>(roster);
  auto judge = std::make_shared<TableJudge>();
  auto& s = *scores;
  auto& d = scorer->table;

  d["seed0"] = dP;
  d["seed1"] = dP;
  s["P-t2"] = 0.9, d["P-t2"] = dP;
  s["K-t2"] = 0.5, d["K-t2"] = dP;
  s["E-t2"] = 0.4, d["E-t2"] = dP;
  s["P-t3"] = 0.6, d["P-t3"] = dP;
  s["K-t3"] = 0.8, d["K-t3"] = dPK;
  s["E-t3"] = 0.2, d["E-t3"] = dP;
  s["P-t4"] = 0.3, d["P-t4"] = dPK;
  s["K-t4"] = 0.7, d["K-t4"] = dK;
  s["E-t4-a2"] = 0.1, d["E-t4-a2"] = dPK;
  s["P-t5"] = 0.2, d["P-t5"] = dK;
  s["K-t5"] = 0.6, d["K-t5"] = dK;
  s["E-t5"] = 0.95, d["E-t5"] = dE;
  s["P-t6"] = 0.1, d["P-t6"] = dK;
  s["K-t6"] = 0.5, d["K-t6"] = dK;
  s["E-t6"] = 0.9, d["E-t6"] = dM;
  s["P-t7"] = 0.9, d["P-t7"] = dP;
  s["K-t7"] = 0.2, d["K-t7"] = dM;
  s["E-t7"] = 0.4, d["E-t7"] = dM;
  judge->table[{"feeling nervous", "E-t4"}] = NliLabel::contradict;

  MicScenario sc;
  sc.cfg.alpha = 1.0;
  sc.cfg.episode_length = 8;
  sc.seed.seed_dataset = roster.at(0);
  sc.seed.initial_active = roster.at(0);
  sc.seed.pair = {Utterance{0, 0, "seed0"}, Utterance{1, 1, "seed1"}};
  sc.seed.contexts[0].set({roster.at(2), {"feeling nervous"}});
  sc.seed.contexts[1].set({roster.at(0), {"likes tea"}});
  for (const auto& skill : roster.skills()) sc.parts.agents.push_back(std::make_shared<ScenarioAgent>(skill, scores));
  sc.parts.judge = judge;
  sc.parts.scorer = scorer;

  sc.expected_mic = {false, false, false, true, false, false, true, true};
  sc.expected_active = {"P", "P", "P", "K", "K", "K", "E", "P"};
  sc.expected_text = {"seed0", "seed1", "P-t2", "K-t3", "K-t4", "K-t5", "E-t6", "P-t7"};
  return sc;
}

}  // namespace sbtest
