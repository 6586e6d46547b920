#pragma once

#include <string>
#include <vector>

#include "skillblend/core.hpp"
#include "skillblend/distmath.hpp"

namespace skillblend {

// Checks every Episode / AnnotatedTurn invariant under `cfg`. Each violation
// is reported as "<category>: <details>"; an empty result means the episode
// is well formed. Never throws on well-typed input.
inline std::vector<std::string> validate_episode(const Episode& ep, const EngineConfig& cfg) {
  std::vector<std::string> out;
  auto report = [&out](const std::string& category, const std::string& what) {
    out.push_back(category + ": " + what);
  };
  const auto& roster = cfg.skill_roster;
  const auto m = roster.size();

  if (ep.id.empty()) report("id", "episode id is empty");
  if (ep.config_digest.empty()) report("digest", "config digest is empty");
  if (!roster.contains(ep.seed_dataset)) report("roster", "seed dataset '" + ep.seed_dataset.id + "' not in roster");

  for (int side = 0; side < 2; ++side) {
    for (const auto& [index, ctx] : ep.contexts[static_cast<std::size_t>(side)]) {
      if (!roster.contains(ctx.skill) || ctx.skill.index != index) {
        report("roster", "side " + std::to_string(side) + " context skill '" + ctx.skill.id + "' not in roster");
      }
      for (const auto& line : ctx.lines) {
        if (is_blank(line)) report("context", "side " + std::to_string(side) + " skill " + ctx.skill.id + " has a blank line");
      }
    }
  }

  if (ep.turns.size() != static_cast<std::size_t>(cfg.episode_length)) {
    report("length", "episode has " + std::to_string(ep.turns.size()) + " turns, expected " +
                         std::to_string(cfg.episode_length));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    if (i >= ep.turns.size() || ep.turns[i].utterance.text != ep.seed_pair[i].text) {
      report("seed", "turn " + std::to_string(i) + " does not match seed pair");
    }
  }

  const int first_speaker = ep.seed_pair[0].speaker;
  if (first_speaker != 0 && first_speaker != 1) report("speaker", "seed speaker must be 0 or 1");
  SkillId active = ep.seed_dataset;

  for (std::size_t i = 0; i < ep.turns.size(); ++i) {
    const auto& t = ep.turns[i];
    const std::string where = "turn " + std::to_string(i);
    if (t.utterance.turn != static_cast<int>(i)) report("turn_index", where + " has index " + std::to_string(t.utterance.turn));
    if (t.utterance.speaker != (first_speaker + static_cast<int>(i)) % 2) report("speaker", where + " breaks alternation");
    if (t.utterance.text.empty() || is_blank(t.utterance.text)) report("text", where + " is blank");

    if (t.distribution.size() != m || !t.distribution.is_valid()) {
      report("distribution", where + " distribution is not a valid length-" + std::to_string(m) + " vector");
    } else {
      bool finite = true;
      for (double p : t.distribution.probs) finite = finite && std::isfinite(p);
      if (finite) {
        auto expected = roster.at(stable_argmax(t.distribution.probs));
        if (!(t.skill_label == expected)) {
          report("label", where + " labeled '" + t.skill_label.id + "' but argmax is '" + expected.id + "'");
        }
      }
    }
    if (!roster.contains(t.skill_label)) report("roster", where + " label not in roster");
    if (!roster.contains(t.origin)) report("roster", where + " origin not in roster");

    for (const auto& r : t.refusals) {
      if (!roster.contains(r.candidate_skill) || !roster.contains(r.context_skill)) {
        report("refusal", where + " refusal names a skill outside the roster");
      }
    }

    if (i < 2) {
      if (t.mic_passed) report("seed_annotation", where + " seed turn has mic_passed set");
      if (t.phase2_attempts != 0) report("seed_annotation", where + " seed turn has phase2 attempts");
      if (!t.refusals.empty()) report("seed_annotation", where + " seed turn has refusals");
      continue;
    }
    if (t.phase2_attempts < 1 || t.phase2_attempts > cfg.max_attempts) {
      report("attempts", where + " phase2_attempts " + std::to_string(t.phase2_attempts) + " outside [1, " +
                             std::to_string(cfg.max_attempts) + "]");
    }
    if (t.mic_passed != !(t.origin == active)) {
      report("mic", where + " mic_passed disagrees with the replayed active skill '" + active.id + "'");
    }
    active = t.origin;
  }
  return out;
}

}  // namespace skillblend
