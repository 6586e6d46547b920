#pragma once

// The moderator's two approval gates and the selection steps built on them:
//   consistency gate   - refuse a response that any context line contradicts
//   flow gate          - refuse a response whose skill distribution drifts
//                        from the previous turn by KL >= alpha
// simulate_approved regenerates until the consistency gate approves (bounded
// by max_attempts); select_final ranks the approved pool with the active
// agent and applies the flow gate.

#include <cassert>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "skillblend/agents.hpp"
#include "skillblend/classifiers.hpp"
#include "skillblend/core.hpp"
#include "skillblend/distmath.hpp"

namespace skillblend {

struct GateOk {
  friend bool operator==(const GateOk&, const GateOk&) = default;
};
struct NliContradiction {
  SkillId context_skill;
  friend bool operator==(const NliContradiction&, const NliContradiction&) = default;
};
struct KlExceeded {
  double kl_value = 0.0;
  friend bool operator==(const KlExceeded&, const KlExceeded&) = default;
};

struct GateDecision {
  std::variant<GateOk, NliContradiction, KlExceeded> reason;

  bool approved() const { return std::holds_alternative<GateOk>(reason); }

  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

inline GateDecision consistency_gate(const NliJudge& judge, const SkillContextSet& stx_all, std::string_view response) {
  for (const auto& [index, ctx] : stx_all) {
    for (const auto& line : ctx.lines) {
      if (judge.judge(line, response).label == NliLabel::contradict) {
        return GateDecision{NliContradiction{ctx.skill}};
      }
    }
  }
  return GateDecision{GateOk{}};
}

struct SimulationResult {
  std::optional<ResponseCandidate> candidate;  // empty when every attempt was refused
  std::vector<Refusal> refusals;

  bool exhausted() const { return !candidate.has_value(); }
};

inline SimulationResult simulate_approved(const SkillAgent& agent, const NliJudge& judge, const SkillContextSet& stx_all,
                                          const SkillContext& stx_own, const DialogueContext& dtx, int max_attempts) {
  if (max_attempts < 1) throw Error(ErrorCode::invalid_input, "max_attempts must be >= 1");
  SimulationResult result;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    try {
      auto cand = agent.generate(stx_own, dtx, attempt);
      assert(cand.origin == agent.skill());
      cand.attempts = attempt;
      auto gate = consistency_gate(judge, stx_all, cand.text);
      if (gate.approved()) {
        result.candidate = std::move(cand);
        return result;
      }
      result.refusals.push_back({agent.skill(), std::get<NliContradiction>(gate.reason).context_skill});
    } catch (const Error& e) {
      throw e.with_context("skill " + agent.skill().id + " attempt " + std::to_string(attempt));
    }
  }
  return result;
}

inline GateDecision flow_gate(const SkillScorer& scorer, std::string_view prev_text, std::string_view cand_text,
                              double alpha, double epsilon) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_input, "alpha must be > 0");
  const double kl = kl_divergence(scorer.score(prev_text), scorer.score(cand_text), epsilon);
  if (kl < alpha) return GateDecision{GateOk{}};
  return GateDecision{KlExceeded{kl}};
}

struct SelectionOutcome {
  ResponseCandidate winner;
  std::size_t winner_index = 0;
  bool mic_passed = false;
  std::vector<GateDecision> gate_log;
  std::vector<double> ranker_scores;
  bool used_fallback = false;
};

// Winner = highest ranker score among flow-gate approved candidates (lowest
// index on ties). If the gate refuses everything, fall back to the active
// agent's own candidate, else to the highest ranker score overall.
inline SelectionOutcome select_final(const SkillAgent& active, const SkillScorer& scorer, const SkillContext& stx_active,
                                     const DialogueContext& dtx, std::span<const ResponseCandidate> candidates,
                                     double alpha, double epsilon) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_input, "select_final: no candidates");
  const auto& prev = dtx.last().text;

  SelectionOutcome out;
  out.ranker_scores = active.rank(stx_active, dtx, candidates);
  if (out.ranker_scores.size() != candidates.size()) {
    throw Error(ErrorCode::protocol, "ranker returned " + std::to_string(out.ranker_scores.size()) + " scores for " +
                                         std::to_string(candidates.size()) + " candidates");
  }
  detail::require_finite(out.ranker_scores, "ranker scores");

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.gate_log.push_back(flow_gate(scorer, prev, candidates[i].text, alpha, epsilon));
    if (out.gate_log.back().approved() && (!best || out.ranker_scores[i] > out.ranker_scores[*best])) best = i;
  }

  if (!best) {
    out.used_fallback = true;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].origin == active.skill()) {
        best = i;
        break;
      }
    }
    if (!best) best = stable_argmax(out.ranker_scores);
  }

  out.winner_index = *best;
  out.winner = candidates[*best];
  out.mic_passed = !(out.winner.origin == active.skill());
  return out;
}

}  // namespace skillblend
