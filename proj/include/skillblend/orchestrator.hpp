#pragma once

// Episode state machine and batch runner.
//
// Per generated turn:
//   1. every skill agent proposes a candidate for the speaking side, and
//      regenerates until the consistency gate approves (simulate_approved);
//   2. the active agent ranks the approved pool and the flow gate filters it
//      (select_final);
//   3. the winner is appended and annotated; if it came from another skill the
//      mic passes to that skill.

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "skillblend/agents.hpp"
#include "skillblend/classifiers.hpp"
#include "skillblend/core.hpp"
#include "skillblend/moderator.hpp"
#include "skillblend/seeds.hpp"

namespace skillblend {

struct Participants {
  std::vector<std::shared_ptr<const SkillAgent>> agents;  // roster order
  std::shared_ptr<const NliJudge> judge;
  std::shared_ptr<const SkillScorer> scorer;

  void check(const SkillRoster& roster) const {
    if (agents.size() != roster.size()) {
      throw Error(ErrorCode::config, "need exactly one agent per roster skill (" + std::to_string(roster.size()) + "), got " +
                                         std::to_string(agents.size()));
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (!agents[i] || !(agents[i]->skill() == roster.at(i))) {
        throw Error(ErrorCode::config, "agent " + std::to_string(i) + " does not serve skill " + roster.ids()[i]);
      }
    }
    if (!judge) throw Error(ErrorCode::config, "no NLI judge");
    if (!scorer) throw Error(ErrorCode::config, "no skill scorer");
    if (!(scorer->roster() == roster)) throw Error(ErrorCode::config, "scorer roster differs from engine roster");
  }
};

struct EpisodeState {
  DialogueContext dtx;
  SkillId active_skill;
  int turn_cursor = 0;
  int side_to_speak = 0;
  std::vector<AnnotatedTurn> annotated;
};

namespace detail {

inline AnnotatedTurn annotate(const SkillScorer& scorer, Utterance u, const SkillId& origin) {
  AnnotatedTurn t;
  t.distribution = scorer.score(u.text);
  t.skill_label = scorer.roster().at(stable_argmax(t.distribution.probs));
  t.utterance = std::move(u);
  t.origin = origin;
  return t;
}

}  // namespace detail

inline Episode run_episode(const SeedEpisode& seed, const Participants& parts, const EngineConfig& cfg,
                           const std::string& episode_id) {
  try {
    EpisodeState st;
    st.active_skill = seed.initial_active;
    for (int i = 0; i < 2; ++i) {
      Utterance u = seed.pair[static_cast<std::size_t>(i)];
      u.turn = i;
      st.dtx.turns.push_back(u);
      st.annotated.push_back(detail::annotate(*parts.scorer, std::move(u), seed.seed_dataset));
    }
    st.turn_cursor = 2;
    st.side_to_speak = (seed.pair[1].speaker + 1) % 2;

    while (st.turn_cursor < cfg.episode_length) {
      const auto& side_ctx = seed.contexts[static_cast<std::size_t>(st.side_to_speak)];
      std::vector<ResponseCandidate> pool;
      std::vector<Refusal> refusals;
      for (const auto& agent : parts.agents) {
        auto sim = simulate_approved(*agent, *parts.judge, side_ctx, side_ctx.get_or_empty(agent->skill()), st.dtx,
                                     cfg.max_attempts);
        refusals.insert(refusals.end(), sim.refusals.begin(), sim.refusals.end());
        if (sim.candidate) pool.push_back(std::move(*sim.candidate));
      }
      if (pool.empty()) {
        throw Error(ErrorCode::episode_abort,
                    "turn " + std::to_string(st.turn_cursor) + ": every agent exhausted " +
                        std::to_string(cfg.max_attempts) + " attempts");
      }

      const auto& active = *parts.agents.at(st.active_skill.index);
      auto outcome = select_final(active, *parts.scorer, side_ctx.get_or_empty(st.active_skill), st.dtx, pool, cfg.alpha,
                                  cfg.epsilon);

      Utterance u{st.side_to_speak, st.turn_cursor, outcome.winner.text};
      st.dtx.turns.push_back(u);
      auto turn = detail::annotate(*parts.scorer, std::move(u), outcome.winner.origin);
      turn.mic_passed = outcome.mic_passed;
      turn.phase2_attempts = outcome.winner.attempts;
      turn.refusals = std::move(refusals);
      st.annotated.push_back(std::move(turn));

      if (outcome.mic_passed) st.active_skill = outcome.winner.origin;
      st.side_to_speak = 1 - st.side_to_speak;
      ++st.turn_cursor;
    }

    Episode ep;
    ep.id = episode_id;
    ep.seed_dataset = seed.seed_dataset;
    ep.seed_pair = {st.dtx.turns[0], st.dtx.turns[1]};
    ep.contexts = seed.contexts;
    ep.turns = std::move(st.annotated);
    ep.config_digest = config_digest(cfg);
    return ep;
  } catch (const Error& e) {
    throw e.with_context("episode " + episode_id);
  }
}

inline std::string episode_id_for(std::size_t seed_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ep%06zu", seed_index);
  return buf;
}

struct AbortRecord {
  std::size_t seed_index = 0;
  std::string message;
};

struct BatchReport {
  std::size_t written = 0;
  std::size_t aborted = 0;
  std::size_t refusal_total = 0;
  std::vector<AbortRecord> aborts;
};

// Thrown when the sink fails; carries what had been written so far.
class BatchFailure : public Error {
 public:
  BatchFailure(const Error& cause, BatchReport partial)
      : Error(cause.code(), std::string("batch stopped: ") + cause.what(), cause.detail()), partial_(std::move(partial)) {}
  const BatchReport& partial() const { return partial_; }

 private:
  BatchReport partial_;
};

using EpisodeSink = std::function<void(const Episode&)>;
using ProgressFn = std::function<void(std::size_t completed, std::size_t aborted)>;

// Runs every seed with up to `parallelism` workers. The sink sees episodes in
// seed order on the calling thread; episodes that raise are recorded as
// aborts and skipped.
inline BatchReport run_batch(const std::vector<SeedEpisode>& seeds, const Participants& parts, const EngineConfig& cfg,
                             int parallelism, const EpisodeSink& sink, const ProgressFn& progress = {}) {
  if (parallelism < 1) throw Error(ErrorCode::invalid_input, "parallelism must be >= 1");
  check_config(cfg);
  parts.check(cfg.skill_roster);

  using Slot = std::optional<std::variant<Episode, std::string>>;
  std::vector<Slot> slots(seeds.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> cancel{false};

  auto work = [&] {
    for (;;) {
      if (cancel.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      std::variant<Episode, std::string> result;
      try {
        result = run_episode(seeds[i], parts, cfg, episode_id_for(i));
      } catch (const std::exception& e) {
        result = std::string(e.what());
      }
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(result);
      }
      ready.notify_all();
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), std::max<std::size_t>(seeds.size(), 1));
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(work);
  auto join_all = [&] {
    for (auto& t : workers) {
      if (t.joinable()) t.join();
    }
  };

  BatchReport report;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    Slot slot;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[i].has_value(); });
      slot = std::move(slots[i]);
      slots[i].reset();
    }
    if (auto* ep = std::get_if<Episode>(&*slot)) {
      try {
        sink(*ep);
      } catch (const Error& e) {
        cancel = true;
        join_all();
        throw BatchFailure(e, report);
      } catch (const std::exception& e) {
        cancel = true;
        join_all();
        throw BatchFailure(Error(ErrorCode::io, e.what()), report);
      }
      ++report.written;
      for (const auto& t : ep->turns) report.refusal_total += t.refusals.size();
    } else {
      ++report.aborted;
      report.aborts.push_back({i, std::get<std::string>(*slot)});
    }
    if (progress) progress(report.written, report.aborted);
  }
  join_all();
  return report;
}

}  // namespace skillblend
