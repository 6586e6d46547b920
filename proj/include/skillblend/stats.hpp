#pragma once

// Corpus diagnostics over generated episodes: skill shares, skills per
// dialogue, Phase-2 contradiction breakdown, KL / entropy histograms and
// seed-skill continuity. Computed in one streaming pass.

#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillblend/classifiers.hpp"
#include "skillblend/core.hpp"
#include "skillblend/distmath.hpp"

namespace skillblend {

struct StatsOptions {
  std::vector<double> kld_edges;
  std::vector<double> entropy_edges;
  int continuity_window = 1;
  double epsilon = 1e-9;

  // KLD: 20 bins over [0, 5]; entropy: 20 bins over [0, ln M].
  static StatsOptions defaults(std::size_t roster_size) {
    StatsOptions o;
    o.kld_edges = linear_edges(0.0, 5.0, 20);
    o.entropy_edges = linear_edges(0.0, std::log(static_cast<double>(roster_size)), 20);
    return o;
  }
};

struct ContradictionMatrix {
  // counts[candidate_skill][context_skill]
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
      for (auto c : row) n += c;
    return n;
  }

  // Share of refusals where the conflicting context belongs to another skill.
  double cross_type_share() const {
    const auto all = total();
    if (all == 0) return 0.0;
    std::size_t diag = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) diag += counts[i][i];
    return static_cast<double>(all - diag) / static_cast<double>(all);
  }

  friend bool operator==(const ContradictionMatrix&, const ContradictionMatrix&) = default;
};

struct Continuity {
  std::vector<double> fraction;         // per seed skill
  std::vector<std::size_t> episodes;    // episodes seeded with that skill

  friend bool operator==(const Continuity&, const Continuity&) = default;
};

struct StatsReport {
  std::size_t episodes = 0;
  std::size_t turns = 0;
  std::vector<std::size_t> label_counts;
  std::vector<double> skill_percentages;
  std::vector<std::size_t> skills_per_dialogue;  // [k-1] = episodes with k distinct labels
  ContradictionMatrix contradictions;
  Histogram kld;
  Histogram entropy;
  Continuity continuity;

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

// Optional `scorer` recomputes distributions from the turn texts instead of
// using the stored ones.
class StatsAccumulator {
 public:
  StatsAccumulator(SkillRoster roster, StatsOptions options, const SkillScorer* scorer = nullptr)
      : roster_(std::move(roster)), options_(std::move(options)), scorer_(scorer) {
    const auto m = roster_.size();
    label_counts_.assign(m, 0);
    per_dialogue_.assign(m, 0);
    contradictions_.assign(m, std::vector<std::size_t>(m, 0));
    continuity_hits_.assign(m, 0);
    continuity_turns_.assign(m, 0);
    continuity_episodes_.assign(m, 0);
  }

  void add(const Episode& ep) {
    ++episodes_;
    std::vector<bool> seen(roster_.size(), false);
    std::optional<SkillDistribution> prev;
    for (std::size_t i = 0; i < ep.turns.size(); ++i) {
      const auto& t = ep.turns[i];
      ++turns_;
      ++label_counts_.at(t.skill_label.index);
      seen[t.skill_label.index] = true;
      for (const auto& r : t.refusals) ++contradictions_.at(r.candidate_skill.index).at(r.context_skill.index);

      auto dist = scorer_ ? scorer_->score(t.utterance.text) : t.distribution;
      entropy_values_.push_back(entropy(dist));
      if (prev) kld_values_.push_back(kl_divergence(*prev, dist, options_.epsilon));
      prev = std::move(dist);
    }
    std::size_t distinct = 0;
    for (bool s : seen) distinct += s ? 1 : 0;
    if (distinct > 0) ++per_dialogue_[distinct - 1];

    const auto seed = ep.seed_dataset.index;
    ++continuity_episodes_.at(seed);
    const auto window = static_cast<std::size_t>(std::max(1, options_.continuity_window));
    for (std::size_t i = 2; i < ep.turns.size() && i < 2 + window; ++i) {
      ++continuity_turns_[seed];
      if (ep.turns[i].skill_label.index == seed) ++continuity_hits_[seed];
    }
  }

  StatsReport report() const {
    StatsReport r;
    r.episodes = episodes_;
    r.turns = turns_;
    r.label_counts = label_counts_;
    r.skill_percentages.assign(roster_.size(), 0.0);
    if (turns_ > 0) {
      for (std::size_t s = 0; s < roster_.size(); ++s) {
        r.skill_percentages[s] = 100.0 * static_cast<double>(label_counts_[s]) / static_cast<double>(turns_);
      }
    }
    r.skills_per_dialogue = per_dialogue_;
    r.contradictions.counts = contradictions_;
    r.kld = histogram(kld_values_, options_.kld_edges);
    r.entropy = histogram(entropy_values_, options_.entropy_edges);
    r.continuity.episodes = continuity_episodes_;
    r.continuity.fraction.assign(roster_.size(), 0.0);
    for (std::size_t s = 0; s < roster_.size(); ++s) {
      if (continuity_turns_[s] > 0) {
        r.continuity.fraction[s] = static_cast<double>(continuity_hits_[s]) / static_cast<double>(continuity_turns_[s]);
      }
    }
    return r;
  }

 private:
  SkillRoster roster_;
  StatsOptions options_;
  const SkillScorer* scorer_;
  std::size_t episodes_ = 0;
  std::size_t turns_ = 0;
  std::vector<std::size_t> label_counts_;
  std::vector<std::size_t> per_dialogue_;
  std::vector<std::vector<std::size_t>> contradictions_;
  std::vector<double> kld_values_;
  std::vector<double> entropy_values_;
  std::vector<std::size_t> continuity_hits_;
  std::vector<std::size_t> continuity_turns_;
  std::vector<std::size_t> continuity_episodes_;
};

inline StatsReport compute_stats(std::span<const Episode> episodes, const SkillRoster& roster, const StatsOptions& options,
                                 const SkillScorer* scorer = nullptr) {
  StatsAccumulator acc(roster, options, scorer);
  for (const auto& ep : episodes) acc.add(ep);
  return acc.report();
}

inline std::vector<double> skill_percentages(std::span<const Episode> episodes, const SkillRoster& roster) {
  return compute_stats(episodes, roster, StatsOptions::defaults(roster.size())).skill_percentages;
}

inline std::vector<std::size_t> skills_per_dialogue(std::span<const Episode> episodes, const SkillRoster& roster) {
  return compute_stats(episodes, roster, StatsOptions::defaults(roster.size())).skills_per_dialogue;
}

inline ContradictionMatrix contradiction_breakdown(std::span<const Episode> episodes, const SkillRoster& roster) {
  return compute_stats(episodes, roster, StatsOptions::defaults(roster.size())).contradictions;
}

inline Histogram kld_histogram(std::span<const Episode> episodes, const SkillRoster& roster, std::span<const double> edges,
                               const SkillScorer* scorer = nullptr, double epsilon = 1e-9) {
  auto o = StatsOptions::defaults(roster.size());
  o.kld_edges.assign(edges.begin(), edges.end());
  o.epsilon = epsilon;
  return compute_stats(episodes, roster, o, scorer).kld;
}

inline Histogram entropy_histogram(std::span<const Episode> episodes, const SkillRoster& roster,
                                   std::span<const double> edges, const SkillScorer* scorer = nullptr) {
  auto o = StatsOptions::defaults(roster.size());
  o.entropy_edges.assign(edges.begin(), edges.end());
  return compute_stats(episodes, roster, o, scorer).entropy;
}

inline Continuity continuity_after_seed(std::span<const Episode> episodes, const SkillRoster& roster, int window = 1) {
  auto o = StatsOptions::defaults(roster.size());
  o.continuity_window = window;
  return compute_stats(episodes, roster, o).continuity;
}

namespace detail {
inline nlohmann::ordered_json histogram_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["edges"] = h.bin_edges;
  j["counts"] = h.counts;
  j["out_of_range"] = h.out_of_range;
  return j;
}
}  // namespace detail

inline nlohmann::ordered_json stats_to_json(const StatsReport& r, const SkillRoster& roster) {
  nlohmann::ordered_json j;
  j["roster"] = roster.ids();
  j["episodes"] = r.episodes;
  j["turns"] = r.turns;
  j["label_counts"] = r.label_counts;
  j["skill_percentages"] = r.skill_percentages;
  j["skills_per_dialogue"] = r.skills_per_dialogue;
  j["contradictions"] = r.contradictions.counts;
  j["contradiction_total"] = r.contradictions.total();
  j["cross_type_share"] = r.contradictions.cross_type_share();
  j["kld"] = detail::histogram_json(r.kld);
  j["entropy"] = detail::histogram_json(r.entropy);
  nlohmann::ordered_json cont;
  cont["fraction"] = r.continuity.fraction;
  cont["episodes"] = r.continuity.episodes;
  j["continuity"] = cont;
  return j;
}

inline std::string stats_summary(const StatsReport& r, const SkillRoster& roster) {
  std::ostringstream out;
  const auto& ids = roster.ids();
  out << "episodes: " << r.episodes << "  turns: " << r.turns << '\n';
  out << "skill shares:";
  for (std::size_t s = 0; s < ids.size(); ++s) out << ' ' << ids[s] << '=' << r.skill_percentages[s] << '%';
  out << '\n' << "distinct skills per dialogue:";
  for (std::size_t k = 0; k < r.skills_per_dialogue.size(); ++k) out << ' ' << (k + 1) << ':' << r.skills_per_dialogue[k];
  out << '\n' << "phase-2 refusals: " << r.contradictions.total()
      << "  cross-type share: " << r.contradictions.cross_type_share() << '\n';
  out << "continuity after seed:";
  for (std::size_t s = 0; s < ids.size(); ++s) {
    out << ' ' << ids[s] << '=' << r.continuity.fraction[s] << " (n=" << r.continuity.episodes[s] << ')';
  }
  out << '\n';
  return out.str();
}

namespace detail {
inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Error(ErrorCode::io, "cannot write " + path);
}

inline std::string histogram_csv(const Histogram& h) {
  std::string csv = "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    csv += format_double(h.bin_edges[i]) + "," + format_double(h.bin_edges[i + 1]) + "," + std::to_string(h.counts[i]) + "\n";
  }
  return csv;
}
}  // namespace detail

// Writes <prefix>.json, <prefix>.txt and one CSV per figure table.
inline std::vector<std::string> write_stats_report(const StatsReport& r, const SkillRoster& roster, const std::string& prefix) {
  const auto& ids = roster.ids();
  std::vector<std::string> written;
  auto emit = [&](const std::string& suffix, const std::string& text) {
    detail::write_text(prefix + suffix, text);
    written.push_back(prefix + suffix);
  };
  emit(".json", stats_to_json(r, roster).dump() + "\n");
  emit(".txt", stats_summary(r, roster));

  std::string shares = "skill,count,percent\n";
  for (std::size_t s = 0; s < ids.size(); ++s) {
    shares += ids[s] + "," + std::to_string(r.label_counts[s]) + "," + format_double(r.skill_percentages[s]) + "\n";
  }
  emit(".skill_shares.csv", shares);

  std::string per = "distinct_skills,episodes\n";
  for (std::size_t k = 0; k < r.skills_per_dialogue.size(); ++k) {
    per += std::to_string(k + 1) + "," + std::to_string(r.skills_per_dialogue[k]) + "\n";
  }
  emit(".skills_per_dialogue.csv", per);

  std::string contra = "candidate_skill,context_skill,count\n";
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = 0; b < ids.size(); ++b) {
      contra += ids[a] + "," + ids[b] + "," + std::to_string(r.contradictions.counts[a][b]) + "\n";
    }
  }
  emit(".contradictions.csv", contra);
  emit(".kld_hist.csv", detail::histogram_csv(r.kld));
  emit(".entropy_hist.csv", detail::histogram_csv(r.entropy));

  std::string cont = "seed_skill,episodes,fraction\n";
  for (std::size_t s = 0; s < ids.size(); ++s) {
    cont += ids[s] + "," + std::to_string(r.continuity.episodes[s]) + "," + format_double(r.continuity.fraction[s]) + "\n";
  }
  emit(".continuity.csv", cont);
  return written;
}

}  // namespace skillblend
