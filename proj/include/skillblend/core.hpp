#pragma once

// Domain types shared across the engine: skills, contexts, dialogue turns,
// candidates, annotated episodes and the engine configuration.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillblend/error.hpp"

namespace skillblend {

struct SkillId {
  std::string id;
  std::size_t index = 0;

  friend bool operator==(const SkillId&, const SkillId&) = default;
};

// Ordered list of distinct skill ids. Position in the roster is the skill's
// index everywhere a vector is laid out per skill.
class SkillRoster {
 public:
  SkillRoster() : SkillRoster(std::vector<std::string>{"P", "K", "E"}) {}

  explicit SkillRoster(std::vector<std::string> ids) : ids_(std::move(ids)) {
    if (ids_.size() < 2) {
      throw Error(ErrorCode::roster, "skill roster needs at least 2 skills");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const auto& id = ids_[i];
      if (id.empty() || std::any_of(id.begin(), id.end(), [](unsigned char c) {
            return std::isspace(c) || c == ',';
          })) {
        throw Error(ErrorCode::roster, "invalid skill id '" + id + "'");
      }
      if (std::find(ids_.begin(), ids_.begin() + static_cast<std::ptrdiff_t>(i), id) !=
          ids_.begin() + static_cast<std::ptrdiff_t>(i)) {
        throw Error(ErrorCode::roster, "duplicate skill id '" + id + "'");
      }
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  SkillId at(std::size_t index) const {
    if (index >= ids_.size()) {
      throw Error(ErrorCode::roster, "skill index " + std::to_string(index) + " out of range");
    }
    return SkillId{ids_[index], index};
  }

  std::optional<SkillId> find(std::string_view id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] == id) return SkillId{ids_[i], i};
    }
    return std::nullopt;
  }

  SkillId require(std::string_view id) const {
    if (auto s = find(id)) return *s;
    throw Error(ErrorCode::roster, "unknown skill id '" + std::string(id) + "'");
  }

  bool contains(const SkillId& s) const {
    return s.index < ids_.size() && ids_[s.index] == s.id;
  }

  std::vector<SkillId> skills() const {
    std::vector<SkillId> out;
    for (std::size_t i = 0; i < ids_.size(); ++i) out.push_back({ids_[i], i});
    return out;
  }

  friend bool operator==(const SkillRoster&, const SkillRoster&) = default;

 private:
  std::vector<std::string> ids_;
};

struct SkillContext {
  SkillId skill;
  std::vector<std::string> lines;

  friend bool operator==(const SkillContext&, const SkillContext&) = default;
};

// At most one context per skill, iterated in roster order.
class SkillContextSet {
 public:
  void set(SkillContext ctx) {
    auto index = ctx.skill.index;
    per_skill_.insert_or_assign(index, std::move(ctx));
  }

  const SkillContext* find(const SkillId& skill) const {
    auto it = per_skill_.find(skill.index);
    return it == per_skill_.end() ? nullptr : &it->second;
  }

  // Context for `skill`, or an empty one when this side has none.
  SkillContext get_or_empty(const SkillId& skill) const {
    if (const auto* ctx = find(skill)) return *ctx;
    return SkillContext{skill, {}};
  }

  bool empty() const { return per_skill_.empty(); }
  std::size_t size() const { return per_skill_.size(); }

  auto begin() const { return per_skill_.begin(); }
  auto end() const { return per_skill_.end(); }

  friend bool operator==(const SkillContextSet&, const SkillContextSet&) = default;

 private:
  std::map<std::size_t, SkillContext> per_skill_;
};

struct Utterance {
  int speaker = 0;  // side index, 0 or 1
  int turn = 0;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct DialogueContext {
  std::vector<Utterance> turns;

  bool empty() const { return turns.empty(); }
  std::size_t size() const { return turns.size(); }
  const Utterance& last() const {
    if (turns.empty()) throw Error(ErrorCode::invalid_input, "dialogue context is empty");
    return turns.back();
  }

  friend bool operator==(const DialogueContext&, const DialogueContext&) = default;
};

struct ResponseCandidate {
  std::string text;
  SkillId origin;
  double gen_score = 0.0;
  int attempts = 1;

  friend bool operator==(const ResponseCandidate&, const ResponseCandidate&) = default;
};

struct SkillDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }

  bool is_valid(double tolerance = 1e-6) const {
    if (probs.empty()) return false;
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0) || p > 1.0 + tolerance) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tolerance;
  }

  friend bool operator==(const SkillDistribution&, const SkillDistribution&) = default;
};

// One Phase-2 refusal: a candidate from `candidate_skill` contradicted a
// context line owned by `context_skill`.
struct Refusal {
  SkillId candidate_skill;
  SkillId context_skill;

  friend bool operator==(const Refusal&, const Refusal&) = default;
};

struct AnnotatedTurn {
  Utterance utterance;
  SkillId skill_label;
  SkillDistribution distribution;
  bool mic_passed = false;
  int phase2_attempts = 0;
  std::vector<Refusal> refusals;
  // Skill of the agent that produced the turn (the seed skill for seed turns).
  SkillId origin;

  friend bool operator==(const AnnotatedTurn&, const AnnotatedTurn&) = default;
};

struct Episode {
  std::string id;
  SkillId seed_dataset;
  std::array<Utterance, 2> seed_pair;
  std::array<SkillContextSet, 2> contexts;
  std::vector<AnnotatedTurn> turns;
  std::string config_digest;

  friend bool operator==(const Episode&, const Episode&) = default;
};

struct EngineConfig {
  double alpha = 1.0;
  int episode_length = 10;
  int max_attempts = 8;
  double epsilon = 1e-9;
  std::uint64_t rng_seed = 0;
  int seeds_per_pair = 5;
  SkillRoster skill_roster;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

inline void check_config(const EngineConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::config, what); };
  if (!(cfg.alpha > 0.0)) fail("alpha must be > 0");
  if (cfg.episode_length < 4) fail("episode_length must be >= 4");
  if (cfg.max_attempts < 1) fail("max_attempts must be >= 1");
  if (!(cfg.epsilon > 0.0)) fail("epsilon must be > 0");
  if (cfg.seeds_per_pair < 1) fail("seeds_per_pair must be >= 1");
}

// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

// Canonical text of a configuration: fixed key order, no whitespace.
inline std::string canonical_config(const EngineConfig& cfg) {
  std::string out = "{\"alpha\":" + format_double(cfg.alpha) +
                    ",\"episode_length\":" + std::to_string(cfg.episode_length) +
                    ",\"max_attempts\":" + std::to_string(cfg.max_attempts) +
                    ",\"epsilon\":" + format_double(cfg.epsilon) +
                    ",\"rng_seed\":" + std::to_string(cfg.rng_seed) +
                    ",\"seeds_per_pair\":" + std::to_string(cfg.seeds_per_pair) +
                    ",\"skill_roster\":[";
  const auto& ids = cfg.skill_roster.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += '"' + ids[i] + '"';
  }
  out += "]}";
  return out;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline std::string config_digest(const EngineConfig& cfg) {
  return hex64(fnv1a64(canonical_config(cfg)));
}

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace skillblend
