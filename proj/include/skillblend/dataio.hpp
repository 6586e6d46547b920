#pragma once

// File formats.
//
// Single-skill dataset (JSONL, one dialogue per line):
//   {"skill": "P", "episode_id": "...", "contexts": [[side-0 lines], [side-1 lines]],
//    "turns": [{"speaker": 0, "text": "..."}, ...]}
//
// Generated episodes (JSONL, canonical: fixed key order, no whitespace):
//   {"id", "seed_dataset", "seed_pair": [{"speaker","text"} x2], "config_digest",
//    "contexts": [{"<skill>": [lines]} x2],
//    "turns": [{"speaker","text","skill","dist","mic_passed","phase2_attempts",
//               "refusals": [{"candidate","context"}], "origin"}]}

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillblend/core.hpp"
#include "skillblend/seeds.hpp"

namespace skillblend {

struct RecordTurn {
  int speaker = 0;
  std::string text;

  friend bool operator==(const RecordTurn&, const RecordTurn&) = default;
};

struct SingleSkillRecord {
  SkillId skill;
  std::string episode_id;
  std::array<std::vector<std::string>, 2> side_contexts;
  std::vector<RecordTurn> turns;

  friend bool operator==(const SingleSkillRecord&, const SingleSkillRecord&) = default;
};

namespace detail {

// Path-aware accessors; failures name the line and field, e.g.
// "line 4: turns[2].skill: missing".
class FieldReader {
 public:
  FieldReader(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what, ErrorCode code = ErrorCode::parse) const {
    throw Error(code, source_ + ": line " + std::to_string(line_) + ": " + (path.empty() ? "" : path + ": ") + what);
  }

  const nlohmann::json& field(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(full, "missing");
    return *it;
  }

  std::string string(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_string()) fail(join_path(path, key), "expected a string");
    return v.get<std::string>();
  }

  std::int64_t integer(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_number_integer()) fail(join_path(path, key), "expected an integer");
    return v.get<std::int64_t>();
  }

  bool boolean(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_boolean()) fail(join_path(path, key), "expected a boolean");
    return v.get<bool>();
  }

  const nlohmann::json& array(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_array()) fail(join_path(path, key), "expected an array");
    return v;
  }

  std::vector<std::string> strings(const nlohmann::json& arr, const std::string& path) const {
    if (!arr.is_array()) fail(path, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) fail(path + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }

  SkillId skill(const SkillRoster& roster, const nlohmann::json& obj, const std::string& path, const char* key) const {
    auto id = string(obj, path, key);
    auto s = roster.find(id);
    if (!s) fail(join_path(path, key), "unknown skill '" + id + "'", ErrorCode::roster);
    return *s;
  }

  static std::string join_path(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

 private:
  std::string source_;
  std::size_t line_;
};

inline nlohmann::json parse_line(const std::string& text, const FieldReader& r) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    r.fail("", std::string("malformed JSON (") + e.what() + ")");
  }
}

// Calls fn(line_number, line) for every non-blank line.
inline void for_each_line(const std::string& path, const std::function<void(std::size_t, const std::string&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    fn(n, line);
  }
}

}  // namespace detail

inline SingleSkillRecord parse_record(const std::string& line_text, const SkillRoster& roster,
                                      const std::string& source = "<input>", std::size_t line = 1) {
  detail::FieldReader r(source, line);
  auto j = detail::parse_line(line_text, r);
  if (!j.is_object()) r.fail("", "expected an object");
  SingleSkillRecord rec;
  rec.skill = r.skill(roster, j, "", "skill");
  rec.episode_id = r.string(j, "", "episode_id");
  const auto& ctx = r.array(j, "", "contexts");
  if (ctx.size() != 2) r.fail("contexts", "expected 2 side context lists");
  for (std::size_t s = 0; s < 2; ++s) {
    const auto path = "contexts[" + std::to_string(s) + "]";
    rec.side_contexts[s] = r.strings(ctx[s], path);
    for (const auto& l : rec.side_contexts[s]) {
      if (is_blank(l)) r.fail(path, "blank context line");
    }
  }
  const auto& turns = r.array(j, "", "turns");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto path = "turns[" + std::to_string(i) + "]";
    RecordTurn t{static_cast<int>(r.integer(turns[i], path, "speaker")), r.string(turns[i], path, "text")};
    if (t.speaker != 0 && t.speaker != 1) r.fail(path + ".speaker", "must be 0 or 1");
    if (is_blank(t.text)) r.fail(path + ".text", "blank utterance");
    if (i > 0 && t.speaker == rec.turns.back().speaker) r.fail(path + ".speaker", "speakers do not alternate");
    rec.turns.push_back(std::move(t));
  }
  return rec;
}

inline void for_each_record(const std::string& path, const SkillRoster& roster,
                            const std::function<void(SingleSkillRecord&&)>& fn) {
  detail::for_each_line(path, [&](std::size_t n, const std::string& line) { fn(parse_record(line, roster, path, n)); });
}

inline std::vector<SingleSkillRecord> read_dataset(const std::string& path, const SkillRoster& roster) {
  std::vector<SingleSkillRecord> out;
  for_each_record(path, roster, [&out](SingleSkillRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

// Every consecutive utterance pair of every record. Turn indices restart at 0.
inline std::vector<SeedPair> extract_pairs(const std::vector<SingleSkillRecord>& records) {
  std::vector<SeedPair> out;
  for (const auto& rec : records) {
    for (std::size_t i = 0; i + 1 < rec.turns.size(); ++i) {
      out.push_back(SeedPair{{Utterance{rec.turns[i].speaker, 0, rec.turns[i].text},
                              Utterance{rec.turns[i + 1].speaker, 1, rec.turns[i + 1].text}},
                             rec.skill});
    }
  }
  return out;
}

// Context corpus: side 0 contexts become primary-role documents, side 1
// contexts counterpart-role documents. Empty and duplicate (skill, role,
// lines) contexts are skipped. doc_id equals position.
inline std::vector<ContextDoc> context_docs(const std::vector<SingleSkillRecord>& records) {
  std::vector<ContextDoc> out;
  std::set<std::tuple<std::size_t, int, std::vector<std::string>>> seen;
  for (const auto& rec : records) {
    for (int side = 0; side < 2; ++side) {
      const auto& lines = rec.side_contexts[static_cast<std::size_t>(side)];
      if (lines.empty()) continue;
      if (!seen.emplace(rec.skill.index, side, lines).second) continue;
      out.push_back(ContextDoc::make(static_cast<int>(out.size()), rec.skill,
                                     side == 0 ? SideRole::primary_role : SideRole::counterpart_role, lines));
    }
  }
  return out;
}

inline nlohmann::ordered_json episode_to_json(const Episode& ep, const SkillRoster& roster) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["id"] = ep.id;
  j["seed_dataset"] = ep.seed_dataset.id;
  auto pair = oj::array();
  for (const auto& u : ep.seed_pair) {
    oj t;
    t["speaker"] = u.speaker;
    t["text"] = u.text;
    pair.push_back(std::move(t));
  }
  j["seed_pair"] = std::move(pair);
  j["config_digest"] = ep.config_digest;
  auto contexts = oj::array();
  for (const auto& side : ep.contexts) {
    oj obj = oj::object();
    for (const auto& skill : roster.skills()) {
      if (const auto* ctx = side.find(skill)) obj[skill.id] = ctx->lines;
    }
    contexts.push_back(std::move(obj));
  }
  j["contexts"] = std::move(contexts);
  auto turns = oj::array();
  for (const auto& t : ep.turns) {
    oj o;
    o["speaker"] = t.utterance.speaker;
    o["text"] = t.utterance.text;
    o["skill"] = t.skill_label.id;
    o["dist"] = t.distribution.probs;
    o["mic_passed"] = t.mic_passed;
    o["phase2_attempts"] = t.phase2_attempts;
    auto refusals = oj::array();
    for (const auto& r : t.refusals) {
      oj ro;
      ro["candidate"] = r.candidate_skill.id;
      ro["context"] = r.context_skill.id;
      refusals.push_back(std::move(ro));
    }
    o["refusals"] = std::move(refusals);
    o["origin"] = t.origin.id;
    turns.push_back(std::move(o));
  }
  j["turns"] = std::move(turns);
  return j;
}

inline std::string serialize_episode(const Episode& ep, const SkillRoster& roster) {
  return episode_to_json(ep, roster).dump();
}

inline Episode parse_episode(const std::string& line_text, const SkillRoster& roster,
                             const std::string& source = "<input>", std::size_t line = 1) {
  detail::FieldReader r(source, line);
  auto j = detail::parse_line(line_text, r);
  if (!j.is_object()) r.fail("", "expected an object");
  Episode ep;
  ep.id = r.string(j, "", "id");
  ep.seed_dataset = r.skill(roster, j, "", "seed_dataset");
  const auto& pair = r.array(j, "", "seed_pair");
  if (pair.size() != 2) r.fail("seed_pair", "expected 2 utterances");
  for (std::size_t i = 0; i < 2; ++i) {
    const auto path = "seed_pair[" + std::to_string(i) + "]";
    ep.seed_pair[i] = Utterance{static_cast<int>(r.integer(pair[i], path, "speaker")), static_cast<int>(i),
                                r.string(pair[i], path, "text")};
  }
  ep.config_digest = r.string(j, "", "config_digest");
  const auto& contexts = r.array(j, "", "contexts");
  if (contexts.size() != 2) r.fail("contexts", "expected 2 sides");
  for (std::size_t s = 0; s < 2; ++s) {
    const auto path = "contexts[" + std::to_string(s) + "]";
    if (!contexts[s].is_object()) r.fail(path, "expected an object");
    for (const auto& [id, lines] : contexts[s].items()) {
      auto skill = roster.find(id);
      if (!skill) r.fail(path + "." + id, "unknown skill", ErrorCode::roster);
      ep.contexts[s].set(SkillContext{*skill, r.strings(lines, path + "." + id)});
    }
  }
  const auto& turns = r.array(j, "", "turns");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto path = "turns[" + std::to_string(i) + "]";
    const auto& o = turns[i];
    AnnotatedTurn t;
    t.utterance = Utterance{static_cast<int>(r.integer(o, path, "speaker")), static_cast<int>(i), r.string(o, path, "text")};
    t.skill_label = r.skill(roster, o, path, "skill");
    const auto& dist = r.array(o, path, "dist");
    for (std::size_t k = 0; k < dist.size(); ++k) {
      if (!dist[k].is_number()) r.fail(path + ".dist[" + std::to_string(k) + "]", "expected a number");
      t.distribution.probs.push_back(dist[k].get<double>());
    }
    t.mic_passed = r.boolean(o, path, "mic_passed");
    t.phase2_attempts = static_cast<int>(r.integer(o, path, "phase2_attempts"));
    const auto& refusals = r.array(o, path, "refusals");
    for (std::size_t k = 0; k < refusals.size(); ++k) {
      const auto rp = path + ".refusals[" + std::to_string(k) + "]";
      t.refusals.push_back({r.skill(roster, refusals[k], rp, "candidate"), r.skill(roster, refusals[k], rp, "context")});
    }
    t.origin = r.skill(roster, o, path, "origin");
    ep.turns.push_back(std::move(t));
  }
  return ep;
}

// Streams episodes to a file, one canonical line each.
class EpisodeWriter {
 public:
  EpisodeWriter(const std::string& path, SkillRoster roster)
      : path_(path), roster_(std::move(roster)), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::io, "cannot write " + path);
  }

  void write(const Episode& ep) {
    out_ << serialize_episode(ep, roster_) << '\n';
    if (!out_) throw Error(ErrorCode::io, "write failed on " + path_);
  }

  void close() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::io, "flush failed on " + path_);
    out_.close();
  }

 private:
  std::string path_;
  SkillRoster roster_;
  std::ofstream out_;
};

inline void write_episodes(const std::string& path, const std::vector<Episode>& episodes, const SkillRoster& roster) {
  EpisodeWriter w(path, roster);
  for (const auto& ep : episodes) w.write(ep);
  w.close();
}

inline std::vector<Episode> read_episodes(const std::string& path, const SkillRoster& roster) {
  std::vector<Episode> out;
  detail::for_each_line(path, [&](std::size_t n, const std::string& line) { out.push_back(parse_episode(line, roster, path, n)); });
  return out;
}

}  // namespace skillblend
