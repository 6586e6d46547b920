#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "skillblend/skillblend.hpp"

namespace sbtest {

namespace fs = std::filesystem;
using namespace skillblend;

inline std::string data_dir() { return SKILLBLEND_DATA_DIR; }
inline std::string golden_dir() { return SKILLBLEND_GOLDEN_DIR; }

inline std::vector<std::string> dataset_paths() {
  return {data_dir() + "/personality.jsonl", data_dir() + "/knowledge.jsonl", data_dir() + "/empathy.jsonl"};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("skillblend_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline Participants scripted_participants(const SkillRoster& roster = SkillRoster()) {
  Participants p;
  for (auto& spec : default_agent_specs(roster)) p.agents.push_back(std::make_shared<ScriptedAgent>(spec));
  p.judge = std::make_shared<LexicalNliJudge>(default_lexicon(roster));
  p.scorer = std::make_shared<LexicalSkillScorer>(default_lexicon(roster));
  return p;
}

// Sample datasets -> pairs, context corpus and index.
struct Corpus {
  std::vector<SingleSkillRecord> records;
  std::vector<SeedPair> pairs;
  std::vector<ContextDoc> docs;
  TfIdfIndex index;
};

inline Corpus load_corpus(const SkillRoster& roster = SkillRoster()) {
  Corpus c;
  for (const auto& path : dataset_paths()) {
    auto recs = read_dataset(path, roster);
    c.records.insert(c.records.end(), recs.begin(), recs.end());
  }
  c.pairs = extract_pairs(c.records);
  c.docs = context_docs(c.records);
  c.index = build_index(c.docs);
  return c;
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t m, bool allow_zeros = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(m);
  double sum = 0.0;
  for (auto& x : v) {
    x = u(rng);
    if (allow_zeros && u(rng) < 0.15) x = 0.0;
    sum += x;
  }
  if (sum == 0.0) {
    v[0] = 1.0;
    sum = 1.0;
  }
  for (auto& x : v) x /= sum;
  return v;
}

// Judge and scorer driven by explicit tables; anything not listed is Neutral
// / uniform.
class TableJudge final : public NliJudge {
 public:
  std::map<std::pair<std::string, std::string>, NliLabel> table;
  NliVerdict judge(std::string_view premise, std::string_view hypothesis) const override {
    auto it = table.find({std::string(premise), std::string(hypothesis)});
    if (it == table.end()) return {NliLabel::neutral, 0.5};
    return {it->second, 1.0};
  }
};

class TableScorer final : public SkillScorer {
 public:
  explicit TableScorer(SkillRoster roster = SkillRoster()) : roster_(std::move(roster)) {}
  std::map<std::string, std::vector<double>> table;
  SkillDistribution score(std::string_view text) const override {
    auto it = table.find(std::string(text));
    if (it != table.end()) return SkillDistribution{it->second};
    return SkillDistribution{std::vector<double>(roster_.size(), 1.0 / static_cast<double>(roster_.size()))};
  }
  const SkillRoster& roster() const override { return roster_; }

 private:
  SkillRoster roster_;
};

// Agent that emits fixed texts per attempt and fixed ranker scores per text.
class TableAgent final : public SkillAgent {
 public:
  TableAgent(SkillId skill, std::vector<std::string> texts) : skill_(std::move(skill)), texts_(std::move(texts)) {}
  std::map<std::string, double> rank_scores;
  mutable int generate_calls = 0;

  const SkillId& skill() const override { return skill_; }
  ResponseCandidate generate(const SkillContext&, const DialogueContext&, int attempt) const override {
    ++generate_calls;
    const auto& t = texts_[static_cast<std::size_t>(attempt - 1) % texts_.size()];
    return ResponseCandidate{t, skill_, 0.0, attempt};
  }
  std::vector<double> rank(const SkillContext&, const DialogueContext&,
                           std::span<const ResponseCandidate> candidates) const override {
    std::vector<double> out;
    for (const auto& c : candidates) {
      auto it = rank_scores.find(c.text);
      out.push_back(it == rank_scores.end() ? 0.0 : it->second);
    }
    return out;
  }

 private:
  SkillId skill_;
  std::vector<std::string> texts_;
};

}  // namespace sbtest
