#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

using namespace skillblend;

namespace {

const SkillRoster kRoster;

std::string expect_error(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no error";
  return {};
}

std::vector<Episode> generated(std::size_t n) {
  auto corpus = sbtest::load_corpus();
  EngineConfig cfg;
  auto seeds = plan_seeds(corpus.pairs, corpus.index, corpus.docs, cfg, RoleTemplate::standard(kRoster), n);
  std::vector<Episode> eps;
  run_batch(seeds, sbtest::scripted_participants(), cfg, 2, [&](const Episode& ep) { eps.push_back(ep); });
  return eps;
}

const char* kGood =
    R"({"skill":"P","episode_id":"a","contexts":[["I like tea."],[]],"turns":[{"speaker":0,"text":"hi"},{"speaker":1,"text":"hello"}]})";

}  // namespace

TEST(ReadDataset, SampleFiles) {
  for (const auto& path : sbtest::dataset_paths()) EXPECT_EQ(read_dataset(path, kRoster).size(), 6u) << path;
}

TEST(ReadDataset, ThreeLinesAndEmptyFile) {
  sbtest::TempDir dir("ds");
  sbtest::spit(dir.file("three.jsonl"), std::string(kGood) + "\n" + kGood + "\n\n" + kGood + "\n");
  EXPECT_EQ(read_dataset(dir.file("three.jsonl"), kRoster).size(), 3u);
  sbtest::spit(dir.file("empty.jsonl"), "");
  EXPECT_TRUE(read_dataset(dir.file("empty.jsonl"), kRoster).empty());
  expect_error([&] { read_dataset(dir.file("absent.jsonl"), kRoster); }, ErrorCode::io);
}

TEST(ReadDataset, ErrorsNameTheLine) {
  sbtest::TempDir dir("ds_bad");
  const std::string nonalt =
      R"({"skill":"P","episode_id":"b","contexts":[[],[]],"turns":[{"speaker":0,"text":"hi"},{"speaker":0,"text":"again"}]})";
  sbtest::spit(dir.file("a.jsonl"), std::string(kGood) + "\n" + nonalt + "\n");
  auto msg = expect_error([&] { read_dataset(dir.file("a.jsonl"), kRoster); }, ErrorCode::parse);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("turns[1].speaker"), std::string::npos) << msg;

  sbtest::spit(dir.file("b.jsonl"), std::string(kGood) + "\n{not json\n");
  msg = expect_error([&] { read_dataset(dir.file("b.jsonl"), kRoster); }, ErrorCode::parse);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;

  std::string wrong = kGood;
  wrong.replace(wrong.find("\"P\""), 3, "\"Z\"");
  sbtest::spit(dir.file("c.jsonl"), wrong + "\n");
  msg = expect_error([&] { read_dataset(dir.file("c.jsonl"), kRoster); }, ErrorCode::roster);
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;

  std::string blank = kGood;
  blank.replace(blank.find("\"hi\""), 4, "\"  \"");
  expect_error([&] { parse_record(blank, kRoster); }, ErrorCode::parse);
}

TEST(ExtractPairs, SlidingWindow) {
  auto four = parse_record(
      R"({"skill":"K","episode_id":"x","contexts":[[],[]],"turns":[{"speaker":1,"text":"a"},{"speaker":0,"text":"b"},{"speaker":1,"text":"c"},{"speaker":0,"text":"d"}]})",
      kRoster);
  auto two = parse_record(kGood, kRoster);
  auto pairs = extract_pairs({four, two});
  ASSERT_EQ(pairs.size(), 4u);
  EXPECT_EQ(pairs[0].pair[0].text, "a");
  EXPECT_EQ(pairs[0].pair[0].speaker, 1);
  EXPECT_EQ(pairs[2].pair[1].text, "d");
  EXPECT_EQ(pairs[2].pair[1].turn, 1);
  EXPECT_EQ(pairs[3].skill.id, "P");
}

TEST(ExtractPairs, MixedSkillRecount) {
  auto corpus = sbtest::load_corpus();
  std::map<std::string, std::size_t> expected, got;
  for (const auto& r : corpus.records) expected[r.skill.id] += r.turns.size() - 1;
  for (const auto& p : corpus.pairs) got[p.skill.id]++;
  EXPECT_EQ(got, expected);
}

TEST(ContextDocs, RolesAndDedup) {
  auto rec = parse_record(kGood, kRoster);
  auto docs = context_docs({rec, rec});
  ASSERT_EQ(docs.size(), 1u);  // side 1 empty, duplicate skipped
  EXPECT_EQ(docs[0].role, SideRole::primary_role);
  EXPECT_EQ(docs[0].doc_id, 0);
  EXPECT_EQ(docs[0].text, "I like tea.");
}

TEST(Episodes, RoundTripFifty) {
  sbtest::TempDir dir("eps");
  auto eps = generated(50);
  ASSERT_EQ(eps.size(), 50u);
  write_episodes(dir.file("e.jsonl"), eps, kRoster);
  auto back = read_episodes(dir.file("e.jsonl"), kRoster);
  ASSERT_EQ(back.size(), eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(back[i], eps[i]);
    for (std::size_t t = 0; t < eps[i].turns.size(); ++t) {
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(back[i].turns[t].distribution.probs[k], eps[i].turns[t].distribution.probs[k], 1e-12);
      }
    }
  }
  // Canonical bytes: rewriting gives the same file.
  write_episodes(dir.file("f.jsonl"), back, kRoster);
  EXPECT_EQ(sbtest::slurp(dir.file("e.jsonl")), sbtest::slurp(dir.file("f.jsonl")));
}

TEST(Episodes, KeyOrder) {
  auto ep = generated(1).front();
  auto line = serialize_episode(ep, kRoster);
  std::vector<std::string> keys = {"\"id\"", "\"seed_dataset\"", "\"seed_pair\"", "\"config_digest\"", "\"contexts\"", "\"turns\""};
  std::size_t pos = 0;
  for (const auto& k : keys) {
    auto at = line.find(k, pos);
    ASSERT_NE(at, std::string::npos) << k;
    pos = at;
  }
  std::vector<std::string> turn_keys = {"\"speaker\"", "\"text\"", "\"skill\"", "\"dist\"", "\"mic_passed\"",
                                        "\"phase2_attempts\"", "\"refusals\"", "\"origin\""};
  pos = line.find("\"turns\"");
  for (const auto& k : turn_keys) {
    auto at = line.find(k, pos);
    ASSERT_NE(at, std::string::npos) << k;
    pos = at;
  }
  EXPECT_EQ(nlohmann::ordered_json::parse(line).dump(), line);
}

TEST(Episodes, MissingTurnSkillNamesPath) {
  sbtest::TempDir dir("eps_bad");
  auto eps = generated(2);
  auto line = serialize_episode(eps[1], kRoster);
  auto j = nlohmann::ordered_json::parse(line);
  j["turns"][3].erase("skill");
  sbtest::spit(dir.file("e.jsonl"), serialize_episode(eps[0], kRoster) + "\n" + j.dump() + "\n");
  auto msg = expect_error([&] { read_episodes(dir.file("e.jsonl"), kRoster); }, ErrorCode::parse);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("turns[3].skill"), std::string::npos) << msg;
}
