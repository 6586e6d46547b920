#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "skillblend/mock_server.hpp"
#include "support.hpp"

using namespace skillblend;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr goes to a side file.
Run cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd = env_prefix + " '" + std::string(SKILLBLEND_CLI) + "' " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string data_args() {
  std::string s = "--data";
  for (const auto& p : sbtest::dataset_paths()) s += " '" + p + "'";
  return s;
}

std::string conf() { return "--config '" + sbtest::data_dir() + "/example.conf'"; }

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("generate --out x").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST(Cli, GenerateIsDeterministicAndValid) {
  sbtest::TempDir dir("cli_gen");
  const auto a = dir.file("a.jsonl"), b = dir.file("b.jsonl");
  auto r = cli("generate " + conf() + " " + data_args() + " --episodes 20 --quiet --out " + a);
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("written 20, aborted 0"), std::string::npos) << r.out;
  ASSERT_EQ(cli("generate " + conf() + " " + data_args() + " --episodes 20 --parallelism 3 --quiet --out " + b).status, 0);
  EXPECT_EQ(line_count(sbtest::slurp(a)), 20u);
  EXPECT_EQ(sbtest::slurp(a), sbtest::slurp(b));
  EXPECT_FALSE(fs::exists(a + ".tmp"));

  auto v = cli("validate " + conf() + " --in " + a);
  EXPECT_EQ(v.status, 0) << v.out;
  EXPECT_NE(v.out.find("20/20 episodes valid"), std::string::npos);
}

TEST(Cli, SeedPrecedenceFlagOverEnvOverConfig) {
  sbtest::TempDir dir("cli_seed");
  const auto base = dir.file("base.jsonl"), env7 = dir.file("env7.jsonl"), flag = dir.file("flag.jsonl"),
             env99 = dir.file("env99.jsonl");
  const auto common = "generate " + conf() + " " + data_args() + " --episodes 10 --quiet --out ";
  ASSERT_EQ(cli(common + base).status, 0);                               // config rng_seed = 7
  ASSERT_EQ(cli(common + env7, "SKILLBLEND_SEED=7").status, 0);          // env equal to config
  ASSERT_EQ(cli(common + env99, "SKILLBLEND_SEED=99").status, 0);        // env overrides config
  ASSERT_EQ(cli(common + flag + " --seed 7", "SKILLBLEND_SEED=99").status, 0);  // flag overrides env
  EXPECT_EQ(sbtest::slurp(base), sbtest::slurp(env7));
  EXPECT_EQ(sbtest::slurp(base), sbtest::slurp(flag));
  EXPECT_NE(sbtest::slurp(base), sbtest::slurp(env99));
}

TEST(Cli, ConfigErrorsLeaveOutputUntouched) {
  sbtest::TempDir dir("cli_cfg");
  const auto bad = dir.file("bad.conf");
  sbtest::spit(bad, "alpha = 1.0\ncolour = blue\n");
  const auto out = dir.file("out.jsonl");
  EXPECT_EQ(cli("generate --config " + bad + " " + data_args() + " --out " + out).status, 2);
  EXPECT_FALSE(fs::exists(out));

  sbtest::spit(bad, "alpha = -1\n");
  EXPECT_EQ(cli("generate --config " + bad + " " + data_args() + " --out " + out).status, 2);
  EXPECT_EQ(cli("generate " + conf() + " " + data_args() + " --out " + dir.file("missing/out.jsonl")).status, 2);
  EXPECT_EQ(cli("generate " + conf() + " " + data_args() + " --backend remote --out " + out).status, 2);
  EXPECT_FALSE(fs::exists(out));

  sbtest::spit(out, "keep me\n");
  sbtest::spit(bad, "episode_length = 0\n");
  EXPECT_EQ(cli("generate --config " + bad + " " + data_args() + " --out " + out).status, 2);
  EXPECT_EQ(sbtest::slurp(out), "keep me\n");
}

TEST(Cli, ValidateFlagsBrokenEpisodes) {
  sbtest::TempDir dir("cli_val");
  const auto eps = dir.file("e.jsonl");
  ASSERT_EQ(cli("generate " + conf() + " " + data_args() + " --episodes 3 --quiet --out " + eps).status, 0);
  auto text = sbtest::slurp(eps);
  auto first = text.substr(0, text.find('\n'));
  auto j = nlohmann::ordered_json::parse(first);
  j["turns"].erase(j["turns"].size() - 1);
  sbtest::spit(dir.file("short.jsonl"), j.dump() + "\n");
  auto r = cli("validate " + conf() + " --in " + dir.file("short.jsonl"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("length:"), std::string::npos) << r.out;

  sbtest::spit(dir.file("junk.jsonl"), "{not json\n");
  EXPECT_EQ(cli("validate --in " + dir.file("junk.jsonl")).status, 1);

  // Generated under another config: digest mismatch.
  const auto other = dir.file("other.conf");
  sbtest::spit(other, "alpha = 2.0\n");
  auto d = cli("validate --config " + other + " --in " + eps);
  EXPECT_EQ(d.status, 1);
  EXPECT_NE(d.out.find("digest:"), std::string::npos);
}

TEST(Cli, IndexThenGenerateWithIndex) {
  sbtest::TempDir dir("cli_idx");
  const auto idx = dir.file("index.json");
  ASSERT_EQ(cli("index " + data_args() + " --out " + idx).status, 0);
  ASSERT_TRUE(fs::exists(idx));
  const auto a = dir.file("a.jsonl"), b = dir.file("b.jsonl");
  ASSERT_EQ(cli("generate " + conf() + " " + data_args() + " --index " + idx + " --episodes 5 --quiet --out " + a).status, 0);
  ASSERT_EQ(cli("generate " + conf() + " " + data_args() + " --episodes 5 --quiet --out " + b).status, 0);
  EXPECT_EQ(sbtest::slurp(a), sbtest::slurp(b));

  // An index from a different corpus is rejected.
  const auto small = dir.file("small.json");
  ASSERT_EQ(cli("index --data '" + sbtest::dataset_paths()[0] + "' --out " + small).status, 0);
  EXPECT_EQ(cli("generate " + conf() + " " + data_args() + " --index " + small + " --out " + dir.file("c.jsonl")).status, 2);

  // Same files, different order: document count matches but contents do not.
  const auto p = sbtest::dataset_paths();
  const auto reordered = dir.file("reordered.json");
  ASSERT_EQ(cli("index --data '" + p[2] + "' '" + p[1] + "' '" + p[0] + "' --out " + reordered).status, 0);
  EXPECT_EQ(cli("generate " + conf() + " " + data_args() + " --index " + reordered + " --out " + dir.file("d.jsonl")).status, 2);
  EXPECT_FALSE(fs::exists(dir.file("d.jsonl")));
}

TEST(Cli, StatsWritesReport) {
  sbtest::TempDir dir("cli_stats");
  const auto eps = dir.file("e.jsonl");
  ASSERT_EQ(cli("generate " + conf() + " " + data_args() + " --episodes 12 --quiet --out " + eps).status, 0);
  auto r = cli("stats --in " + eps + " --out " + dir.file("report"));
  ASSERT_EQ(r.status, 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir.path())) {
    if (entry.path().filename().string().rfind("report", 0) == 0) ++files;
  }
  EXPECT_EQ(files, 8u);

  // The printed summary matches an in-process computation.
  auto episodes = read_episodes(eps, SkillRoster());
  auto expected = compute_stats(episodes, SkillRoster(), StatsOptions::defaults(3));
  EXPECT_EQ(r.out, stats_summary(expected, SkillRoster()));
}

TEST(Cli, RemoteBackendAgainstMockServer) {
  auto tables = mock_tables_from_json(nlohmann::ordered_json::parse(R"({
    "generate": [{"skill": "P", "text": "I like hiking.", "score": 0.5},
                 {"skill": "K", "text": "Hiking trails are long.", "score": 0.5},
                 {"skill": "E", "text": "That sounds lovely.", "score": 0.5}],
    "classify": {"default": [0.5, 0.25, 0.25]}
  })"));
  MockServer server(std::move(tables));
  sbtest::TempDir dir("cli_remote");
  const auto eps = dir.file("e.jsonl");
  auto r = cli("generate " + conf() + " " + data_args() + " --backend remote --episodes 3 --quiet --out " + eps,
               "SKILLBLEND_ENDPOINT=" + server.url());
  ASSERT_EQ(r.status, 0);
  auto episodes = read_episodes(eps, SkillRoster());
  ASSERT_EQ(episodes.size(), 3u);
  for (const auto& ep : episodes) {
    ASSERT_EQ(ep.turns.size(), 10u);
    // Unmatched /rank scores every candidate 0, so the lowest index (P) wins.
    EXPECT_EQ(ep.turns[2].utterance.text, "I like hiking.");
  }
  EXPECT_GT(server.exchanges().size(), 0u);

  server.stop();
  EXPECT_EQ(cli("generate " + conf() + " " + data_args() + " --backend remote --episodes 1 --quiet --out " + eps,
                "SKILLBLEND_ENDPOINT=" + server.url())
                .status,
            1);
}
