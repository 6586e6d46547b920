// skillblend: command-line front end.
//
//   skillblend index      --data FILE... --out INDEX
//   skillblend generate   --config CONF --data FILE... --out EPISODES [--index INDEX] ...
//   skillblend stats      --in EPISODES --out PREFIX
//   skillblend validate   --in EPISODES [--config CONF]
//   skillblend mockserver --tables TABLES [--bind HOST:PORT]
//
// Exit status: 0 success, 1 runtime or validation failure, 2 usage or
// configuration error.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skillblend/mock_server.hpp"
#include "skillblend/remote.hpp"
#include "skillblend/skillblend.hpp"

namespace fs = std::filesystem;
using namespace skillblend;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

int exit_code_for(const Error& e) { return e.code() == ErrorCode::config ? kExitConfig : kExitFailure; }

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config, std::string("cannot read ") + what + " file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string(what) + " file " + path + ": " + e.what());
  }
}

void require_parent_dir(const std::string& path) {
  auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw Error(ErrorCode::config, "output directory does not exist: " + parent.string());
  }
}

// Writes through PATH.tmp and renames on success.
class AtomicOutput {
 public:
  explicit AtomicOutput(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {}
  ~AtomicOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }
  const std::string& tmp() const { return tmp_; }
  void commit() {
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    if (ec) throw Error(ErrorCode::io, "cannot rename " + tmp_ + " to " + path_ + ": " + ec.message());
    committed_ = true;
  }

 private:
  std::string path_;
  std::string tmp_;
  bool committed_ = false;
};

struct Loaded {
  ConfigFile file;
  EngineConfig cfg;
};

Loaded load_config(const std::string& path) {
  Loaded l;
  if (!path.empty()) l.file = ConfigFile::load(path);
  l.cfg = engine_config_from(l.file);
  return l;
}

template <typename T>
T tool_setting(const ConfigFile& file, const std::string& key, T fallback) {
  auto v = file.get(key);
  if (!v) return fallback;
  return detail::parse_number<T>(key, *v);
}

std::vector<SingleSkillRecord> read_all(const std::vector<std::string>& paths, const SkillRoster& roster) {
  std::vector<SingleSkillRecord> out;
  for (const auto& p : paths) {
    auto recs = read_dataset(p, roster);
    out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return out;
}

// ---- index -------------------------------------------------------------------

struct IndexArgs {
  std::string config;
  std::vector<std::string> data;
  std::string out;
};

int run_index(const IndexArgs& a) {
  auto conf = load_config(a.config);
  require_parent_dir(a.out);
  auto docs = context_docs(read_all(a.data, conf.cfg.skill_roster));
  auto index = build_index(docs);
  AtomicOutput out(a.out);
  save_index(index, out.tmp());
  out.commit();
  std::cerr << "indexed " << index.doc_count() << " context documents into " << a.out << "\n";
  return 0;
}

// ---- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::vector<std::string> data;
  std::string index;
  std::string out;
  std::string backend;
  std::string endpoint;
  std::string lexicon;
  std::string agents;
  std::optional<std::size_t> episodes;
  std::optional<int> parallelism;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

Participants scripted_backend(const ConfigFile& file, const GenerateArgs& a, const SkillRoster& roster) {
  auto lexicon_path = !a.lexicon.empty() ? a.lexicon : file.get("lexicon").value_or("");
  auto agents_path = !a.agents.empty() ? a.agents : file.get("agents").value_or("");
  auto lexicon = lexicon_path.empty() ? default_lexicon(roster) : lexicon_from_json(read_json_file(lexicon_path, "lexicon"), roster);
  auto specs = agents_path.empty() ? default_agent_specs(roster)
                                   : agent_specs_from_json(read_json_file(agents_path, "agents"), roster);
  Participants p;
  for (auto& spec : specs) p.agents.push_back(std::make_shared<ScriptedAgent>(std::move(spec)));
  p.judge = std::make_shared<LexicalNliJudge>(lexicon);
  p.scorer = std::make_shared<LexicalSkillScorer>(lexicon);
  return p;
}

Participants remote_backend(const ConfigFile& file, const GenerateArgs& a, const SkillRoster& roster) {
  BackendEndpoint ep;
  if (!a.endpoint.empty()) {
    ep.base_url = a.endpoint;
  } else if (auto e = env("SKILLBLEND_ENDPOINT")) {
    ep.base_url = *e;
  } else if (auto c = file.get("endpoint")) {
    ep.base_url = *c;
  } else {
    throw Error(ErrorCode::config, "remote backend needs --endpoint, SKILLBLEND_ENDPOINT or an endpoint config key");
  }
  ep.timeout_ms = tool_setting<int>(file, "timeout_ms", ep.timeout_ms);
  ep.max_retries = tool_setting<int>(file, "max_retries", ep.max_retries);
  ep.validate();
  auto client = std::make_shared<BackendClient>(ep);
  Participants p;
  for (const auto& skill : roster.skills()) p.agents.push_back(std::make_shared<RemoteAgent>(skill, client));
  p.judge = std::make_shared<RemoteNliJudge>(client);
  p.scorer = std::make_shared<RemoteSkillScorer>(roster, client);
  return p;
}

int run_generate(const GenerateArgs& a) {
  auto conf = load_config(a.config);
  auto& cfg = conf.cfg;
  if (a.seed) {
    cfg.rng_seed = *a.seed;
  } else if (auto s = env("SKILLBLEND_SEED")) {
    cfg.rng_seed = detail::parse_number<std::uint64_t>("SKILLBLEND_SEED", *s);
  }
  const auto episodes = a.episodes.value_or(tool_setting<std::size_t>(conf.file, "episodes", 100));
  const int parallelism = a.parallelism.value_or(tool_setting<int>(conf.file, "parallelism", 1));
  if (parallelism < 1) throw Error(ErrorCode::config, "parallelism must be >= 1");
  const auto backend = !a.backend.empty() ? a.backend : conf.file.get("backend").value_or("scripted");
  if (backend != "scripted" && backend != "remote") throw Error(ErrorCode::config, "unknown backend '" + backend + "'");
  require_parent_dir(a.out);

  const auto& roster = cfg.skill_roster;
  auto records = read_all(a.data, roster);
  auto docs = context_docs(records);
  auto pairs = extract_pairs(records);
  TfIdfIndex index;
  if (a.index.empty()) {
    index = build_index(docs);
  } else {
    index = load_index(a.index);
    if (auto why = index_mismatch(index, docs); !why.empty()) {
      throw Error(ErrorCode::config, "index " + a.index + " was not built from these datasets in this order: " + why);
    }
  }
  auto parts = backend == "remote" ? remote_backend(conf.file, a, roster) : scripted_backend(conf.file, a, roster);
  parts.check(roster);
  auto seeds = plan_seeds(pairs, index, docs, cfg, RoleTemplate::standard(roster), episodes);

  AtomicOutput out(a.out);
  EpisodeWriter writer(out.tmp(), roster);
  auto progress = [&](std::size_t done, std::size_t aborted) {
    if (a.quiet) return;
    const auto n = done + aborted;
    if (n % 100 == 0 || n == seeds.size()) std::cerr << "  " << n << "/" << seeds.size() << " episodes\n";
  };
  auto report = run_batch(seeds, parts, cfg, parallelism, [&](const Episode& ep) { writer.write(ep); }, progress);
  writer.close();
  out.commit();

  for (const auto& ab : report.aborts) std::cerr << "aborted seed " << ab.seed_index << ": " << ab.message << "\n";
  std::cout << "written " << report.written << ", aborted " << report.aborted << ", refusals " << report.refusal_total
            << ", config " << config_digest(cfg) << "\n";
  return report.written == 0 && !seeds.empty() ? kExitFailure : 0;
}

// ---- stats -------------------------------------------------------------------

struct StatsArgs {
  std::string config;
  std::string in;
  std::string out;
  std::string lexicon;
};

int run_stats(const StatsArgs& a) {
  auto conf = load_config(a.config);
  const auto& roster = conf.cfg.skill_roster;
  require_parent_dir(a.out + "x");
  std::optional<LexicalSkillScorer> scorer;
  if (!a.lexicon.empty()) scorer.emplace(lexicon_from_json(read_json_file(a.lexicon, "lexicon"), roster));

  auto options = StatsOptions::defaults(roster.size());
  options.epsilon = conf.cfg.epsilon;
  StatsAccumulator acc(roster, options, scorer ? &*scorer : nullptr);
  const auto episodes = read_episodes(a.in, roster);
  for (const auto& ep : episodes) acc.add(ep);
  auto report = acc.report();
  auto files = write_stats_report(report, roster, a.out);
  std::cout << stats_summary(report, roster);
  for (const auto& f : files) std::cerr << "wrote " << f << "\n";
  return 0;
}

// ---- validate ----------------------------------------------------------------

struct ValidateArgs {
  std::string config;
  std::string in;
};

int run_validate(const ValidateArgs& a) {
  auto conf = load_config(a.config);
  const auto digest = config_digest(conf.cfg);
  std::vector<Episode> episodes;
  try {
    episodes = read_episodes(a.in, conf.cfg.skill_roster);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    std::cout << "INVALID " << e.what() << "\n";
    return kExitFailure;
  }
  std::size_t bad = 0;
  for (const auto& ep : episodes) {
    auto problems = validate_episode(ep, conf.cfg);
    if (!a.config.empty() && ep.config_digest != digest) {
      problems.push_back("digest: episode was generated under config " + ep.config_digest + ", not " + digest);
    }
    if (problems.empty()) continue;
    ++bad;
    for (const auto& p : problems) std::cout << ep.id << ": " << p << "\n";
  }
  std::cout << episodes.size() - bad << "/" << episodes.size() << " episodes valid\n";
  return bad == 0 ? 0 : kExitFailure;
}

// ---- mockserver --------------------------------------------------------------

struct MockArgs {
  std::string tables;
  std::string bind = "127.0.0.1:0";
};

int run_mockserver(const MockArgs& a) {
  auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::config, "--bind must be HOST:PORT");
  const auto host = a.bind.substr(0, colon);
  const int port = detail::parse_number<int>("--bind port", a.bind.substr(colon + 1));
  std::ifstream in(a.tables, std::ios::binary);
  if (!in) throw Error(ErrorCode::config, "cannot read tables file " + a.tables);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, "tables file " + a.tables + ": " + e.what());
  }
  auto tables = mock_tables_from_json(j);

  // Block the shutdown signals before the server threads start so only
  // sigwait below sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  MockServer server(std::move(tables), host, port);
  std::cout << server.url() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  std::cerr << "served " << server.exchanges().size() << " requests\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-skill dialogue generation"};
  app.require_subcommand(1);

  IndexArgs ia;
  auto* index = app.add_subcommand("index", "Build the retrieval index over dataset contexts");
  index->add_option("--config", ia.config, "Config file")->check(CLI::ExistingFile);
  index->add_option("--data", ia.data, "Single-skill dataset files (JSONL)")->required()->check(CLI::ExistingFile);
  index->add_option("--out", ia.out, "Index output path")->required();

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate blended episodes");
  gen->add_option("--config", ga.config, "Config file")->check(CLI::ExistingFile);
  gen->add_option("--data", ga.data, "Single-skill dataset files (JSONL)")->required()->check(CLI::ExistingFile);
  gen->add_option("--index", ga.index, "Prebuilt index (built from --data when omitted)")->check(CLI::ExistingFile);
  gen->add_option("--out", ga.out, "Episode output path (JSONL)")->required();
  gen->add_option("--backend", ga.backend, "scripted or remote")->check(CLI::IsMember({"scripted", "remote"}));
  gen->add_option("--endpoint", ga.endpoint, "Remote backend base URL");
  gen->add_option("--lexicon", ga.lexicon, "Lexicon JSON for the scripted backend")->check(CLI::ExistingFile);
  gen->add_option("--agents", ga.agents, "Agent templates JSON for the scripted backend")->check(CLI::ExistingFile);
  gen->add_option("--episodes", ga.episodes, "Number of seed episodes");
  gen->add_option("--parallelism", ga.parallelism, "Worker threads");
  gen->add_option("--seed", ga.seed, "RNG seed");
  gen->add_flag("--quiet", ga.quiet, "No progress output");

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--config", sa.config, "Config file")->check(CLI::ExistingFile);
  stats->add_option("--in", sa.in, "Episode file (JSONL)")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", sa.out, "Output prefix for the report files")->required();
  stats->add_option("--lexicon", sa.lexicon, "Recompute distributions with this lexicon")->check(CLI::ExistingFile);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check episode invariants");
  validate->add_option("--config", va.config, "Config the episodes were generated under")->check(CLI::ExistingFile);
  validate->add_option("--in", va.in, "Episode file (JSONL)")->required()->check(CLI::ExistingFile);

  MockArgs ma;
  auto* mock = app.add_subcommand("mockserver", "Serve the backend protocol from tables");
  mock->add_option("--tables", ma.tables, "Tables JSON")->required()->check(CLI::ExistingFile);
  mock->add_option("--bind", ma.bind, "HOST:PORT (port 0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*index) return run_index(ia);
    if (*gen) return run_generate(ga);
    if (*stats) return run_stats(sa);
    if (*validate) return run_validate(va);
    if (*mock) return run_mockserver(ma);
  } catch (const BatchFailure& e) {
    std::cerr << "error: " << e.what() << " (" << e.partial().written << " episodes written before the failure)\n";
    return exit_code_for(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.detail().empty()) std::cerr << "  detail: " << e.detail() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
