#pragma once

// Key-value configuration files:
//
//   # comment
//   alpha = 1.0
//   skill_roster = P,K,E
//
// Engine keys: alpha, episode_length, max_attempts, epsilon, rng_seed,
// seeds_per_pair, skill_roster. Tool keys: lexicon, agents, backend,
// endpoint, timeout_ms, max_retries, parallelism, episodes.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "skillblend/core.hpp"

namespace skillblend {

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "alpha",   "episode_length", "max_attempts", "epsilon",     "rng_seed",    "seeds_per_pair", "skill_roster",
      "lexicon", "agents",         "backend",      "endpoint",    "timeout_ms",  "max_retries",    "parallelism",
      "episodes"};
  return keys;
}

namespace detail {
inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}
}  // namespace detail

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& source = "<config>") {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto body = detail::trim(line);
      if (body.empty()) continue;
      auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::config, source + ": line " + std::to_string(n) + ": expected key = value");
      }
      auto key = detail::trim(std::string_view(body).substr(0, eq));
      auto value = detail::trim(std::string_view(body).substr(eq + 1));
      const auto& known = known_config_keys();
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw Error(ErrorCode::config, source + ": line " + std::to_string(n) + ": unknown key '" + key + "'");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::config, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

 private:
  std::map<std::string, std::string> values_;
};

namespace detail {
template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::config, "config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}
}  // namespace detail

inline SkillRoster parse_roster(const std::string& text) {
  std::vector<std::string> ids;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) ids.push_back(detail::trim(cur));
  try {
    return SkillRoster(ids);
  } catch (const Error& e) {
    throw Error(ErrorCode::config, std::string("skill_roster: ") + e.what());
  }
}

// Applies the engine keys of `file` on top of `base` and validates the result.
inline EngineConfig engine_config_from(const ConfigFile& file, EngineConfig base = {}) {
  if (auto v = file.get("alpha")) base.alpha = detail::parse_number<double>("alpha", *v);
  if (auto v = file.get("episode_length")) base.episode_length = detail::parse_number<int>("episode_length", *v);
  if (auto v = file.get("max_attempts")) base.max_attempts = detail::parse_number<int>("max_attempts", *v);
  if (auto v = file.get("epsilon")) base.epsilon = detail::parse_number<double>("epsilon", *v);
  if (auto v = file.get("rng_seed")) base.rng_seed = detail::parse_number<std::uint64_t>("rng_seed", *v);
  if (auto v = file.get("seeds_per_pair")) base.seeds_per_pair = detail::parse_number<int>("seeds_per_pair", *v);
  if (auto v = file.get("skill_roster")) base.skill_roster = parse_roster(*v);
  check_config(base);
  return base;
}

}  // namespace skillblend
