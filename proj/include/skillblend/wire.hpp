#pragma once

// JSON bodies of the model-backend protocol. Every endpoint is an HTTP POST
// with a UTF-8 JSON object in both directions:
//
//   /generate  {"skill","context","dialogue","attempt"} -> {"text","score"}
//   /rank      {"skill","context","dialogue","candidates"} -> {"scores"}
//   /nli       {"premise","hypothesis"} -> {"label","confidence"}
//   /classify  {"text"} -> {"distribution"}
//
// Requests are serialized with fixed key order. Unknown response fields are
// ignored; missing or mistyped ones raise ErrorCode::protocol carrying the
// raw body.

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillblend/classifiers.hpp"
#include "skillblend/core.hpp"

namespace skillblend::wire {

using ordered_json = nlohmann::ordered_json;

inline ordered_json dialogue_json(const DialogueContext& dtx) {
  auto arr = ordered_json::array();
  for (const auto& u : dtx.turns) {
    ordered_json turn;
    turn["speaker"] = u.speaker;
    turn["text"] = u.text;
    arr.push_back(std::move(turn));
  }
  return arr;
}

inline std::string generate_request(const SkillId& skill, const SkillContext& stx, const DialogueContext& dtx,
                                    int attempt) {
  ordered_json j;
  j["skill"] = skill.id;
  j["context"] = stx.lines;
  j["dialogue"] = dialogue_json(dtx);
  j["attempt"] = attempt;
  return j.dump();
}

inline std::string rank_request(const SkillId& skill, const SkillContext& stx, const DialogueContext& dtx,
                                std::span<const ResponseCandidate> candidates) {
  ordered_json j;
  j["skill"] = skill.id;
  j["context"] = stx.lines;
  j["dialogue"] = dialogue_json(dtx);
  auto texts = ordered_json::array();
  for (const auto& c : candidates) texts.push_back(c.text);
  j["candidates"] = std::move(texts);
  return j.dump();
}

inline std::string nli_request(std::string_view premise, std::string_view hypothesis) {
  ordered_json j;
  j["premise"] = premise;
  j["hypothesis"] = hypothesis;
  return j.dump();
}

inline std::string classify_request(std::string_view text) {
  ordered_json j;
  j["text"] = text;
  return j.dump();
}

namespace detail {

[[noreturn]] inline void protocol_fail(const std::string& what, const std::string& body) {
  throw Error(ErrorCode::protocol, what, body);
}

inline nlohmann::json parse_object(const std::string& body, const char* route) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    protocol_fail(std::string(route) + ": response is not valid JSON", body);
  }
  if (!j.is_object()) protocol_fail(std::string(route) + ": response is not a JSON object", body);
  return j;
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* name, const char* route, const std::string& body) {
  auto it = j.find(name);
  if (it == j.end()) protocol_fail(std::string(route) + ": missing field '" + name + "'", body);
  return *it;
}

inline double number(const nlohmann::json& v, const char* what, const std::string& body) {
  if (!v.is_number()) protocol_fail(std::string(what) + " is not a number", body);
  double d = v.get<double>();
  if (!std::isfinite(d)) protocol_fail(std::string(what) + " is not finite", body);
  return d;
}

}  // namespace detail

struct GenerateResponse {
  std::string text;
  double score = 0.0;
};

inline GenerateResponse parse_generate_response(const std::string& body) {
  auto j = detail::parse_object(body, "/generate");
  const auto& text = detail::field(j, "text", "/generate", body);
  if (!text.is_string()) detail::protocol_fail("/generate: 'text' is not a string", body);
  GenerateResponse out{text.get<std::string>(), detail::number(detail::field(j, "score", "/generate", body), "/generate: 'score'", body)};
  if (is_blank(out.text)) detail::protocol_fail("/generate: 'text' is blank", body);
  return out;
}

inline std::vector<double> parse_rank_response(const std::string& body, std::size_t expected) {
  auto j = detail::parse_object(body, "/rank");
  const auto& scores = detail::field(j, "scores", "/rank", body);
  if (!scores.is_array()) detail::protocol_fail("/rank: 'scores' is not an array", body);
  if (scores.size() != expected) {
    detail::protocol_fail("/rank: got " + std::to_string(scores.size()) + " scores for " + std::to_string(expected) +
                              " candidates",
                          body);
  }
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(detail::number(s, "/rank: score", body));
  return out;
}

inline NliVerdict parse_nli_response(const std::string& body) {
  auto j = detail::parse_object(body, "/nli");
  const auto& label = detail::field(j, "label", "/nli", body);
  if (!label.is_string()) detail::protocol_fail("/nli: 'label' is not a string", body);
  auto parsed = parse_nli_label(label.get<std::string>());
  if (!parsed) detail::protocol_fail("/nli: unknown label '" + label.get<std::string>() + "'", body);
  double confidence = detail::number(detail::field(j, "confidence", "/nli", body), "/nli: 'confidence'", body);
  if (confidence < 0.0 || confidence > 1.0) detail::protocol_fail("/nli: confidence outside [0, 1]", body);
  return {*parsed, confidence};
}

inline SkillDistribution parse_classify_response(const std::string& body, std::size_t roster_size) {
  auto j = detail::parse_object(body, "/classify");
  const auto& dist = detail::field(j, "distribution", "/classify", body);
  if (!dist.is_array()) detail::protocol_fail("/classify: 'distribution' is not an array", body);
  if (dist.size() != roster_size) {
    detail::protocol_fail("/classify: distribution has length " + std::to_string(dist.size()) + ", roster has " +
                              std::to_string(roster_size),
                          body);
  }
  SkillDistribution out;
  for (const auto& p : dist) out.probs.push_back(detail::number(p, "/classify: probability", body));
  if (!out.is_valid()) detail::protocol_fail("/classify: not a probability distribution", body);
  return out;
}

}  // namespace skillblend::wire
