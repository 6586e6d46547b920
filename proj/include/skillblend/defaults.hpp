#pragma once

// Built-in lexicon and scripted-agent templates for the P/K/E roster
// (personality, knowledge, empathy). Used when no lexicon or agents file is
// configured.

#include <vector>

#include "skillblend/agents.hpp"
#include "skillblend/classifiers.hpp"

namespace skillblend {

inline LexiconSpec default_lexicon(const SkillRoster& roster = SkillRoster()) {
  if (!(roster == SkillRoster())) {
    throw Error(ErrorCode::config, "the built-in lexicon covers the P,K,E roster only; configure a lexicon file");
  }
  LexiconSpec spec;
  spec.roster = roster;
  spec.keywords = {
      // P
      {{"i love", 1.0}, {"my favorite", 1.2}, {"hobby", 1.0}, {"i like", 0.8}, {"my job", 1.0},
       {"i work", 0.8}, {"my family", 0.8}, {"pets", 0.6}, {"personally", 0.8}},
      // K
      {{"invented", 1.2}, {"century", 1.0}, {"known as", 1.0}, {"designed", 1.0}, {"originally", 1.0},
       {"according to", 1.2}, {"history", 0.8}, {"popular", 0.6}, {"fact", 0.8}},
      // E
      {{"sorry", 1.2}, {"feel", 1.0}, {"proud", 1.0}, {"afraid", 1.0}, {"glad", 1.0},
       {"hope", 0.8}, {"worried", 1.0}, {"must have been", 1.0}, {"upset", 1.0}},
  };
  spec.contradictions = {
      {"sneakers everyday", "sandals"},
      {"i am vegetarian", "steak"},
      {"i have a dog", "no pets"},
      {"i live alone", "my roommate"},
      {"afraid of water", "went swimming"},
      {"i hate sports", "played football"},
  };
  spec.entailments = {
      {"i like tennis", "enjoy tennis"},
      {"i have a dog", "my dog"},
  };
  return spec;
}

inline std::vector<ScriptedAgentSpec> default_agent_specs(const SkillRoster& roster = SkillRoster()) {
  if (!(roster == SkillRoster())) {
    throw Error(ErrorCode::config, "the built-in agent templates cover the P,K,E roster only; configure an agents file");
  }
  return {
      {roster.at(0),
       {{"Oh really? {context}", 0.6},
        {"Personally, {last_word} reminds me of my favorite hobby.", 0.4},
        {"I love chatting about things like that with my family.", 0.3}},
       true},
      {roster.at(1),
       {{"Here is a fact I know: {context}", 0.6},
        {"According to what I have read, {last_word} has a long history.", 0.4},
        {"Many popular things were originally designed for something else.", 0.3}},
       true},
      {roster.at(2),
       {{"I feel you. {context}", 0.6},
        {"That must have been quite something with {last_word}.", 0.4},
        {"I hope everything turns out fine, I am glad you told me.", 0.3}},
       true},
  };
}

}  // namespace skillblend
