#include "argpipe/eval/nli.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <vector>

#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::eval {

namespace {

const std::set<std::string>& negations() {
  static const std::set<std::string> kNeg = {"not", "no",      "never",
                                             "n't", "nothing", "cannot"};
  return kNeg;
}

// Antonym pairs flip parity like an explicit negation does.
const std::map<std::string, int>& polarity_words() {
  static const std::map<std::string, int> kPolarity = {
      {"favourable", 0},   {"unfavourable", 1}, {"favorable", 0},
      {"unfavorable", 1},  {"good", 0},         {"bad", 1},
      {"effective", 0},    {"ineffective", 1},  {"supports", 0},
      {"undermines", 1},   {"improves", 0},     {"harms", 1},
      {"increase", 0},     {"decrease", 1},     {"increases", 0},
      {"decreases", 1},    {"acceptable", 0},   {"unacceptable", 1},
      {"fair", 0},         {"unfair", 1},       {"necessary", 0},
      {"unnecessary", 1},  {"desirable", 0},    {"undesirable", 1},
  };
  return kPolarity;
}

struct TextProfile {
  std::set<std::string> content;
  int parity = 0;
};

TextProfile profile(const std::string& text) {
  TextProfile p;
  for (const auto& raw : corpus::tokenize(text).tokens) {
    std::string tok;
    for (char c : raw)
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (negations().count(tok)) {
      p.parity ^= 1;
      continue;
    }
    auto pol = polarity_words().find(tok);
    if (pol != polarity_words().end()) p.parity ^= pol->second;
    if (tok.size() > 2) p.content.insert(tok);
  }
  return p;
}

}  // namespace

NliJudgement RuleBasedNli::judge(const std::string& premise,
                                 const std::string& hypothesis) const {
  const TextProfile a = profile(premise);
  const TextProfile b = profile(hypothesis);
  if (a.content.empty() || b.content.empty()) return {0.05, 0.05, 0.90};
  size_t common = 0;
  for (const auto& tok : b.content)
    if (a.content.count(tok)) ++common;
  const double overlap =
      static_cast<double>(common) / static_cast<double>(b.content.size());
  if (overlap >= 0.6) {
    if (a.parity == b.parity) return {0.90, 0.05, 0.05};
    return {0.05, 0.90, 0.05};
  }
  return {0.10, 0.10, 0.80};
}

EntailContra entail_contra(const std::string& original,
                           const std::string& generated,
                           const NliProvider& provider, double threshold) {
  const NliJudgement j = provider.judge(original, generated);
  return {j.entail >= threshold, j.contradict >= threshold};
}

}  // namespace argpipe::eval
