#include "argpipe/normalize/claims.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <vector>

#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::normalize {

namespace {

const std::set<std::string>& modals() {
  static const std::set<std::string> kModals = {
      "should", "must", "ought", "shall", "cannot",
  };
  return kModals;
}

const std::set<std::string>& stance_verbs() {
  static const std::set<std::string> kVerbs = {
      "support",   "supports",   "oppose",    "opposes",   "undermine",
      "undermines", "violate",   "violates",  "advocate",  "advocates",
      "improve",   "improves",   "reduce",    "reduces",   "harm",
      "harms",     "benefit",    "benefits",  "achieve",   "achieves",
      "fail",      "fails",      "favour",    "favours",   "favor",
      "favors",    "show",       "shows",     "prove",     "proves",
      "cut",       "cuts",
  };
  return kVerbs;
}

const std::set<std::string>& copulas() {
  static const std::set<std::string> kCopulas = {"is", "are", "was", "were"};
  return kCopulas;
}

const std::set<std::string>& evaluatives() {
  static const std::set<std::string> kEval = {
      "favourable",  "unfavourable", "favorable",  "unfavorable",
      "good",        "bad",          "wrong",      "right",
      "important",   "necessary",    "unnecessary", "harmful",
      "beneficial",  "effective",    "ineffective", "desirable",
      "undesirable", "acceptable",   "unacceptable", "fair",
      "unfair",      "justified",    "unjustified", "violation",
      "threat",      "mistake",      "failure",     "poor",
      "vital",       "essential",
  };
  return kEval;
}

const std::vector<std::pair<std::string, std::string>>& bigram_patterns() {
  static const std::vector<std::pair<std::string, std::string>> kBigrams = {
      {"need", "to"}, {"needs", "to"}, {"have", "to"},
      {"has", "to"},  {"lead", "to"},  {"leads", "to"},
  };
  return kBigrams;
}

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool sentence_has_claim(const std::vector<std::string>& toks) {
  for (size_t i = 0; i < toks.size(); ++i) {
    if (modals().count(toks[i]) || stance_verbs().count(toks[i])) return true;
    if (i + 1 < toks.size()) {
      for (const auto& [a, b] : bigram_patterns())
        if (toks[i] == a && toks[i + 1] == b) return true;
    }
    if (copulas().count(toks[i])) {
      // evaluative term within the next three tokens covers "is not
      // favourable" and "is a violation"
      for (size_t j = i + 1; j < std::min(toks.size(), i + 4); ++j)
        if (evaluatives().count(toks[j])) return true;
    }
  }
  return false;
}

}  // namespace

bool RuleBasedClaimDetector::has_claim(const std::string& text) const {
  std::vector<std::string> sentence;
  for (const auto& tok : corpus::tokenize(text).tokens) {
    if (tok == "." || tok == "!" || tok == "?") {
      if (sentence_has_claim(sentence)) return true;
      sentence.clear();
    } else {
      sentence.push_back(lower(tok));
    }
  }
  return sentence_has_claim(sentence);
}

}  // namespace argpipe::normalize
