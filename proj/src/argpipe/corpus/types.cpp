#include "argpipe/corpus/types.hpp"

#include <algorithm>
#include <set>

namespace argpipe::corpus {

const std::vector<ArgumentScheme>& all_schemes() {
  static const std::vector<ArgumentScheme> kAll = {
      ArgumentScheme::kFromConsequence,    ArgumentScheme::kFromSourceAuthority,
      ArgumentScheme::kFromSourceKnowledge, ArgumentScheme::kGoalMeansMerged,
      ArgumentScheme::kRuleOrPrinciple,    ArgumentScheme::kOthers,
  };
  return kAll;
}

std::string_view scheme_name(ArgumentScheme s) {
  switch (s) {
    case ArgumentScheme::kFromConsequence: return "from_consequence";
    case ArgumentScheme::kFromSourceAuthority: return "from_source_authority";
    case ArgumentScheme::kFromSourceKnowledge: return "from_source_knowledge";
    case ArgumentScheme::kGoalMeansMerged: return "goal_from_means/means_for_goal";
    case ArgumentScheme::kRuleOrPrinciple: return "rule_or_principle";
    case ArgumentScheme::kOthers: return "others";
  }
  throw ValidationError("invalid ArgumentScheme value");
}

ArgumentScheme scheme_from_name(std::string_view name) {
  for (ArgumentScheme s : all_schemes()) {
    if (scheme_name(s) == name) return s;
  }
  throw ValidationError("unknown argument scheme: '" + std::string(name) + "'");
}

std::string_view stance_name(Stance s) {
  return s == Stance::kPro ? "pro" : "con";
}

Stance stance_from_name(std::string_view name) {
  if (name == "pro") return Stance::kPro;
  if (name == "con") return Stance::kCon;
  throw ValidationError("unknown stance: '" + std::string(name) + "'");
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kP1Human: return "p1-human";
    case Provenance::kP1Auto: return "p1-auto";
    case Provenance::kPcAuto: return "pc-auto";
    case Provenance::kFixture: return "fixture";
  }
  throw ValidationError("invalid Provenance value");
}

Provenance provenance_from_name(std::string_view name) {
  if (name == "p1-human") return Provenance::kP1Human;
  if (name == "p1-auto") return Provenance::kP1Auto;
  if (name == "pc-auto") return Provenance::kPcAuto;
  if (name == "fixture") return Provenance::kFixture;
  throw ValidationError("unknown provenance: '" + std::string(name) + "'");
}

std::string_view origin_name(VariableOrigin o) {
  return o == VariableOrigin::kSeedKb ? "seed-kb" : "expanded";
}

VariableOrigin origin_from_name(std::string_view name) {
  if (name == "seed-kb") return VariableOrigin::kSeedKb;
  if (name == "expanded") return VariableOrigin::kExpanded;
  throw ValidationError("unknown variable origin: '" + std::string(name) + "'");
}

void KnowledgeBase::add(FactVariable var) {
  if (var.id == kOthersGrounding)
    throw ValidationError("'OTHERS' is a reserved grounding sentinel, not a KB id");
  if (var.id.empty() || var.text.empty())
    throw ValidationError("fact variable needs a non-empty id and text");
  if (index_.count(var.id))
    throw ValidationError("duplicate fact variable id: " + var.id);
  index_.emplace(var.id, vars_.size());
  vars_.push_back(std::move(var));
}

bool KnowledgeBase::contains(std::string_view id) const {
  return index_.count(std::string(id)) > 0;
}

const FactVariable& KnowledgeBase::get(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end())
    throw ValidationError("unknown fact variable id: " + std::string(id));
  return vars_[it->second];
}

std::vector<const FactVariable*> KnowledgeBase::by_topic(
    std::string_view topic) const {
  std::vector<const FactVariable*> out;
  for (const auto& v : vars_) {
    if (v.topic == topic) out.push_back(&v);
  }
  return out;
}

void TokenizedText::validate() const {
  if (tokens.size() != offsets.size())
    throw ValidationError("token/offset count mismatch");
  int prev_end = 0;
  for (size_t i = 0; i < offsets.size(); ++i) {
    auto [b, e] = offsets[i];
    if (b < prev_end || b >= e || e > static_cast<int>(raw.size()))
      throw ValidationError("token offsets must be monotone, non-overlapping "
                            "and inside the raw text");
    prev_end = e;
  }
}

void SpanLabeling::validate(int token_count) const {
  std::vector<Span> sorted = spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  int prev_end = 0;
  for (const Span& s : sorted) {
    if (s.start < 0 || s.start >= s.end)
      throw ValidationError("span must satisfy 0 <= start < end");
    if (s.end > token_count)
      throw RangeError("span end exceeds token count");
    if (s.start < prev_end)
      throw ValidationError("spans must be non-overlapping");
    prev_end = s.end;
  }
}

void AnnotatedExample::validate(const KnowledgeBase& kb) const {
  argument.validate();
  spans.validate(argument.token_count());
  for (const Span& s : spans.spans) {
    if (s.grounding != kOthersGrounding && !kb.contains(s.grounding))
      throw ValidationError("example " + id + ": grounding '" + s.grounding +
                            "' resolves neither in the KB nor to OTHERS");
  }
  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (!seen.insert(v).second)
      throw ValidationError("example " + id + ": duplicate variable id " + v);
    if (!kb.contains(v))
      throw ValidationError("example " + id + ": unknown variable id " + v);
  }
}

}  // namespace argpipe::corpus
