#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "argpipe/common/error.hpp"

namespace argpipe::corpus {

// The six argument scheme labels. GoalFromMeans and MeansForGoal are one
// merged label; Others is a valid classifier label but never a generation
// control code.
enum class ArgumentScheme {
  kFromConsequence,
  kFromSourceAuthority,
  kFromSourceKnowledge,
  kGoalMeansMerged,
  kRuleOrPrinciple,
  kOthers,
};

constexpr int kNumSchemes = 6;

const std::vector<ArgumentScheme>& all_schemes();
std::string_view scheme_name(ArgumentScheme s);
// Throws ValidationError on a string outside the closed set.
ArgumentScheme scheme_from_name(std::string_view name);

enum class Stance { kPro, kCon };

std::string_view stance_name(Stance s);
Stance stance_from_name(std::string_view name);

enum class Provenance { kP1Human, kP1Auto, kPcAuto, kFixture };

std::string_view provenance_name(Provenance p);
Provenance provenance_from_name(std::string_view name);

// Reserved grounding sentinel for spans unrelated to any KB variable.
inline constexpr std::string_view kOthersGrounding = "OTHERS";

enum class VariableOrigin { kSeedKb, kExpanded };

std::string_view origin_name(VariableOrigin o);
VariableOrigin origin_from_name(std::string_view name);

struct FactVariable {
  std::string id;
  std::string text;
  std::string topic;
  VariableOrigin origin = VariableOrigin::kSeedKb;
};

// Inventory of fact variables. Lookup by id is total over stored ids and
// existing entries are never mutated by expansion.
class KnowledgeBase {
 public:
  void add(FactVariable var);
  bool contains(std::string_view id) const;
  const FactVariable& get(std::string_view id) const;
  const std::vector<FactVariable>& variables() const { return vars_; }
  std::vector<const FactVariable*> by_topic(std::string_view topic) const;
  size_t size() const { return vars_.size(); }

 private:
  std::vector<FactVariable> vars_;
  std::unordered_map<std::string, size_t> index_;
};

// Reference tokenization of a raw string; offsets are half-open character
// ranges into raw, non-overlapping and monotonically increasing.
struct TokenizedText {
  std::string raw;
  std::vector<std::string> tokens;
  std::vector<std::pair<int, int>> offsets;

  int token_count() const { return static_cast<int>(tokens.size()); }
  void validate() const;
};

// Token-level span, [start, end) with a grounding id or OTHERS.
struct Span {
  int start = 0;
  int end = 0;
  std::string grounding;

  bool operator==(const Span&) const = default;
};

struct SpanLabeling {
  std::vector<Span> spans;

  bool operator==(const SpanLabeling&) const = default;
  // Enforces 0 <= start < end <= token_count and non-overlap.
  void validate(int token_count) const;
};

// One argument text with all annotations; the unit of every pipeline stage.
struct AnnotatedExample {
  std::string id;
  std::string topic;
  TokenizedText argument;
  Stance stance = Stance::kPro;
  std::set<ArgumentScheme> schemes;
  std::map<ArgumentScheme, double> scheme_probs;  // optional; empty = absent
  SpanLabeling spans;
  std::vector<std::string> variables;  // ordered grounded variable ids
  Provenance provenance = Provenance::kFixture;

  // Checks span/variable invariants against a KB (groundings resolve or are
  // OTHERS, no duplicate variables).
  void validate(const KnowledgeBase& kb) const;
};

}  // namespace argpipe::corpus
