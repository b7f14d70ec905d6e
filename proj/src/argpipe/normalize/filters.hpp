#pragma once

#include <map>
#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"
#include "argpipe/normalize/claims.hpp"
#include "argpipe/normalize/normalize.hpp"

namespace argpipe::normalize {

struct FilterConfig {
  double scheme_prob_factor = 0.20;
  double max_unnormalized_fraction = 0.30;
  int max_words = 150;
  int min_variables = 1;
  int max_variables = 4;
  int min_occurrences = 2;
  int max_occurrences = 4;
};

// Drop reasons, in rule order. All bounds read inclusively.
enum class DropReason {
  kNone,
  kSchemeOthers,        // top predicted scheme is Others
  kSchemeProbability,   // top prob below factor * corpus mean for that scheme
  kUnnormalizedFraction,
  kLength,
  kVariableCount,
  kVariableOccurrence,
  kNoClaim,
};

std::string_view drop_reason_name(DropReason r);

struct SchemeFilterResult {
  std::vector<corpus::AnnotatedExample> kept;
  std::vector<std::pair<std::string, DropReason>> dropped;  // (id, reason)
  std::map<corpus::ArgumentScheme, double> mean_probs;
};

// Keeps examples whose top predicted scheme is not Others and whose top
// probability is at least scheme_prob_factor times that scheme's corpus
// mean probability. Every example must carry scheme_probs.
SchemeFilterResult scheme_probability_filter(
    const std::vector<corpus::AnnotatedExample>& examples,
    double scheme_prob_factor);

struct QualityDecision {
  bool keep = true;
  DropReason reason = DropReason::kNone;
};

// Applies the post-normalization rules in order: unnormalized-span
// fraction, word count, grounded-variable count, per-variable occurrence
// bounds, claim presence. unmapped_spans is the count of this example's
// spans that normalization left unmapped.
QualityDecision quality_filter(const corpus::AnnotatedExample& ex,
                               const FilterConfig& cfg, int unmapped_spans,
                               const ClaimDetector& claims);

// Adds each unique unmapped span text as a fresh expanded variable;
// texts already present in the KB are not duplicated. Returns text -> id
// for the rewrite step.
std::map<std::string, std::string> expand_kb(
    corpus::KnowledgeBase& kb,
    const std::vector<std::pair<std::string, std::string>>& unmapped_text_topic);

struct QualityPipelineResult {
  std::vector<corpus::AnnotatedExample> survivors;
  std::vector<std::pair<std::string, DropReason>> dropped;
  corpus::KnowledgeBase kb;  // input KB plus expansion
};

// The post-normalization tail of the corpus pipeline: the unnormalized-
// fraction rule first, then KB expansion from the passers' unmapped spans
// (which then ground those spans), then the remaining quality rules.
QualityPipelineResult apply_quality_filters(
    const std::vector<corpus::AnnotatedExample>& normalized,
    const std::vector<SpanOutcomeRecord>& outcomes,
    const corpus::KnowledgeBase& kb, const FilterConfig& cfg,
    const ClaimDetector& claims);

}  // namespace argpipe::normalize
