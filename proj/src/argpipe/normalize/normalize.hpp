#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "argpipe/corpus/types.hpp"
#include "argpipe/normalize/embedding.hpp"

namespace argpipe::normalize {

struct NormalizerConfig {
  double direct_threshold = 0.85;
  double community_threshold = 0.75;
  int min_community_size = 2;
  int embedding_width = 256;
};

struct DirectMatch {
  std::string variable_id;
  double similarity;
};

// Most similar KB variable when cosine clears the threshold (inclusive);
// ties break on the lexicographically smallest variable id.
std::optional<DirectMatch> direct_map(const std::string& span_text,
                                      const corpus::KnowledgeBase& kb,
                                      const EmbeddingProvider& provider,
                                      double threshold);

// Community clustering realized as connected components of the graph with
// an edge where cosine >= community_threshold. Components smaller than
// min_community_size fall back to singletons. Returned clusters are sorted
// by smallest member; members ascend.
std::vector<std::vector<int>> cluster_spans(
    const std::vector<std::string>& span_texts,
    const EmbeddingProvider& provider, double community_threshold,
    int min_community_size);

struct IndirectMatch {
  std::string variable_id;
  int via_index;  // the directly-mapped neighbor whose variable is inherited
  double similarity;
};

// For a span that was not directly mapped: the highest-cosine directly
// mapped member of its cluster donates its variable; nullopt when the
// cluster has no directly mapped member.
std::optional<IndirectMatch> indirect_map(
    int span_index, const std::vector<std::vector<int>>& clusters,
    const std::vector<std::optional<DirectMatch>>& direct_results,
    const std::vector<std::vector<double>>& embeddings);

enum class SpanOutcome { kDirect, kIndirect, kUnmapped };

std::string_view outcome_name(SpanOutcome o);

struct SpanOutcomeRecord {
  std::string example_id;
  int span_index = 0;  // index within the example's span list
  std::string span_text;
  SpanOutcome outcome = SpanOutcome::kUnmapped;
  std::string variable_id;  // direct / indirect
  double similarity = 0.0;
  std::string via_text;  // indirect only

  nlohmann::ordered_json to_json() const;
  static SpanOutcomeRecord from_json(const nlohmann::ordered_json& j);
};

struct NormalizationResult {
  // Spans rewritten to their mapped variable ids; unmapped spans keep the
  // OTHERS sentinel (the outcome records identify them for the filter
  // stage). Example variable lists are refreshed from the groundings.
  std::vector<corpus::AnnotatedExample> examples;
  std::vector<SpanOutcomeRecord> outcomes;
};

// Grounds every OTHERS span of the corpus by direct then indirect mapping.
// Spans already grounded to a KB variable are left untouched, which makes
// the operation idempotent.
NormalizationResult normalize_corpus(
    const std::vector<corpus::AnnotatedExample>& examples,
    const corpus::KnowledgeBase& kb, const EmbeddingProvider& provider,
    const NormalizerConfig& cfg);

}  // namespace argpipe::normalize
