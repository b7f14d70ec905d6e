#pragma once

#include <vector>

#include "argpipe/corpus/types.hpp"

namespace argpipe::grounder {

using corpus::SpanLabeling;

enum class SpanMatchMode {
  kPartial,  // span-level; TP when >= 50% of a predicted span's tokens
             // overlap the matched gold span
  kFull,     // span-level; TP when all predicted tokens lie in the gold span
  kOverall,  // token-level micro F1 over non-O BIO labels
};

struct MatchedPair {
  size_t pred_index;
  size_t gold_index;
  int overlap;
};

// Greedy largest-overlap-first matching over pairs satisfying the mode's
// criterion; each span participates at most once. Not meaningful for
// kOverall.
std::vector<MatchedPair> match_spans(const SpanLabeling& pred,
                                     const SpanLabeling& gold,
                                     SpanMatchMode mode);

struct F1Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;  // 0 when precision + recall == 0
  void operator+=(const F1Counts& o);
};

F1Counts span_match_counts(const SpanLabeling& pred, const SpanLabeling& gold,
                           int token_count, SpanMatchMode mode);

double span_f1(const SpanLabeling& pred, const SpanLabeling& gold,
               int token_count, SpanMatchMode mode);

struct GroundingCounts {
  long matched = 0;
  long agree = 0;

  double accuracy() const { return matched ? static_cast<double>(agree) / matched : 0.0; }
  void operator+=(const GroundingCounts& o);
};

GroundingCounts grounding_counts(const SpanLabeling& pred,
                                 const SpanLabeling& gold);

// Fraction of partial-matched spans whose grounding ids agree; 0 when
// nothing matched.
double grounding_accuracy(const SpanLabeling& pred, const SpanLabeling& gold);

// Corpus-level aggregation across examples (micro counts).
struct SpanMetricsReport {
  double partial_f1 = 0.0;
  double full_f1 = 0.0;
  double overall_f1 = 0.0;
  double grounding_accuracy = 0.0;
};

class SpanMetricsAccumulator {
 public:
  void add(const SpanLabeling& pred, const SpanLabeling& gold,
           int token_count);
  SpanMetricsReport report() const;

 private:
  F1Counts partial_, full_, overall_;
  GroundingCounts grounding_;
};

}  // namespace argpipe::grounder
