#include "argpipe/grounder/span_metrics.hpp"

#include <algorithm>

#include "argpipe/corpus/bio.hpp"

namespace argpipe::grounder {

using corpus::BioTag;
using corpus::Span;

namespace {

int overlap_tokens(const Span& a, const Span& b) {
  return std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

bool meets_criterion(const Span& pred, const Span& gold, SpanMatchMode mode) {
  const int ov = overlap_tokens(pred, gold);
  if (ov <= 0) return false;
  const int pred_len = pred.end - pred.start;
  if (mode == SpanMatchMode::kPartial) return 2 * ov >= pred_len;
  return ov == pred_len;  // full: every predicted token inside the gold span
}

}  // namespace

std::vector<MatchedPair> match_spans(const SpanLabeling& pred,
                                     const SpanLabeling& gold,
                                     SpanMatchMode mode) {
  std::vector<MatchedPair> candidates;
  for (size_t p = 0; p < pred.spans.size(); ++p) {
    for (size_t g = 0; g < gold.spans.size(); ++g) {
      if (meets_criterion(pred.spans[p], gold.spans[g], mode))
        candidates.push_back(
            {p, g, overlap_tokens(pred.spans[p], gold.spans[g])});
    }
  }
  // Ties break on span coordinates, never list positions, so the matching
  // is invariant under permutation of the span order.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const MatchedPair& a, const MatchedPair& b) {
                     if (a.overlap != b.overlap) return a.overlap > b.overlap;
                     const Span& pa = pred.spans[a.pred_index];
                     const Span& pb = pred.spans[b.pred_index];
                     if (pa.start != pb.start) return pa.start < pb.start;
                     const Span& ga = gold.spans[a.gold_index];
                     const Span& gb = gold.spans[b.gold_index];
                     return ga.start < gb.start;
                   });
  std::vector<bool> pred_used(pred.spans.size(), false);
  std::vector<bool> gold_used(gold.spans.size(), false);
  std::vector<MatchedPair> matches;
  for (const MatchedPair& c : candidates) {
    if (pred_used[c.pred_index] || gold_used[c.gold_index]) continue;
    pred_used[c.pred_index] = true;
    gold_used[c.gold_index] = true;
    matches.push_back(c);
  }
  return matches;
}

double F1Counts::precision() const {
  return (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
}

double F1Counts::recall() const {
  return (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
}

double F1Counts::f1() const {
  const double p = precision(), r = recall();
  return (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
}

void F1Counts::operator+=(const F1Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
}

F1Counts span_match_counts(const SpanLabeling& pred, const SpanLabeling& gold,
                           int token_count, SpanMatchMode mode) {
  pred.validate(token_count);
  gold.validate(token_count);
  F1Counts c;
  if (mode == SpanMatchMode::kOverall) {
    const auto pt = corpus::encode_bio(pred, token_count, std::nullopt);
    const auto gt = corpus::encode_bio(gold, token_count, std::nullopt);
    for (int i = 0; i < token_count; ++i) {
      const BioTag p = pt[static_cast<size_t>(i)];
      const BioTag g = gt[static_cast<size_t>(i)];
      if (p != BioTag::kO && p == g) ++c.tp;
      if (p != BioTag::kO && p != g) ++c.fp;
      if (g != BioTag::kO && p != g) ++c.fn;
    }
    return c;
  }
  const auto matches = match_spans(pred, gold, mode);
  c.tp = static_cast<long>(matches.size());
  c.fp = static_cast<long>(pred.spans.size()) - c.tp;
  c.fn = static_cast<long>(gold.spans.size()) - c.tp;
  return c;
}

double span_f1(const SpanLabeling& pred, const SpanLabeling& gold,
               int token_count, SpanMatchMode mode) {
  return span_match_counts(pred, gold, token_count, mode).f1();
}

void GroundingCounts::operator+=(const GroundingCounts& o) {
  matched += o.matched;
  agree += o.agree;
}

GroundingCounts grounding_counts(const SpanLabeling& pred,
                                 const SpanLabeling& gold) {
  GroundingCounts c;
  for (const MatchedPair& m :
       match_spans(pred, gold, SpanMatchMode::kPartial)) {
    ++c.matched;
    if (pred.spans[m.pred_index].grounding == gold.spans[m.gold_index].grounding)
      ++c.agree;
  }
  return c;
}

double grounding_accuracy(const SpanLabeling& pred, const SpanLabeling& gold) {
  return grounding_counts(pred, gold).accuracy();
}

void SpanMetricsAccumulator::add(const SpanLabeling& pred,
                                 const SpanLabeling& gold, int token_count) {
  partial_ += span_match_counts(pred, gold, token_count, SpanMatchMode::kPartial);
  full_ += span_match_counts(pred, gold, token_count, SpanMatchMode::kFull);
  overall_ += span_match_counts(pred, gold, token_count, SpanMatchMode::kOverall);
  grounding_ += grounding_counts(pred, gold);
}

SpanMetricsReport SpanMetricsAccumulator::report() const {
  return {partial_.f1(), full_.f1(), overall_.f1(), grounding_.accuracy()};
}

}  // namespace argpipe::grounder
