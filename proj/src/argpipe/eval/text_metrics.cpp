#include "argpipe/eval/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace argpipe::eval {

namespace {

std::map<std::vector<std::string>, long> ngram_counts(const TokenSeq& seq,
                                                      int n) {
  std::map<std::vector<std::string>, long> counts;
  if (static_cast<int>(seq.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= seq.size(); ++i) {
    std::vector<std::string> gram(seq.begin() + static_cast<long>(i),
                                  seq.begin() + static_cast<long>(i) + n);
    ++counts[std::move(gram)];
  }
  return counts;
}

}  // namespace

double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references,
                   const BleuConfig& cfg) {
  if (candidates.size() != references.size())
    throw ValidationError("corpus_bleu: candidate/reference count mismatch");
  if (candidates.empty())
    throw ValidationError("corpus_bleu: empty corpus");

  std::vector<long> matches(static_cast<size_t>(cfg.max_order), 0);
  std::vector<long> totals(static_cast<size_t>(cfg.max_order), 0);
  long cand_len = 0, ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<long>(candidates[i].size());
    ref_len += static_cast<long>(references[i].size());
    for (int n = 1; n <= cfg.max_order; ++n) {
      const auto cand = ngram_counts(candidates[i], n);
      const auto ref = ngram_counts(references[i], n);
      for (const auto& [gram, count] : cand) {
        totals[static_cast<size_t>(n - 1)] += count;
        auto it = ref.find(gram);
        if (it != ref.end())
          matches[static_cast<size_t>(n - 1)] += std::min(count, it->second);
      }
    }
  }

  double log_precision_sum = 0.0;
  for (int n = 0; n < cfg.max_order; ++n) {
    const long total = totals[static_cast<size_t>(n)];
    const long match = matches[static_cast<size_t>(n)];
    double p;
    if (total == 0 || match == 0)
      p = cfg.epsilon;  // empty bucket
    else
      p = static_cast<double>(match) / static_cast<double>(total);
    log_precision_sum += std::log(p);
  }
  const double geo_mean = std::exp(log_precision_sum / cfg.max_order);

  double brevity = 1.0;
  if (cand_len < ref_len && cand_len > 0)
    brevity = std::exp(1.0 - static_cast<double>(ref_len) / cand_len);
  if (cand_len == 0) return 0.0;
  return brevity * geo_mean;
}

int lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty())
    throw ValidationError("rouge_l: inputs must be non-empty");
  const int lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / candidate.size();
  const double r = static_cast<double>(lcs) / reference.size();
  return 2.0 * p * r / (p + r);
}

}  // namespace argpipe::eval
