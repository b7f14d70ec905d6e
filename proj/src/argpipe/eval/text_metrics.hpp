#pragma once

#include <string>
#include <vector>

#include "argpipe/common/error.hpp"

namespace argpipe::eval {

using TokenSeq = std::vector<std::string>;

struct BleuConfig {
  int max_order = 4;
  double epsilon = 1e-9;  // substituted for empty precision buckets only
};

// Corpus BLEU: geometric mean of modified n-gram precisions (n = 1..4)
// with brevity penalty, counts pooled over the corpus. A precision bucket
// with zero matches contributes epsilon instead of zero so tiny corpora do
// not collapse the geometric mean; identity corpora are unaffected.
double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references,
                   const BleuConfig& cfg = {});

// Rouge-L F-measure: P = LCS/|candidate|, R = LCS/|reference|.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

int lcs_length(const TokenSeq& a, const TokenSeq& b);

}  // namespace argpipe::eval
