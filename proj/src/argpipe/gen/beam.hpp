#pragma once

#include <functional>
#include <set>
#include <vector>

#include "argpipe/common/error.hpp"

namespace argpipe::gen {

struct BeamConfig {
  int beam_width = 5;
  int max_len = 50;
  bool block_repeated_trigrams = true;
};

// Given the tokens generated so far (context excluded), yields
// log-probabilities over the vocabulary for the next token.
using StepFn = std::function<std::vector<double>(const std::vector<int>&)>;

struct BeamResult {
  std::vector<int> tokens;  // stop token excluded
  double score = 0.0;       // sum of token log-probabilities
  int stop_token = -1;      // -1 when the length bound ended the hypothesis
  bool truncated = false;
};

// Length-bounded beam search. A continuation that would create a trigram
// already present in that hypothesis is blocked outright. Ties between
// equal scores break on the lexicographically smaller token sequence so
// results are deterministic.
BeamResult beam_search(const StepFn& step, const std::set<int>& stop_tokens,
                       const BeamConfig& cfg);

}  // namespace argpipe::gen
