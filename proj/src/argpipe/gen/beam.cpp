#include "argpipe/gen/beam.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace argpipe::gen {

namespace {

using Trigram = std::array<int, 3>;

struct Hypothesis {
  std::vector<int> tokens;
  double score = 0.0;
  std::set<Trigram> trigrams;
};

bool better(const BeamResult& a, const BeamResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

BeamResult beam_search(const StepFn& step, const std::set<int>& stop_tokens,
                       const BeamConfig& cfg) {
  if (cfg.beam_width < 1) throw ValidationError("beam width must be >= 1");
  if (cfg.max_len < 1) throw ValidationError("max_len must be >= 1");

  std::vector<Hypothesis> live(1);
  std::vector<BeamResult> finished;

  for (int pos = 0; pos < cfg.max_len && !live.empty(); ++pos) {
    struct Candidate {
      size_t hyp;
      int token;
      double score;
    };
    std::vector<Candidate> candidates;
    for (size_t h = 0; h < live.size(); ++h) {
      std::vector<double> logp = step(live[h].tokens);
      if (cfg.block_repeated_trigrams && live[h].tokens.size() >= 2) {
        const int a = live[h].tokens[live[h].tokens.size() - 2];
        const int b = live[h].tokens.back();
        for (int tok = 0; tok < static_cast<int>(logp.size()); ++tok) {
          if (live[h].trigrams.count({a, b, tok}))
            logp[static_cast<size_t>(tok)] =
                -std::numeric_limits<double>::infinity();
        }
      }
      for (int tok = 0; tok < static_cast<int>(logp.size()); ++tok) {
        const double lp = logp[static_cast<size_t>(tok)];
        if (std::isinf(lp) && lp < 0) continue;
        candidates.push_back({h, tok, live[h].score + lp});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const Candidate& a, const Candidate& b) {
                       if (a.score != b.score) return a.score > b.score;
                       if (live[a.hyp].tokens != live[b.hyp].tokens)
                         return live[a.hyp].tokens < live[b.hyp].tokens;
                       return a.token < b.token;
                     });

    std::vector<Hypothesis> next;
    for (const Candidate& c : candidates) {
      if (static_cast<int>(next.size()) >= cfg.beam_width) break;
      if (stop_tokens.count(c.token)) {
        finished.push_back(
            {live[c.hyp].tokens, c.score, c.token, false});
        continue;
      }
      Hypothesis h = live[c.hyp];
      if (h.tokens.size() >= 2)
        h.trigrams.insert({h.tokens[h.tokens.size() - 2], h.tokens.back(),
                           c.token});
      h.tokens.push_back(c.token);
      h.score = c.score;
      next.push_back(std::move(h));
    }
    live = std::move(next);

    // Log-probabilities are non-positive, so no live hypothesis can improve
    // past its current score; stop once the best finished one dominates.
    if (!finished.empty() && !live.empty()) {
      double best_finished = finished.front().score;
      for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
      double best_live = live.front().score;
      for (const auto& h : live) best_live = std::max(best_live, h.score);
      if (best_finished >= best_live) {
        live.clear();
        break;
      }
    }
  }

  for (const Hypothesis& h : live)
    finished.push_back({h.tokens, h.score, -1, true});

  if (finished.empty())
    throw Error("beam search produced no hypotheses");
  const BeamResult* best = &finished.front();
  for (const BeamResult& r : finished)
    if (better(r, *best)) best = &r;
  return *best;
}

}  // namespace argpipe::gen
