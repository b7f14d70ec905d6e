#pragma once

#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"
#include "argpipe/pipeline/config.hpp"

namespace argpipe::pipeline {

struct FixtureOutput {
  corpus::KnowledgeBase kb;
  std::vector<corpus::AnnotatedExample> labeled;    // gold spans + schemes
  std::vector<corpus::AnnotatedExample> unlabeled;  // stance only, for expansion
};

// Deterministic synthetic corpus. Every labeled example is rendered from one
// of six per-scheme sentence skeletons so stance and scheme stay learnable
// at toy scale; gold spans are the embedded fact texts. "grid" mode emits a
// complete (context x stance x scheme) block whose targets are a
// deterministic function of the control codes, which the control-
// sensitivity checks rely on.
FixtureOutput make_fixture(const FixtureSpec& spec);

// The skeleton realization of (scheme, stance) over two fact texts.
std::string render_skeleton(corpus::ArgumentScheme scheme,
                            corpus::Stance stance, const std::string& z0,
                            const std::string& z1);

// Schemes used by grid mode (the four-scheme block keeps 32 examples at
// 4 contexts x 2 stances x 4 schemes).
const std::vector<corpus::ArgumentScheme>& grid_schemes();

}  // namespace argpipe::pipeline
