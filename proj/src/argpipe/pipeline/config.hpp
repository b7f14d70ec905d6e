#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

#include "argpipe/gen/generator.hpp"
#include "argpipe/grounder/grounder.hpp"
#include "argpipe/normalize/filters.hpp"
#include "argpipe/normalize/normalize.hpp"
#include "argpipe/tagger/tagger.hpp"

namespace argpipe::pipeline {

struct FixtureSpec {
  std::string mode = "mixed";  // "mixed" or "grid"
  int num_topics = 6;
  int examples_per_topic = 16;  // labeled seed corpus
  int pc_per_topic = 8;         // unlabeled expansion corpus
  int kb_per_topic = 6;
  int vocab_size = 40;  // filler word pool size
  double noise_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalConfig {
  double nli_threshold = 0.8;
  double bleu_epsilon = 1e-9;
};

// One config object for the whole pipeline; defaults follow the published
// training setups wherever a value exists there.
struct PipelineConfig {
  std::uint64_t seed = 0;
  FixtureSpec fixture;
  grounder::GrounderConfig grounder;
  tagger::SchemeTaggerConfig tagger;
  normalize::NormalizerConfig normalizer;
  normalize::FilterConfig filter;
  std::string claim_detector = "rules";  // "rules" | "constant-true"
  gen::GeneratorConfig generator;
  EvalConfig eval;

  PipelineConfig();
};

// Plain hierarchical key-value text: one dotted.key = value per line,
// '#' comments. Unknown keys are rejected.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);

// Canonical rendering of a config (used for print-config and for hashing).
std::string render_config(const PipelineConfig& cfg);

std::string config_hash(const PipelineConfig& cfg);

}  // namespace argpipe::pipeline
