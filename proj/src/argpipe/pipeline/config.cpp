#include "argpipe/pipeline/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "argpipe/common/hash.hpp"

namespace argpipe::pipeline {

void FixtureSpec::validate() const {
  if (mode != "mixed" && mode != "grid")
    throw ConfigError("fixture.mode must be 'mixed' or 'grid'");
  if (num_topics < 1 || num_topics > 6)
    throw ConfigError("fixture.num_topics must lie in [1, 6]");
  if (examples_per_topic < 1) throw ConfigError("examples_per_topic >= 1");
  if (pc_per_topic < 0) throw ConfigError("pc_per_topic >= 0");
  if (kb_per_topic < 2) throw ConfigError("kb_per_topic >= 2");
  if (vocab_size < 8) throw ConfigError("vocab_size >= 8");
  if (noise_rate < 0.0 || noise_rate > 1.0)
    throw ConfigError("noise_rate must lie in [0, 1]");
}

PipelineConfig::PipelineConfig() {
  grounder.train.learning_rate = 1e-5;
  grounder.train.batch_size = 32;
  tagger.train.learning_rate = 1e-5;
  tagger.train.batch_size = 64;
  generator.train.learning_rate = 1e-5;
  generator.train.batch_size = 24;
}

namespace {

struct KeyBinding {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

long parse_int(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v +
                      "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

using Registry = std::vector<std::pair<std::string, KeyBinding>>;

#define INT_KEY(name, field)                                              \
  {name,                                                                  \
   {[](const PipelineConfig& c) { return std::to_string(c.field); },      \
    [](PipelineConfig& c, const std::string& v) {                         \
      c.field = static_cast<int>(parse_int(v, name));                     \
    }}}

#define U64_KEY(name, field)                                              \
  {name,                                                                  \
   {[](const PipelineConfig& c) { return std::to_string(c.field); },      \
    [](PipelineConfig& c, const std::string& v) {                         \
      c.field = static_cast<std::uint64_t>(parse_int(v, name));           \
    }}}

#define DBL_KEY(name, field)                                              \
  {name,                                                                  \
   {[](const PipelineConfig& c) { return fmt_double(c.field); },          \
    [](PipelineConfig& c, const std::string& v) {                         \
      c.field = parse_double(v, name);                                    \
    }}}

#define BOOL_KEY(name, field)                                             \
  {name,                                                                  \
   {[](const PipelineConfig& c) { return c.field ? "true" : "false"; },   \
    [](PipelineConfig& c, const std::string& v) {                         \
      c.field = parse_bool(v, name);                                      \
    }}}

#define STR_KEY(name, field)                                              \
  {name,                                                                  \
   {[](const PipelineConfig& c) { return c.field; },                      \
    [](PipelineConfig& c, const std::string& v) { c.field = v; }}}

const Registry& registry() {
  static const Registry kRegistry = {
      U64_KEY("seed", seed),
      STR_KEY("fixture.mode", fixture.mode),
      INT_KEY("fixture.num_topics", fixture.num_topics),
      INT_KEY("fixture.examples_per_topic", fixture.examples_per_topic),
      INT_KEY("fixture.pc_per_topic", fixture.pc_per_topic),
      INT_KEY("fixture.kb_per_topic", fixture.kb_per_topic),
      INT_KEY("fixture.vocab_size", fixture.vocab_size),
      DBL_KEY("fixture.noise_rate", fixture.noise_rate),
      U64_KEY("fixture.seed", fixture.seed),
      INT_KEY("grounder.layers", grounder.encoder.layers),
      INT_KEY("grounder.hidden", grounder.encoder.width),
      INT_KEY("grounder.heads", grounder.encoder.heads),
      INT_KEY("grounder.max_len", grounder.encoder.max_len),
      INT_KEY("grounder.reduced_dim", grounder.reduced_dim),
      DBL_KEY("grounder.learning_rate", grounder.train.learning_rate),
      INT_KEY("grounder.batch_size", grounder.train.batch_size),
      INT_KEY("grounder.early_stop_patience", grounder.train.early_stop_patience),
      DBL_KEY("grounder.grad_clip_norm", grounder.train.grad_clip_norm),
      INT_KEY("grounder.max_steps", grounder.train.max_steps),
      INT_KEY("grounder.eval_every", grounder.train.eval_every),
      DBL_KEY("grounder.target_loss", grounder.train.target_loss),
      {"tagger.variant",
       {[](const PipelineConfig& c) {
          return std::string(tagger::variant_name(c.tagger.variant));
        },
        [](PipelineConfig& c, const std::string& v) {
          c.tagger.variant = tagger::variant_from_name(v);
        }}},
      INT_KEY("tagger.layers", tagger.encoder.layers),
      INT_KEY("tagger.hidden", tagger.encoder.width),
      INT_KEY("tagger.heads", tagger.encoder.heads),
      INT_KEY("tagger.max_len", tagger.encoder.max_len),
      INT_KEY("tagger.pipeline_attention_layers",
              tagger.pipeline_attention_layers),
      INT_KEY("tagger.pipeline_attention_heads",
              tagger.pipeline_attention_heads),
      DBL_KEY("tagger.scheme_decision_threshold",
              tagger.scheme_decision_threshold),
      DBL_KEY("tagger.learning_rate", tagger.train.learning_rate),
      INT_KEY("tagger.batch_size", tagger.train.batch_size),
      INT_KEY("tagger.early_stop_patience", tagger.train.early_stop_patience),
      DBL_KEY("tagger.grad_clip_norm", tagger.train.grad_clip_norm),
      INT_KEY("tagger.max_steps", tagger.train.max_steps),
      INT_KEY("tagger.eval_every", tagger.train.eval_every),
      DBL_KEY("tagger.target_loss", tagger.train.target_loss),
      DBL_KEY("normalizer.direct_threshold", normalizer.direct_threshold),
      DBL_KEY("normalizer.community_threshold", normalizer.community_threshold),
      INT_KEY("normalizer.min_community_size", normalizer.min_community_size),
      INT_KEY("normalizer.embedding_width", normalizer.embedding_width),
      DBL_KEY("filter.scheme_prob_factor", filter.scheme_prob_factor),
      DBL_KEY("filter.max_unnormalized_fraction",
              filter.max_unnormalized_fraction),
      INT_KEY("filter.max_words", filter.max_words),
      INT_KEY("filter.min_variables", filter.min_variables),
      INT_KEY("filter.max_variables", filter.max_variables),
      INT_KEY("filter.min_occurrences", filter.min_occurrences),
      INT_KEY("filter.max_occurrences", filter.max_occurrences),
      STR_KEY("claim_detector", claim_detector),
      INT_KEY("generator.encoder_layers", generator.encoder.layers),
      INT_KEY("generator.decoder_layers", generator.decoder.layers),
      INT_KEY("generator.hidden", generator.encoder.width),
      INT_KEY("generator.heads", generator.encoder.heads),
      INT_KEY("generator.max_len", generator.encoder.max_len),
      DBL_KEY("generator.learning_rate", generator.train.learning_rate),
      INT_KEY("generator.batch_size", generator.train.batch_size),
      INT_KEY("generator.early_stop_patience",
              generator.train.early_stop_patience),
      DBL_KEY("generator.grad_clip_norm", generator.train.grad_clip_norm),
      INT_KEY("generator.beam_width", generator.beam_width),
      INT_KEY("generator.max_new_tokens", generator.max_new_tokens),
      BOOL_KEY("generator.block_repeated_trigrams",
               generator.block_repeated_trigrams),
      INT_KEY("generator.max_steps", generator.train.max_steps),
      INT_KEY("generator.eval_every", generator.train.eval_every),
      DBL_KEY("generator.target_loss", generator.train.target_loss),
      DBL_KEY("eval.nli_threshold", eval.nli_threshold),
      DBL_KEY("eval.bleu_epsilon", eval.bleu_epsilon),
  };
  return kRegistry;
}

#undef INT_KEY
#undef U64_KEY
#undef DBL_KEY
#undef BOOL_KEY
#undef STR_KEY

void post_parse(PipelineConfig& cfg) {
  // generator decoder width/heads follow the encoder's (one "hidden"/"heads"
  // knob covers both halves of the seq2seq model)
  cfg.generator.decoder.width = cfg.generator.encoder.width;
  cfg.generator.decoder.heads = cfg.generator.encoder.heads;
  cfg.generator.decoder.max_len = cfg.generator.encoder.max_len;
  cfg.tagger.validate();
  cfg.fixture.validate();
  if (cfg.claim_detector != "rules" && cfg.claim_detector != "constant-true")
    throw ConfigError("claim_detector must be 'rules' or 'constant-true'");
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& [name, binding] : registry()) {
      if (name == key) {
        binding.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": unknown config key '" + key + "'");
  }
  post_parse(cfg);
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  return parse_config_text(text);
}

std::string render_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [name, binding] : registry()) {
    out += name;
    out += " = ";
    out += binding.get(cfg);
    out += '\n';
  }
  return out;
}

std::string config_hash(const PipelineConfig& cfg) {
  return hex64(fnv1a64(render_config(cfg)));
}

}  // namespace argpipe::pipeline
