#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"
#include "argpipe/gen/beam.hpp"
#include "argpipe/gen/special_tokens.hpp"
#include "argpipe/nn/checkpoint.hpp"
#include "argpipe/nn/trainer.hpp"
#include "argpipe/nn/transformer.hpp"
#include "argpipe/nn/vocab.hpp"

namespace argpipe::gen {

enum class GeneratorVariant { kMono, kDual, kStanceOnly, kSchemeOnly };

std::string_view generator_variant_name(GeneratorVariant v);
GeneratorVariant generator_variant_from_name(std::string_view name);

// Topic plus up to four (variable token, fact text) pairs in a seeded
// random order; the id tokens stay consecutive from <VAR_0>.
struct EncoderInput {
  std::string topic;
  std::vector<std::pair<std::string, std::string>> variables;
  std::vector<int> permutation;  // slot i holds the input with this index

  std::string text() const;
};

EncoderInput build_encoder_input(const std::string& topic,
                                 const std::vector<std::string>& variable_texts,
                                 std::uint64_t seed);

// Ordered decoder control tokens. Mono: stance, scheme, <argument>;
// dual phase 1 ends with <pattern>; dual phase 2 is the generated template
// followed by <argument>; ablations drop one code.
std::vector<std::string> build_control_prefix(
    GeneratorVariant variant, std::optional<corpus::Stance> stance,
    std::optional<corpus::ArgumentScheme> scheme, int phase = 1,
    const std::vector<std::string>& template_tokens = {});

// Literal placeholder substitution (the behavior dual decoding is expected
// to approximate); throws listing any placeholder without a variable.
std::string substitute_template(const std::string& template_text,
                                const EncoderInput& input);

// The scheme used as control code for a corpus row: highest-probability
// non-Others scheme when probabilities exist, else the first non-Others
// gold label; nullopt when the row only carries Others.
std::optional<corpus::ArgumentScheme> pick_control_scheme(
    const corpus::AnnotatedExample& ex);

struct GeneratorConfig {
  GeneratorVariant variant = GeneratorVariant::kMono;
  nn::TransformerDims encoder;
  nn::TransformerDims decoder;
  int beam_width = 5;
  int max_new_tokens = 50;
  bool block_repeated_trigrams = true;
  nn::TrainConfig train;
  std::uint64_t seed = 0;

  GeneratorConfig() {
    encoder.layers = 2;
    encoder.width = 64;
    encoder.heads = 4;
    decoder.layers = 2;
    decoder.width = 64;
    decoder.heads = 4;
    train.batch_size = 24;
  }
};

struct GenerationRecord {
  EncoderInput input;
  GeneratorVariant variant = GeneratorVariant::kMono;
  std::optional<corpus::Stance> stance;
  std::optional<corpus::ArgumentScheme> scheme;
  std::vector<std::string> control_codes;  // phase-1 prefix
  std::vector<std::string> template_tokens;  // dual only
  std::string template_text;                 // dual only
  std::vector<std::string> phase2_context;   // dual: template + <argument>
  std::vector<std::string> argument_tokens;
  std::string argument_text;
  double beam_score = 0.0;
  bool truncated = false;
  std::vector<std::string> flags;
  std::string reference;  // original argument when generated off a corpus row
};

// Control-coded encoder-decoder generator. One decoder serves both dual
// phases; the training sequence for dual is
//   controls <pattern> template <argument> argument
// with the loss over everything from the first template token on.
class ArgumentGenerator {
 public:
  ArgumentGenerator(const GeneratorConfig& cfg, nn::Vocab vocab);

  static nn::Vocab build_vocab(
      const std::vector<corpus::AnnotatedExample>& examples,
      const corpus::KnowledgeBase& kb);

  struct TrainingRow {
    std::vector<int> encoder_ids;
    std::vector<int> decoder_ids;  // includes <bos> ... <eos>
    int prefix_len = 0;            // tokens before the first supervised one
    std::string id;
  };

  // Builds the training sequence for one corpus row. Dual requires grounded
  // spans (the template is derived by replacing each grounded span with its
  // <VAR_X> token under the row's seeded variable ordering).
  TrainingRow make_training_row(const corpus::AnnotatedExample& ex,
                                const corpus::KnowledgeBase& kb,
                                std::uint64_t permutation_seed) const;

  nn::TrainLog train(const std::vector<TrainingRow>& train_rows,
                     const std::vector<TrainingRow>& val_rows);

  double row_loss(const TrainingRow& row, double loss_scale, bool backward);

  GenerationRecord generate(const EncoderInput& input,
                            std::optional<corpus::Stance> stance,
                            std::optional<corpus::ArgumentScheme> scheme) const;

  void save(const std::string& path) const;
  static std::unique_ptr<ArgumentGenerator> load(const std::string& path);

  nn::ParameterStore& params() { return store_; }
  const GeneratorConfig& config() const { return cfg_; }
  const nn::Vocab& vocab() const { return vocab_; }

  std::vector<int> encoder_ids(const EncoderInput& input) const;
  std::vector<int> token_ids(const std::vector<std::string>& tokens) const;

 private:
  std::vector<double> next_token_log_probs(const std::vector<int>& decoder_ids,
                                           const nn::Matrix& encoder_states)
      const;
  nn::Matrix run_encoder(const std::vector<int>& ids) const;

  GeneratorConfig cfg_;
  nn::Vocab vocab_;
  nn::ParameterStore store_;
  nn::Parameter* embedding_ = nullptr;
  std::unique_ptr<nn::TransformerEncoder> encoder_;
  std::unique_ptr<nn::TransformerDecoder> decoder_;
};

}  // namespace argpipe::gen
