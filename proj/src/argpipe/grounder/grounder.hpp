#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"
#include "argpipe/nn/checkpoint.hpp"
#include "argpipe/nn/trainer.hpp"
#include "argpipe/nn/transformer.hpp"
#include "argpipe/nn/vocab.hpp"

namespace argpipe::grounder {

struct GrounderConfig {
  nn::TransformerDims encoder;  // {layers, width, heads}
  int reduced_dim = 600;
  nn::TrainConfig train;
  std::uint64_t seed = 0;

  GrounderConfig() {
    encoder.layers = 2;
    encoder.width = 64;
    encoder.heads = 4;
    train.batch_size = 32;
  }
};

// Per-tag logit planes over (channel, token); channel order is the input
// variable order with the OTHERS pseudo-variable last.
struct GroundingPrediction {
  int channels = 0;
  int tokens = 0;
  std::array<nn::Matrix, 3> tag_logits;  // B, I, O
  std::vector<std::string> channel_ids;
  corpus::SpanLabeling decoded;

  double logit(int channel, int token, int tag) const {
    return tag_logits[static_cast<size_t>(tag)](channel, token);
  }
};

// Joint span detection + grounding: a shared encoder runs over the argument
// and over each candidate variable segment, variable BOS vectors are
// reduced by a fully connected layer, and a per-tag biaffine layer scores
// every (variable, token) pair over {B, I, O}.
class SpanGrounder {
 public:
  SpanGrounder(const GrounderConfig& cfg, nn::Vocab vocab);

  static nn::Vocab build_vocab(
      const std::vector<corpus::AnnotatedExample>& examples,
      const corpus::KnowledgeBase& kb);

  // One vector per argument token plus one BOS vector per variable.
  // Variable segments are encoded independently (boundary token + segment-
  // local positions), so permuting variables permutes their vectors.
  std::pair<nn::Matrix, std::vector<nn::Matrix>> encode_pair(
      const corpus::TokenizedText& argument,
      const std::vector<const corpus::FactVariable*>& variables) const;

  // 1 x width -> 1 x reduced_dim.
  nn::Matrix reduce_variable(const nn::Matrix& bos_vector) const;

  // Biaffine scores for already-reduced representations; appends the
  // learned OTHERS channel. No decoding.
  GroundingPrediction biaffine_score(const nn::Matrix& reduced_tokens,
                                     const nn::Matrix& reduced_vars) const;

  // Full forward pass + argmax decode with cross-channel conflict
  // resolution; decoded labeling satisfies the non-overlap invariant.
  GroundingPrediction ground(
      const corpus::TokenizedText& argument,
      const std::vector<const corpus::FactVariable*>& variables) const;

  nn::TrainLog train(const std::vector<corpus::AnnotatedExample>& train_set,
                     const std::vector<corpus::AnnotatedExample>& val_set,
                     const corpus::KnowledgeBase& kb);

  // Cross-entropy of one example against its gold BIO channels; when
  // backward is set the scaled gradients accumulate into the store.
  double example_loss(const corpus::AnnotatedExample& ex,
                      const corpus::KnowledgeBase& kb, double loss_scale,
                      bool backward);

  void save(const std::string& path) const;
  static std::unique_ptr<SpanGrounder> load(const std::string& path);

  nn::ParameterStore& params() { return store_; }
  const GrounderConfig& config() const { return cfg_; }
  const nn::Vocab& vocab() const { return vocab_; }

 private:
  struct TagParams {
    nn::Parameter* bilinear;   // r x r
    nn::Parameter* var_lin;    // r x 1
    nn::Parameter* token_lin;  // r x 1
    nn::Parameter* bias;       // 1 x 1
  };

  std::vector<int> argument_token_ids(const corpus::TokenizedText& t) const;
  std::vector<int> variable_token_ids(const corpus::FactVariable& v) const;

  struct Forward {
    nn::Expr reduced_tokens;  // T x r
    nn::Expr reduced_vars;    // (V+1) x r, OTHERS last
    std::array<nn::Expr, 3> tag_logits;
  };
  Forward forward(nn::Tape& t, const corpus::TokenizedText& argument,
                  const std::vector<const corpus::FactVariable*>& variables)
      const;
  std::array<nn::Expr, 3> biaffine_exprs(nn::Tape& t, nn::Expr reduced_tokens,
                                         nn::Expr reduced_vars_with_others)
      const;

  GrounderConfig cfg_;
  nn::Vocab vocab_;
  nn::ParameterStore store_;
  std::unique_ptr<nn::TransformerEncoder> encoder_;
  nn::Parameter* token_proj_w_ = nullptr;
  nn::Parameter* token_proj_b_ = nullptr;
  nn::Parameter* var_reduce_w_ = nullptr;
  nn::Parameter* var_reduce_b_ = nullptr;
  nn::Parameter* others_vec_ = nullptr;  // 1 x width pseudo-variable
  std::array<TagParams, 3> tags_;
};

}  // namespace argpipe::grounder
