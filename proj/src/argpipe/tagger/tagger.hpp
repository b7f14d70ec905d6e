#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"
#include "argpipe/nn/checkpoint.hpp"
#include "argpipe/nn/trainer.hpp"
#include "argpipe/nn/transformer.hpp"
#include "argpipe/nn/vocab.hpp"

namespace argpipe::tagger {

enum class TaggerVariant { kParallel, kPipelined };

std::string_view variant_name(TaggerVariant v);
TaggerVariant variant_from_name(std::string_view name);

struct SchemeTaggerConfig {
  TaggerVariant variant = TaggerVariant::kPipelined;
  nn::TransformerDims encoder;
  // Fixed at 2 layers / 4 heads for the pipelined variant.
  int pipeline_attention_layers = 2;
  int pipeline_attention_heads = 4;
  double scheme_decision_threshold = 0.5;
  nn::TrainConfig train;
  std::uint64_t seed = 0;

  SchemeTaggerConfig() {
    encoder.layers = 2;
    encoder.width = 64;
    encoder.heads = 4;
    train.batch_size = 64;
  }
  void validate() const;
};

struct SchemePrediction {
  std::map<corpus::ArgumentScheme, double> probabilities;  // independent sigmoids
  std::set<corpus::ArgumentScheme> labels;  // prob >= threshold
  corpus::SpanLabeling spans;               // groundings all OTHERS
};

// Per-token participation in the pipelined head's self-attention: tokens
// inside any span are excluded as both queries and keys (the BOS position,
// handled separately, always participates).
std::vector<bool> selective_mask(int token_count,
                                 const corpus::SpanLabeling& spans);

// Joint factual-span extraction and multi-label scheme classification from
// argument text alone. The parallel variant runs a token-level span head
// and a mean-pool scheme head off one shared encoder; the pipelined variant
// masks predicted spans, applies a small self-attention stack over the
// remaining tokens and classifies from the BOS representation.
class SchemeTagger {
 public:
  SchemeTagger(const SchemeTaggerConfig& cfg, nn::Vocab vocab);

  static nn::Vocab build_vocab(
      const std::vector<corpus::AnnotatedExample>& examples);

  corpus::SpanLabeling predict_spans(const corpus::TokenizedText& argument)
      const;
  SchemePrediction predict_schemes_parallel(
      const corpus::TokenizedText& argument) const;
  SchemePrediction predict_schemes_pipelined(
      const corpus::TokenizedText& argument) const;
  // Dispatches on the configured variant.
  SchemePrediction predict(const corpus::TokenizedText& argument) const;

  // Test hook for the masking-invariance contract: scheme logits of the
  // pipelined head computed from externally supplied encoder states
  // (row 0 = BOS, row i+1 = token i).
  nn::Matrix pipelined_logits_from_states(const nn::Matrix& encoder_states,
                                          const corpus::SpanLabeling& spans)
      const;

  nn::TrainLog train(const std::vector<corpus::AnnotatedExample>& train_set,
                     const std::vector<corpus::AnnotatedExample>& val_set);

  // Joint loss: token BIO cross-entropy + per-label scheme BCE, unweighted
  // sum. The pipelined variant teacher-forces gold spans for masking.
  double example_loss(const corpus::AnnotatedExample& ex, double loss_scale,
                      bool backward);

  void save(const std::string& path) const;
  static std::unique_ptr<SchemeTagger> load(const std::string& path);

  nn::ParameterStore& params() { return store_; }
  const SchemeTaggerConfig& config() const { return cfg_; }

 private:
  std::vector<int> input_token_ids(const corpus::TokenizedText& t) const;
  nn::Expr encode(nn::Tape& t, const corpus::TokenizedText& argument) const;
  nn::Expr span_logits(nn::Tape& t, nn::Expr states) const;      // T x 3
  nn::Expr parallel_logits(nn::Tape& t, nn::Expr states) const;  // 1 x 6
  nn::Expr pipelined_logits(nn::Tape& t, nn::Expr states,
                            const corpus::SpanLabeling& spans) const;  // 1 x 6
  corpus::SpanLabeling decode_spans(const nn::Matrix& logits) const;
  SchemePrediction prediction_from(const nn::Matrix& scheme_logits,
                                   corpus::SpanLabeling spans) const;

  SchemeTaggerConfig cfg_;
  nn::Vocab vocab_;
  nn::ParameterStore store_;
  std::unique_ptr<nn::TransformerEncoder> encoder_;
  std::unique_ptr<nn::SelfAttentionStack> pipeline_stack_;
  nn::Parameter* span_w_ = nullptr;
  nn::Parameter* span_b_ = nullptr;
  nn::Parameter* scheme_w_ = nullptr;
  nn::Parameter* scheme_b_ = nullptr;
};

// Multi-label F1: per-scheme binary F1 plus micro-averaged overall F1.
struct SchemeF1Report {
  std::map<corpus::ArgumentScheme, double> per_scheme;
  double overall = 0.0;
};

SchemeF1Report scheme_f1(
    const std::vector<std::set<corpus::ArgumentScheme>>& preds,
    const std::vector<std::set<corpus::ArgumentScheme>>& golds);

}  // namespace argpipe::tagger
