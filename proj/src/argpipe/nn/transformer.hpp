#pragma once

#include <string>
#include <vector>

#include "argpipe/nn/param.hpp"
#include "argpipe/nn/tape.hpp"

namespace argpipe::nn {

struct TransformerDims {
  int layers = 2;
  int width = 64;
  int heads = 4;
  int ffn_mult = 4;
  int max_len = 160;

  void validate() const;
};

struct AttentionParams {
  Parameter* wq;
  Parameter* bq;
  Parameter* wk;
  Parameter* bk;
  Parameter* wv;
  Parameter* bv;
  Parameter* wo;
  Parameter* bo;
};

AttentionParams make_attention_params(ParameterStore& store,
                                      const std::string& prefix, int width,
                                      Rng& rng);

// Multi-head scaled dot-product attention. queries: Tq x d, keys/values:
// Tk x d. additive_mask, when present, is Tq x Tk and added to the raw
// scores before softmax (0 = attend, large negative = blocked).
Expr multi_head_attention(Tape& t, Expr queries, Expr keys_values,
                          const AttentionParams& p, int heads,
                          const Matrix* additive_mask = nullptr);

Matrix causal_mask(int len);

struct LayerNormParams {
  Parameter* gain;
  Parameter* bias;
};

LayerNormParams make_layer_norm_params(ParameterStore& store,
                                       const std::string& prefix, int width,
                                       Rng& rng);

// Pre-LN transformer encoder with learned positional embeddings.
class TransformerEncoder {
 public:
  TransformerEncoder(ParameterStore& store, const std::string& prefix,
                     const TransformerDims& dims, int vocab_size, Rng& rng,
                     Parameter* shared_embedding = nullptr);

  // tokens -> T x width hidden states.
  Expr encode(Tape& t, const std::vector<int>& tokens) const;
  Parameter& embedding() const { return *embed_; }
  const TransformerDims& dims() const { return dims_; }

 private:
  struct Layer {
    LayerNormParams ln1, ln2;
    AttentionParams attn;
    Parameter* ffn_w1;
    Parameter* ffn_b1;
    Parameter* ffn_w2;
    Parameter* ffn_b2;
  };

  TransformerDims dims_;
  Parameter* embed_;
  Parameter* pos_;
  std::vector<Layer> layers_;
  LayerNormParams final_ln_;
};

// Pre-LN transformer decoder: causal self-attention, cross-attention over
// encoder states, feed-forward. Returns T x width hidden states; output
// projection is the caller's business (the generator ties it to the
// embedding matrix).
class TransformerDecoder {
 public:
  TransformerDecoder(ParameterStore& store, const std::string& prefix,
                     const TransformerDims& dims, int vocab_size, Rng& rng,
                     Parameter* shared_embedding = nullptr);

  Expr decode(Tape& t, const std::vector<int>& tokens, Expr encoder_out) const;
  const TransformerDims& dims() const { return dims_; }

 private:
  struct Layer {
    LayerNormParams ln1, ln2, ln3;
    AttentionParams self_attn;
    AttentionParams cross_attn;
    Parameter* ffn_w1;
    Parameter* ffn_b1;
    Parameter* ffn_w2;
    Parameter* ffn_b2;
  };

  TransformerDims dims_;
  Parameter* embed_;
  Parameter* pos_;
  std::vector<Layer> layers_;
  LayerNormParams final_ln_;
};

// Stack of residual self-attention blocks without feed-forward layers,
// applied to an externally-produced sequence of vectors.
class SelfAttentionStack {
 public:
  SelfAttentionStack(ParameterStore& store, const std::string& prefix,
                     int layers, int width, int heads, Rng& rng);

  Expr apply(Tape& t, Expr x) const;

 private:
  struct Layer {
    LayerNormParams ln;
    AttentionParams attn;
  };
  int heads_;
  std::vector<Layer> layers_;
  LayerNormParams final_ln_;
};

}  // namespace argpipe::nn
