#include "argpipe/nn/transformer.hpp"

#include <cmath>

namespace argpipe::nn {

namespace {

constexpr double kMaskValue = -1e30;

std::vector<int> iota_tokens(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
  return v;
}

}  // namespace

void TransformerDims::validate() const {
  if (layers < 1 || width < 1 || heads < 1 || ffn_mult < 1 || max_len < 1)
    throw ConfigError("transformer dims must be positive");
  if (width % heads != 0)
    throw ConfigError("attention width must be divisible by head count");
}

AttentionParams make_attention_params(ParameterStore& store,
                                      const std::string& prefix, int width,
                                      Rng& rng) {
  AttentionParams p;
  p.wq = &store.create(prefix + ".wq", width, width, Init::kXavier, rng);
  p.bq = &store.create(prefix + ".bq", 1, width, Init::kZero, rng);
  p.wk = &store.create(prefix + ".wk", width, width, Init::kXavier, rng);
  p.bk = &store.create(prefix + ".bk", 1, width, Init::kZero, rng);
  p.wv = &store.create(prefix + ".wv", width, width, Init::kXavier, rng);
  p.bv = &store.create(prefix + ".bv", 1, width, Init::kZero, rng);
  p.wo = &store.create(prefix + ".wo", width, width, Init::kXavier, rng);
  p.bo = &store.create(prefix + ".bo", 1, width, Init::kZero, rng);
  return p;
}

LayerNormParams make_layer_norm_params(ParameterStore& store,
                                       const std::string& prefix, int width,
                                       Rng& rng) {
  LayerNormParams p;
  p.gain = &store.create(prefix + ".gain", 1, width, Init::kZero, rng);
  p.gain->value.fill(1.0);
  p.bias = &store.create(prefix + ".bias", 1, width, Init::kZero, rng);
  return p;
}

Expr multi_head_attention(Tape& t, Expr queries, Expr keys_values,
                          const AttentionParams& p, int heads,
                          const Matrix* additive_mask) {
  Expr q = t.linear(queries, *p.wq, *p.bq);
  Expr k = t.linear(keys_values, *p.wk, *p.bk);
  Expr v = t.linear(keys_values, *p.wv, *p.bv);
  const int width = t.value(q).cols();
  if (width % heads != 0) throw ShapeError("width not divisible by heads");
  const int dh = width / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Expr mask{};
  if (additive_mask) mask = t.input(*additive_mask);

  std::vector<Expr> head_outs;
  head_outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Expr qh = t.slice_cols(q, h * dh, (h + 1) * dh);
    Expr kh = t.slice_cols(k, h * dh, (h + 1) * dh);
    Expr vh = t.slice_cols(v, h * dh, (h + 1) * dh);
    Expr scores = t.scale(t.matmul(qh, t.transpose(kh)), inv_scale);
    if (additive_mask) scores = t.add(scores, mask);
    Expr attn = t.softmax_rows(scores);
    head_outs.push_back(t.matmul(attn, vh));
  }
  Expr cat = t.concat_cols(head_outs);
  return t.linear(cat, *p.wo, *p.bo);
}

Matrix causal_mask(int len) {
  Matrix m(len, len);
  for (int i = 0; i < len; ++i)
    for (int j = i + 1; j < len; ++j) m(i, j) = kMaskValue;
  return m;
}

TransformerEncoder::TransformerEncoder(ParameterStore& store,
                                       const std::string& prefix,
                                       const TransformerDims& dims,
                                       int vocab_size, Rng& rng,
                                       Parameter* shared_embedding)
    : dims_(dims) {
  dims_.validate();
  embed_ = shared_embedding
               ? shared_embedding
               : &store.create(prefix + ".embed", vocab_size, dims.width,
                               Init::kXavier, rng);
  pos_ = &store.create(prefix + ".pos", dims.max_len, dims.width,
                       Init::kXavier, rng);
  for (int l = 0; l < dims.layers; ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    Layer layer;
    layer.ln1 = make_layer_norm_params(store, lp + ".ln1", dims.width, rng);
    layer.attn = make_attention_params(store, lp + ".attn", dims.width, rng);
    layer.ln2 = make_layer_norm_params(store, lp + ".ln2", dims.width, rng);
    layer.ffn_w1 = &store.create(lp + ".ffn.w1", dims.width,
                                 dims.width * dims.ffn_mult, Init::kXavier, rng);
    layer.ffn_b1 = &store.create(lp + ".ffn.b1", 1,
                                 dims.width * dims.ffn_mult, Init::kZero, rng);
    layer.ffn_w2 = &store.create(lp + ".ffn.w2", dims.width * dims.ffn_mult,
                                 dims.width, Init::kXavier, rng);
    layer.ffn_b2 = &store.create(lp + ".ffn.b2", 1, dims.width, Init::kZero,
                                 rng);
    layers_.push_back(layer);
  }
  final_ln_ = make_layer_norm_params(store, prefix + ".final_ln", dims.width,
                                     rng);
}

Expr TransformerEncoder::encode(Tape& t,
                                const std::vector<int>& tokens) const {
  if (tokens.empty()) throw ValidationError("encoder input is empty");
  if (static_cast<int>(tokens.size()) > dims_.max_len)
    throw RangeError("encoder input longer than max_len");
  Expr x = t.add(t.gather_rows(t.param(*embed_), tokens),
                 t.gather_rows(t.param(*pos_),
                               iota_tokens(static_cast<int>(tokens.size()))));
  for (const Layer& l : layers_) {
    Expr normed = t.layer_norm_rows(x, t.param(*l.ln1.gain), t.param(*l.ln1.bias));
    x = t.add(x, multi_head_attention(t, normed, normed, l.attn, dims_.heads));
    Expr normed2 =
        t.layer_norm_rows(x, t.param(*l.ln2.gain), t.param(*l.ln2.bias));
    Expr h = t.gelu(t.linear(normed2, *l.ffn_w1, *l.ffn_b1));
    x = t.add(x, t.linear(h, *l.ffn_w2, *l.ffn_b2));
  }
  return t.layer_norm_rows(x, t.param(*final_ln_.gain),
                           t.param(*final_ln_.bias));
}

TransformerDecoder::TransformerDecoder(ParameterStore& store,
                                       const std::string& prefix,
                                       const TransformerDims& dims,
                                       int vocab_size, Rng& rng,
                                       Parameter* shared_embedding)
    : dims_(dims) {
  dims_.validate();
  embed_ = shared_embedding
               ? shared_embedding
               : &store.create(prefix + ".embed", vocab_size, dims.width,
                               Init::kXavier, rng);
  pos_ = &store.create(prefix + ".pos", dims.max_len, dims.width,
                       Init::kXavier, rng);
  for (int l = 0; l < dims.layers; ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    Layer layer;
    layer.ln1 = make_layer_norm_params(store, lp + ".ln1", dims.width, rng);
    layer.self_attn =
        make_attention_params(store, lp + ".self_attn", dims.width, rng);
    layer.ln2 = make_layer_norm_params(store, lp + ".ln2", dims.width, rng);
    layer.cross_attn =
        make_attention_params(store, lp + ".cross_attn", dims.width, rng);
    layer.ln3 = make_layer_norm_params(store, lp + ".ln3", dims.width, rng);
    layer.ffn_w1 = &store.create(lp + ".ffn.w1", dims.width,
                                 dims.width * dims.ffn_mult, Init::kXavier, rng);
    layer.ffn_b1 = &store.create(lp + ".ffn.b1", 1,
                                 dims.width * dims.ffn_mult, Init::kZero, rng);
    layer.ffn_w2 = &store.create(lp + ".ffn.w2", dims.width * dims.ffn_mult,
                                 dims.width, Init::kXavier, rng);
    layer.ffn_b2 = &store.create(lp + ".ffn.b2", 1, dims.width, Init::kZero,
                                 rng);
    layers_.push_back(layer);
  }
  final_ln_ = make_layer_norm_params(store, prefix + ".final_ln", dims.width,
                                     rng);
}

Expr TransformerDecoder::decode(Tape& t, const std::vector<int>& tokens,
                                Expr encoder_out) const {
  if (tokens.empty()) throw ValidationError("decoder input is empty");
  if (static_cast<int>(tokens.size()) > dims_.max_len)
    throw RangeError("decoder input longer than max_len");
  const int len = static_cast<int>(tokens.size());
  const Matrix mask = causal_mask(len);
  Expr x = t.add(t.gather_rows(t.param(*embed_), tokens),
                 t.gather_rows(t.param(*pos_), iota_tokens(len)));
  for (const Layer& l : layers_) {
    Expr n1 = t.layer_norm_rows(x, t.param(*l.ln1.gain), t.param(*l.ln1.bias));
    x = t.add(x, multi_head_attention(t, n1, n1, l.self_attn, dims_.heads,
                                      &mask));
    Expr n2 = t.layer_norm_rows(x, t.param(*l.ln2.gain), t.param(*l.ln2.bias));
    x = t.add(x, multi_head_attention(t, n2, encoder_out, l.cross_attn,
                                      dims_.heads));
    Expr n3 = t.layer_norm_rows(x, t.param(*l.ln3.gain), t.param(*l.ln3.bias));
    Expr h = t.gelu(t.linear(n3, *l.ffn_w1, *l.ffn_b1));
    x = t.add(x, t.linear(h, *l.ffn_w2, *l.ffn_b2));
  }
  return t.layer_norm_rows(x, t.param(*final_ln_.gain),
                           t.param(*final_ln_.bias));
}

SelfAttentionStack::SelfAttentionStack(ParameterStore& store,
                                       const std::string& prefix, int layers,
                                       int width, int heads, Rng& rng)
    : heads_(heads) {
  for (int l = 0; l < layers; ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    Layer layer;
    layer.ln = make_layer_norm_params(store, lp + ".ln", width, rng);
    layer.attn = make_attention_params(store, lp + ".attn", width, rng);
    layers_.push_back(layer);
  }
  final_ln_ = make_layer_norm_params(store, prefix + ".final_ln", width, rng);
}

Expr SelfAttentionStack::apply(Tape& t, Expr x) const {
  for (const Layer& l : layers_) {
    Expr n = t.layer_norm_rows(x, t.param(*l.ln.gain), t.param(*l.ln.bias));
    x = t.add(x, multi_head_attention(t, n, n, l.attn, heads_));
  }
  return t.layer_norm_rows(x, t.param(*final_ln_.gain),
                           t.param(*final_ln_.bias));
}

}  // namespace argpipe::nn
