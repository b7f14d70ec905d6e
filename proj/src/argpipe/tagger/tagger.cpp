#include "argpipe/tagger/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "argpipe/corpus/bio.hpp"

namespace argpipe::tagger {

using corpus::AnnotatedExample;
using corpus::ArgumentScheme;
using corpus::BioTag;
using corpus::SpanLabeling;
using corpus::TokenizedText;
using nn::Expr;
using nn::Matrix;
using nn::Tape;

namespace {

constexpr const char* kUnk = "<unk>";
constexpr const char* kBos = "<bos>";

}  // namespace

std::string_view variant_name(TaggerVariant v) {
  return v == TaggerVariant::kParallel ? "parallel" : "pipelined";
}

TaggerVariant variant_from_name(std::string_view name) {
  if (name == "parallel") return TaggerVariant::kParallel;
  if (name == "pipelined") return TaggerVariant::kPipelined;
  throw ValidationError("unknown tagger variant: '" + std::string(name) + "'");
}

void SchemeTaggerConfig::validate() const {
  encoder.validate();
  if (variant == TaggerVariant::kPipelined &&
      (pipeline_attention_layers != 2 || pipeline_attention_heads != 4))
    throw ConfigError(
        "pipelined variant uses exactly 2 self-attention layers with 4 heads");
  if (scheme_decision_threshold < 0.0 || scheme_decision_threshold > 1.0)
    throw ConfigError("scheme_decision_threshold must lie in [0, 1]");
}

std::vector<bool> selective_mask(int token_count, const SpanLabeling& spans) {
  spans.validate(token_count);
  std::vector<bool> participates(static_cast<size_t>(token_count), true);
  for (const auto& s : spans.spans)
    for (int p = s.start; p < s.end; ++p)
      participates[static_cast<size_t>(p)] = false;
  return participates;
}

SchemeTagger::SchemeTagger(const SchemeTaggerConfig& cfg, nn::Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  encoder_ = std::make_unique<nn::TransformerEncoder>(
      store_, "enc", cfg_.encoder, vocab_.size(), rng);
  const int d = cfg_.encoder.width;
  span_w_ = &store_.create("span_head.w", d, 3, nn::Init::kXavier, rng);
  span_b_ = &store_.create("span_head.b", 1, 3, nn::Init::kZero, rng);
  scheme_w_ = &store_.create("scheme_head.w", d, corpus::kNumSchemes,
                             nn::Init::kXavier, rng);
  scheme_b_ = &store_.create("scheme_head.b", 1, corpus::kNumSchemes,
                             nn::Init::kZero, rng);
  // The pipelined attention stack is always constructed so checkpoints keep
  // one schema across variants; the parallel forward simply never uses it.
  pipeline_stack_ = std::make_unique<nn::SelfAttentionStack>(
      store_, "pipeline", cfg_.pipeline_attention_layers, d,
      cfg_.pipeline_attention_heads, rng);
}

nn::Vocab SchemeTagger::build_vocab(
    const std::vector<AnnotatedExample>& examples) {
  std::set<std::string> words;
  for (const auto& ex : examples)
    words.insert(ex.argument.tokens.begin(), ex.argument.tokens.end());
  nn::Vocab vocab;
  vocab.add(kUnk);
  vocab.add(kBos);
  for (const auto& w : words) vocab.add(w);
  vocab.set_unk(kUnk);
  return vocab;
}

std::vector<int> SchemeTagger::input_token_ids(const TokenizedText& t) const {
  if (t.tokens.empty()) throw ValidationError("argument text is empty");
  std::vector<int> ids;
  ids.reserve(t.tokens.size() + 1);
  ids.push_back(vocab_.id(kBos));
  for (const auto& tok : t.tokens) ids.push_back(vocab_.id_or_unk(tok));
  return ids;
}

Expr SchemeTagger::encode(Tape& t, const TokenizedText& argument) const {
  return encoder_->encode(t, input_token_ids(argument));
}

Expr SchemeTagger::span_logits(Tape& t, Expr states) const {
  Expr tokens = t.slice_rows(states, 1, t.value(states).rows());
  return t.linear(tokens, *span_w_, *span_b_);
}

Expr SchemeTagger::parallel_logits(Tape& t, Expr states) const {
  Expr tokens = t.slice_rows(states, 1, t.value(states).rows());
  Expr pooled = t.mean_rows(tokens);
  return t.linear(pooled, *scheme_w_, *scheme_b_);
}

Expr SchemeTagger::pipelined_logits(Tape& t, Expr states,
                                    const SpanLabeling& spans) const {
  const int tokens = t.value(states).rows() - 1;
  const auto participates = selective_mask(tokens, spans);
  std::vector<int> rows = {0};  // BOS always participates
  for (int i = 0; i < tokens; ++i)
    if (participates[static_cast<size_t>(i)]) rows.push_back(i + 1);
  Expr gathered = t.gather_rows(states, rows);
  Expr attended = pipeline_stack_->apply(t, gathered);
  Expr bos = t.slice_rows(attended, 0, 1);
  return t.linear(bos, *scheme_w_, *scheme_b_);
}

corpus::SpanLabeling SchemeTagger::decode_spans(const Matrix& logits) const {
  std::vector<BioTag> tags(static_cast<size_t>(logits.rows()), BioTag::kO);
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 2;
    double best_v = logits(i, 2);
    for (int k = 0; k < 2; ++k) {
      if (logits(i, k) > best_v) {
        best_v = logits(i, k);
        best = k;
      }
    }
    tags[static_cast<size_t>(i)] =
        best == 0 ? BioTag::kB : (best == 1 ? BioTag::kI : BioTag::kO);
  }
  return corpus::decode_bio(tags);
}

SpanLabeling SchemeTagger::predict_spans(const TokenizedText& argument) const {
  Tape t;
  Expr logits = span_logits(t, encode(t, argument));
  SpanLabeling out = decode_spans(t.value(logits));
  out.validate(argument.token_count());
  return out;
}

SchemePrediction SchemeTagger::prediction_from(const Matrix& scheme_logits,
                                               SpanLabeling spans) const {
  SchemePrediction pred;
  const auto& schemes = corpus::all_schemes();
  for (int s = 0; s < corpus::kNumSchemes; ++s) {
    const double p = 1.0 / (1.0 + std::exp(-scheme_logits(0, s)));
    pred.probabilities[schemes[static_cast<size_t>(s)]] = p;
    if (p >= cfg_.scheme_decision_threshold)
      pred.labels.insert(schemes[static_cast<size_t>(s)]);
  }
  pred.spans = std::move(spans);
  return pred;
}

SchemePrediction SchemeTagger::predict_schemes_parallel(
    const TokenizedText& argument) const {
  Tape t;
  Expr states = encode(t, argument);
  Matrix logits = t.value(parallel_logits(t, states));
  return prediction_from(logits, decode_spans(t.value(span_logits(t, states))));
}

SchemePrediction SchemeTagger::predict_schemes_pipelined(
    const TokenizedText& argument) const {
  Tape t;
  Expr states = encode(t, argument);
  SpanLabeling spans = decode_spans(t.value(span_logits(t, states)));
  Matrix logits = t.value(pipelined_logits(t, states, spans));
  return prediction_from(logits, std::move(spans));
}

SchemePrediction SchemeTagger::predict(const TokenizedText& argument) const {
  return cfg_.variant == TaggerVariant::kParallel
             ? predict_schemes_parallel(argument)
             : predict_schemes_pipelined(argument);
}

Matrix SchemeTagger::pipelined_logits_from_states(
    const Matrix& encoder_states, const SpanLabeling& spans) const {
  Tape t;
  return t.value(pipelined_logits(t, t.input(encoder_states), spans));
}

double SchemeTagger::example_loss(const AnnotatedExample& ex,
                                  double loss_scale, bool backward) {
  Tape t;
  Expr states = encode(t, ex.argument);
  const int T = ex.argument.token_count();

  const auto bio = corpus::encode_bio(ex.spans, T, std::nullopt);
  std::vector<int> targets;
  targets.reserve(bio.size());
  for (BioTag tag : bio)
    targets.push_back(tag == BioTag::kB ? 0 : (tag == BioTag::kI ? 1 : 2));
  Expr span_loss = t.cross_entropy(span_logits(t, states), std::move(targets));

  Matrix labels(1, corpus::kNumSchemes);
  const auto& schemes = corpus::all_schemes();
  for (int s = 0; s < corpus::kNumSchemes; ++s)
    labels(0, s) = ex.schemes.count(schemes[static_cast<size_t>(s)]) ? 1.0 : 0.0;
  // Teacher-forced gold spans drive the mask during pipelined training.
  Expr scheme_logits = cfg_.variant == TaggerVariant::kParallel
                           ? parallel_logits(t, states)
                           : pipelined_logits(t, states, ex.spans);
  Expr scheme_loss = t.bce_with_logits(scheme_logits, std::move(labels));

  Expr loss = t.scale(t.add(span_loss, scheme_loss), loss_scale);
  const double value = t.value(loss)(0, 0) / loss_scale;
  if (backward) t.backward(loss);
  return value;
}

nn::TrainLog SchemeTagger::train(const std::vector<AnnotatedExample>& train_set,
                                 const std::vector<AnnotatedExample>& val_set) {
  if (train_set.empty()) throw ValidationError("training corpus is empty");
  const auto& eval_set = val_set.empty() ? train_set : val_set;
  return nn::train_loop(
      store_, cfg_.train, static_cast<int>(train_set.size()),
      [&](int i, double scale) {
        return example_loss(train_set[static_cast<size_t>(i)], scale, true);
      },
      [&]() {
        double sum = 0.0;
        for (const auto& ex : eval_set) sum += example_loss(ex, 1.0, false);
        return sum / static_cast<double>(eval_set.size());
      });
}

void SchemeTagger::save(const std::string& path) const {
  nn::OrderedJson cfg;
  cfg["variant"] = std::string(variant_name(cfg_.variant));
  cfg["encoder"] = {{"layers", cfg_.encoder.layers},
                    {"width", cfg_.encoder.width},
                    {"heads", cfg_.encoder.heads},
                    {"ffn_mult", cfg_.encoder.ffn_mult},
                    {"max_len", cfg_.encoder.max_len}};
  cfg["pipeline_attention_layers"] = cfg_.pipeline_attention_layers;
  cfg["pipeline_attention_heads"] = cfg_.pipeline_attention_heads;
  cfg["scheme_decision_threshold"] = cfg_.scheme_decision_threshold;
  cfg["seed"] = cfg_.seed;
  cfg["vocab"] = vocab_.items();
  nn::save_checkpoint(path, "scheme-tagger", cfg, store_);
}

std::unique_ptr<SchemeTagger> SchemeTagger::load(const std::string& path) {
  auto header = nn::read_checkpoint_header(path);
  if (header.kind != "scheme-tagger")
    throw ValidationError("checkpoint kind mismatch: " + header.kind);
  SchemeTaggerConfig cfg;
  cfg.variant = variant_from_name(header.config.at("variant").get<std::string>());
  const auto& enc = header.config.at("encoder");
  cfg.encoder.layers = enc.at("layers").get<int>();
  cfg.encoder.width = enc.at("width").get<int>();
  cfg.encoder.heads = enc.at("heads").get<int>();
  cfg.encoder.ffn_mult = enc.at("ffn_mult").get<int>();
  cfg.encoder.max_len = enc.at("max_len").get<int>();
  cfg.pipeline_attention_layers =
      header.config.at("pipeline_attention_layers").get<int>();
  cfg.pipeline_attention_heads =
      header.config.at("pipeline_attention_heads").get<int>();
  cfg.scheme_decision_threshold =
      header.config.at("scheme_decision_threshold").get<double>();
  cfg.seed = header.config.at("seed").get<std::uint64_t>();
  nn::Vocab vocab;
  for (const auto& tok : header.config.at("vocab"))
    vocab.add(tok.get<std::string>());
  vocab.set_unk(kUnk);
  auto model = std::make_unique<SchemeTagger>(cfg, std::move(vocab));
  nn::load_checkpoint_weights(path, model->store_);
  return model;
}

SchemeF1Report scheme_f1(
    const std::vector<std::set<ArgumentScheme>>& preds,
    const std::vector<std::set<ArgumentScheme>>& golds) {
  if (preds.size() != golds.size())
    throw ValidationError("scheme_f1: prediction/gold list length mismatch");
  SchemeF1Report report;
  long micro_tp = 0, micro_fp = 0, micro_fn = 0;
  for (ArgumentScheme s : corpus::all_schemes()) {
    long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i].count(s) > 0;
      const bool g = golds[i].count(s) > 0;
      if (p && g) ++tp;
      if (p && !g) ++fp;
      if (!p && g) ++fn;
    }
    micro_tp += tp;
    micro_fp += fp;
    micro_fn += fn;
    const double denom = 2.0 * tp + fp + fn;
    report.per_scheme[s] = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  const double denom = 2.0 * micro_tp + micro_fp + micro_fn;
  report.overall = denom > 0.0 ? 2.0 * micro_tp / denom : 0.0;
  return report;
}

}  // namespace argpipe::tagger
