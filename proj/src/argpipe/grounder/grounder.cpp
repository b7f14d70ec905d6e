#include "argpipe/grounder/grounder.hpp"

#include <algorithm>
#include <set>

#include "argpipe/corpus/bio.hpp"
#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::grounder {

using corpus::AnnotatedExample;
using corpus::BioTag;
using corpus::FactVariable;
using corpus::KnowledgeBase;
using corpus::SpanLabeling;
using corpus::TokenizedText;
using nn::Expr;
using nn::Matrix;
using nn::Tape;
using argpipe::Rng;

namespace {

constexpr const char* kUnk = "<unk>";
constexpr const char* kBos = "<bos>";
constexpr const char* kVarBos = "<vbos>";
constexpr int kMaxVariables = 5;

const char* tag_suffix(int k) {
  switch (k) {
    case 0: return "b";
    case 1: return "i";
    default: return "o";
  }
}

void check_variable_count(size_t n) {
  if (n < 1 || n > kMaxVariables)
    throw ValidationError("between 1 and 5 candidate variables required, got " +
                          std::to_string(n));
}

}  // namespace

SpanGrounder::SpanGrounder(const GrounderConfig& cfg, nn::Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  if (cfg_.reduced_dim < 1) throw ConfigError("reduced_dim must be positive");
  Rng rng(cfg_.seed);
  encoder_ = std::make_unique<nn::TransformerEncoder>(
      store_, "enc", cfg_.encoder, vocab_.size(), rng);
  const int d = cfg_.encoder.width;
  const int r = cfg_.reduced_dim;
  token_proj_w_ = &store_.create("token_proj.w", d, r, nn::Init::kXavier, rng);
  token_proj_b_ = &store_.create("token_proj.b", 1, r, nn::Init::kZero, rng);
  var_reduce_w_ = &store_.create("var_reduce.w", d, r, nn::Init::kXavier, rng);
  var_reduce_b_ = &store_.create("var_reduce.b", 1, r, nn::Init::kZero, rng);
  others_vec_ = &store_.create("others_vec", 1, d, nn::Init::kXavier, rng);
  for (int k = 0; k < 3; ++k) {
    const std::string p = std::string("biaffine.") + tag_suffix(k);
    tags_[static_cast<size_t>(k)] = TagParams{
        &store_.create(p + ".w", r, r, nn::Init::kXavier, rng),
        &store_.create(p + ".var_lin", r, 1, nn::Init::kXavier, rng),
        &store_.create(p + ".token_lin", r, 1, nn::Init::kXavier, rng),
        &store_.create(p + ".bias", 1, 1, nn::Init::kZero, rng),
    };
  }
}

nn::Vocab SpanGrounder::build_vocab(
    const std::vector<AnnotatedExample>& examples, const KnowledgeBase& kb) {
  std::set<std::string> words;
  for (const auto& ex : examples)
    words.insert(ex.argument.tokens.begin(), ex.argument.tokens.end());
  for (const auto& v : kb.variables()) {
    const auto toks = corpus::tokenize(v.text).tokens;
    words.insert(toks.begin(), toks.end());
  }
  nn::Vocab vocab;
  vocab.add(kUnk);
  vocab.add(kBos);
  vocab.add(kVarBos);
  for (const auto& w : words) vocab.add(w);
  vocab.set_unk(kUnk);
  return vocab;
}

std::vector<int> SpanGrounder::argument_token_ids(
    const TokenizedText& t) const {
  if (t.tokens.empty()) throw ValidationError("argument text is empty");
  std::vector<int> ids;
  ids.reserve(t.tokens.size() + 1);
  ids.push_back(vocab_.id(kBos));
  for (const auto& tok : t.tokens) ids.push_back(vocab_.id_or_unk(tok));
  return ids;
}

std::vector<int> SpanGrounder::variable_token_ids(
    const FactVariable& v) const {
  std::vector<int> ids;
  ids.push_back(vocab_.id(kVarBos));
  for (const auto& tok : corpus::tokenize(v.text).tokens)
    ids.push_back(vocab_.id_or_unk(tok));
  return ids;
}

std::pair<Matrix, std::vector<Matrix>> SpanGrounder::encode_pair(
    const TokenizedText& argument,
    const std::vector<const FactVariable*>& variables) const {
  check_variable_count(variables.size());
  Tape t;
  Expr arg = encoder_->encode(t, argument_token_ids(argument));
  Expr tokens = t.slice_rows(arg, 1, t.value(arg).rows());
  std::vector<Matrix> var_bos;
  for (const FactVariable* v : variables) {
    Expr enc = encoder_->encode(t, variable_token_ids(*v));
    var_bos.push_back(t.value(t.slice_rows(enc, 0, 1)));
  }
  return {t.value(tokens), std::move(var_bos)};
}

nn::Matrix SpanGrounder::reduce_variable(const Matrix& bos_vector) const {
  if (bos_vector.rows() != 1 || bos_vector.cols() != cfg_.encoder.width)
    throw ShapeError("reduce_variable expects a 1 x width vector");
  Tape t;
  Expr out = t.linear(t.input(bos_vector), *var_reduce_w_, *var_reduce_b_);
  return t.value(out);
}

std::array<Expr, 3> SpanGrounder::biaffine_exprs(
    Tape& t, Expr reduced_tokens, Expr reduced_vars_with_others) const {
  std::array<Expr, 3> out;
  for (int k = 0; k < 3; ++k) {
    const TagParams& p = tags_[static_cast<size_t>(k)];
    // u_v^T W_k u_t for every (variable, token) pair
    Expr bilinear = t.matmul(t.matmul(reduced_vars_with_others,
                                      t.param(*p.bilinear)),
                             t.transpose(reduced_tokens));
    Expr var_part = t.matmul(reduced_vars_with_others, t.param(*p.var_lin));
    Expr token_part =
        t.transpose(t.matmul(reduced_tokens, t.param(*p.token_lin)));
    Expr scores = t.add_broadcast(bilinear, var_part);
    scores = t.add_broadcast(scores, token_part);
    out[static_cast<size_t>(k)] = t.add_broadcast(scores, t.param(*p.bias));
  }
  return out;
}

GroundingPrediction SpanGrounder::biaffine_score(
    const Matrix& reduced_tokens, const Matrix& reduced_vars) const {
  if (reduced_tokens.cols() != cfg_.reduced_dim ||
      reduced_vars.cols() != cfg_.reduced_dim)
    throw ShapeError("biaffine_score expects reduced_dim-wide inputs");
  Tape t;
  Expr others = t.linear(t.param(*others_vec_), *var_reduce_w_, *var_reduce_b_);
  Expr vars = t.concat_rows({t.input(reduced_vars), others});
  auto logits = biaffine_exprs(t, t.input(reduced_tokens), vars);
  GroundingPrediction pred;
  pred.channels = reduced_vars.rows() + 1;
  pred.tokens = reduced_tokens.rows();
  for (int k = 0; k < 3; ++k)
    pred.tag_logits[static_cast<size_t>(k)] =
        t.value(logits[static_cast<size_t>(k)]);
  return pred;
}

SpanGrounder::Forward SpanGrounder::forward(
    Tape& t, const TokenizedText& argument,
    const std::vector<const FactVariable*>& variables) const {
  check_variable_count(variables.size());
  Expr arg = encoder_->encode(t, argument_token_ids(argument));
  Expr tokens = t.slice_rows(arg, 1, t.value(arg).rows());
  Forward f;
  f.reduced_tokens = t.linear(tokens, *token_proj_w_, *token_proj_b_);
  std::vector<Expr> reduced;
  for (const FactVariable* v : variables) {
    Expr enc = encoder_->encode(t, variable_token_ids(*v));
    Expr bos = t.slice_rows(enc, 0, 1);
    reduced.push_back(t.linear(bos, *var_reduce_w_, *var_reduce_b_));
  }
  reduced.push_back(
      t.linear(t.param(*others_vec_), *var_reduce_w_, *var_reduce_b_));
  f.reduced_vars = t.concat_rows(reduced);
  f.tag_logits = biaffine_exprs(t, f.reduced_tokens, f.reduced_vars);
  return f;
}

GroundingPrediction SpanGrounder::ground(
    const TokenizedText& argument,
    const std::vector<const FactVariable*>& variables) const {
  Tape t;
  Forward f = forward(t, argument, variables);
  GroundingPrediction pred;
  pred.channels = static_cast<int>(variables.size()) + 1;
  pred.tokens = argument.token_count();
  for (int k = 0; k < 3; ++k)
    pred.tag_logits[static_cast<size_t>(k)] =
        t.value(f.tag_logits[static_cast<size_t>(k)]);
  for (const FactVariable* v : variables) pred.channel_ids.push_back(v->id);
  pred.channel_ids.emplace_back(corpus::kOthersGrounding);

  // Per-channel argmax tags, then cross-channel conflict resolution: a token
  // claimed by several channels goes to the one with the highest non-O logit.
  std::vector<std::vector<BioTag>> tags(
      static_cast<size_t>(pred.channels),
      std::vector<BioTag>(static_cast<size_t>(pred.tokens), BioTag::kO));
  for (int c = 0; c < pred.channels; ++c) {
    for (int tok = 0; tok < pred.tokens; ++tok) {
      int best = 2;
      double best_v = pred.logit(c, tok, 2);
      for (int k = 0; k < 2; ++k) {
        if (pred.logit(c, tok, k) > best_v) {
          best_v = pred.logit(c, tok, k);
          best = k;
        }
      }
      tags[static_cast<size_t>(c)][static_cast<size_t>(tok)] =
          best == 0 ? BioTag::kB : (best == 1 ? BioTag::kI : BioTag::kO);
    }
  }
  for (int tok = 0; tok < pred.tokens; ++tok) {
    int winner = -1;
    double winner_v = 0.0;
    for (int c = 0; c < pred.channels; ++c) {
      if (tags[static_cast<size_t>(c)][static_cast<size_t>(tok)] == BioTag::kO)
        continue;
      const double v = std::max(pred.logit(c, tok, 0), pred.logit(c, tok, 1));
      if (winner < 0 || v > winner_v) {
        winner = c;
        winner_v = v;
      }
    }
    if (winner < 0) continue;
    for (int c = 0; c < pred.channels; ++c) {
      if (c != winner)
        tags[static_cast<size_t>(c)][static_cast<size_t>(tok)] = BioTag::kO;
    }
  }
  pred.decoded = corpus::decode_bio_channels(tags, pred.channel_ids);
  pred.decoded.validate(pred.tokens);
  return pred;
}

double SpanGrounder::example_loss(const AnnotatedExample& ex,
                                  const KnowledgeBase& kb, double loss_scale,
                                  bool backward) {
  std::vector<const FactVariable*> vars;
  for (const auto& id : ex.variables) vars.push_back(&kb.get(id));
  check_variable_count(vars.size());
  for (const auto& s : ex.spans.spans) {
    if (s.grounding != corpus::kOthersGrounding &&
        std::find(ex.variables.begin(), ex.variables.end(), s.grounding) ==
            ex.variables.end())
      throw ValidationError("example " + ex.id + ": span grounded to '" +
                            s.grounding +
                            "' which is not among the example variables");
  }

  Tape t;
  Forward f = forward(t, ex.argument, vars);
  const int T = ex.argument.token_count();
  const int channels = static_cast<int>(vars.size()) + 1;

  std::vector<int> targets;
  targets.reserve(static_cast<size_t>(channels) * T);
  for (int c = 0; c < channels; ++c) {
    const std::string channel_id =
        c < static_cast<int>(vars.size())
            ? vars[static_cast<size_t>(c)]->id
            : std::string(corpus::kOthersGrounding);
    const auto bio = corpus::encode_bio(ex.spans, T, channel_id);
    for (BioTag tag : bio)
      targets.push_back(tag == BioTag::kB ? 0 : (tag == BioTag::kI ? 1 : 2));
  }

  std::vector<Expr> cols;
  for (int k = 0; k < 3; ++k)
    cols.push_back(
        t.reshape(f.tag_logits[static_cast<size_t>(k)], channels * T, 1));
  Expr logits = t.concat_cols(cols);
  Expr loss = t.scale(t.cross_entropy(logits, std::move(targets)), loss_scale);
  const double value = t.value(loss)(0, 0) / loss_scale;
  if (backward) t.backward(loss);
  return value;
}

nn::TrainLog SpanGrounder::train(const std::vector<AnnotatedExample>& train_set,
                                 const std::vector<AnnotatedExample>& val_set,
                                 const KnowledgeBase& kb) {
  if (train_set.empty()) throw ValidationError("training corpus is empty");
  const auto& eval_set = val_set.empty() ? train_set : val_set;
  return nn::train_loop(
      store_, cfg_.train, static_cast<int>(train_set.size()),
      [&](int i, double scale) {
        return example_loss(train_set[static_cast<size_t>(i)], kb, scale, true);
      },
      [&]() {
        double sum = 0.0;
        for (const auto& ex : eval_set) sum += example_loss(ex, kb, 1.0, false);
        return sum / static_cast<double>(eval_set.size());
      });
}

void SpanGrounder::save(const std::string& path) const {
  nn::OrderedJson cfg;
  cfg["encoder"] = {{"layers", cfg_.encoder.layers},
                    {"width", cfg_.encoder.width},
                    {"heads", cfg_.encoder.heads},
                    {"ffn_mult", cfg_.encoder.ffn_mult},
                    {"max_len", cfg_.encoder.max_len}};
  cfg["reduced_dim"] = cfg_.reduced_dim;
  cfg["seed"] = cfg_.seed;
  cfg["vocab"] = vocab_.items();
  nn::save_checkpoint(path, "span-grounder", cfg, store_);
}

std::unique_ptr<SpanGrounder> SpanGrounder::load(const std::string& path) {
  auto header = nn::read_checkpoint_header(path);
  if (header.kind != "span-grounder")
    throw ValidationError("checkpoint kind mismatch: " + header.kind);
  GrounderConfig cfg;
  const auto& enc = header.config.at("encoder");
  cfg.encoder.layers = enc.at("layers").get<int>();
  cfg.encoder.width = enc.at("width").get<int>();
  cfg.encoder.heads = enc.at("heads").get<int>();
  cfg.encoder.ffn_mult = enc.at("ffn_mult").get<int>();
  cfg.encoder.max_len = enc.at("max_len").get<int>();
  cfg.reduced_dim = header.config.at("reduced_dim").get<int>();
  cfg.seed = header.config.at("seed").get<std::uint64_t>();
  nn::Vocab vocab;
  for (const auto& tok : header.config.at("vocab"))
    vocab.add(tok.get<std::string>());
  vocab.set_unk(kUnk);
  auto model = std::make_unique<SpanGrounder>(cfg, std::move(vocab));
  nn::load_checkpoint_weights(path, model->store_);
  return model;
}

}  // namespace argpipe::grounder
