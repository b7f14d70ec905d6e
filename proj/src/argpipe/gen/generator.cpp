#include "argpipe/gen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "argpipe/common/hash.hpp"
#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::gen {

using corpus::AnnotatedExample;
using corpus::ArgumentScheme;
using corpus::KnowledgeBase;
using corpus::Stance;
using nn::Expr;
using nn::Matrix;
using nn::Tape;

namespace {

constexpr const char* kPad = "<pad>";
constexpr const char* kBos = "<bos>";
constexpr const char* kEos = "<eos>";
constexpr const char* kUnk = "<unk>";

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::string_view generator_variant_name(GeneratorVariant v) {
  switch (v) {
    case GeneratorVariant::kMono: return "mono";
    case GeneratorVariant::kDual: return "dual";
    case GeneratorVariant::kStanceOnly: return "stance";
    case GeneratorVariant::kSchemeOnly: return "scheme";
  }
  throw ValidationError("invalid GeneratorVariant");
}

GeneratorVariant generator_variant_from_name(std::string_view name) {
  if (name == "mono") return GeneratorVariant::kMono;
  if (name == "dual") return GeneratorVariant::kDual;
  if (name == "stance") return GeneratorVariant::kStanceOnly;
  if (name == "scheme") return GeneratorVariant::kSchemeOnly;
  throw ValidationError("unknown generator variant: '" + std::string(name) +
                        "'");
}

std::string EncoderInput::text() const {
  std::string out = topic;
  for (const auto& [tok, var_text] : variables) {
    out += ' ';
    out += tok;
    out += ' ';
    out += var_text;
  }
  return out;
}

EncoderInput build_encoder_input(const std::string& topic,
                                 const std::vector<std::string>& variable_texts,
                                 std::uint64_t seed) {
  if (variable_texts.empty() ||
      variable_texts.size() > static_cast<size_t>(kMaxGeneratorVariables))
    throw ValidationError("between 1 and 4 fact variables required, got " +
                          std::to_string(variable_texts.size()));
  EncoderInput input;
  input.topic = topic;
  input.permutation.resize(variable_texts.size());
  for (size_t i = 0; i < variable_texts.size(); ++i)
    input.permutation[i] = static_cast<int>(i);
  Rng rng(seed);
  std::shuffle(input.permutation.begin(), input.permutation.end(), rng);
  for (size_t slot = 0; slot < variable_texts.size(); ++slot) {
    input.variables.emplace_back(
        variable_token(static_cast<int>(slot)),
        variable_texts[static_cast<size_t>(input.permutation[slot])]);
  }
  return input;
}

std::vector<std::string> build_control_prefix(
    GeneratorVariant variant, std::optional<Stance> stance,
    std::optional<ArgumentScheme> scheme, int phase,
    const std::vector<std::string>& template_tokens) {
  if (scheme && *scheme == ArgumentScheme::kOthers)
    throw ValidationError("'others' is never a generation control code");
  const bool needs_stance = variant != GeneratorVariant::kSchemeOnly;
  const bool needs_scheme = variant != GeneratorVariant::kStanceOnly;
  if (needs_stance && !stance)
    throw ValidationError("this variant requires a stance control code");
  if (needs_scheme && !scheme)
    throw ValidationError("this variant requires a scheme control code");

  if (variant == GeneratorVariant::kDual && phase == 2) {
    std::vector<std::string> prefix = template_tokens;
    prefix.push_back(kArgumentToken);
    return prefix;
  }
  if (phase != 1)
    throw ValidationError("phase 2 prefixes exist only for the dual variant");

  std::vector<std::string> prefix;
  if (needs_stance) prefix.push_back(stance_code(*stance));
  if (needs_scheme) prefix.push_back(scheme_code(*scheme));
  prefix.push_back(variant == GeneratorVariant::kDual ? kPatternToken
                                                      : kArgumentToken);
  return prefix;
}

std::string substitute_template(const std::string& template_text,
                                const EncoderInput& input) {
  std::string out;
  size_t pos = 0;
  while (pos < template_text.size()) {
    bool replaced = false;
    if (template_text[pos] == '<') {
      for (int x = 0; x < kMaxGeneratorVariables; ++x) {
        const std::string tok = variable_token(x);
        if (template_text.compare(pos, tok.size(), tok) == 0) {
          if (static_cast<size_t>(x) >= input.variables.size())
            throw ValidationError("template references unknown placeholder " +
                                  tok);
          out += input.variables[static_cast<size_t>(x)].second;
          pos += tok.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += template_text[pos++];
  }
  return out;
}

ArgumentGenerator::ArgumentGenerator(const GeneratorConfig& cfg,
                                     nn::Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  Rng rng(cfg_.seed);
  embedding_ = &store_.create("embed", vocab_.size(), cfg_.encoder.width,
                              nn::Init::kXavier, rng);
  encoder_ = std::make_unique<nn::TransformerEncoder>(
      store_, "enc", cfg_.encoder, vocab_.size(), rng, embedding_);
  decoder_ = std::make_unique<nn::TransformerDecoder>(
      store_, "dec", cfg_.decoder, vocab_.size(), rng, embedding_);
}

nn::Vocab ArgumentGenerator::build_vocab(
    const std::vector<AnnotatedExample>& examples, const KnowledgeBase& kb) {
  std::set<std::string> words;
  for (const auto& ex : examples) {
    words.insert(ex.argument.tokens.begin(), ex.argument.tokens.end());
    const auto topic_toks = corpus::tokenize(ex.topic).tokens;
    words.insert(topic_toks.begin(), topic_toks.end());
  }
  for (const auto& v : kb.variables()) {
    const auto toks = corpus::tokenize(v.text).tokens;
    words.insert(toks.begin(), toks.end());
  }
  nn::Vocab vocab;
  vocab.add(kPad);
  vocab.add(kBos);
  vocab.add(kEos);
  vocab.add(kUnk);
  for (const auto& sp : special_tokens()) vocab.add(sp);
  for (const auto& w : words) vocab.add(w);
  vocab.set_unk(kUnk);
  return vocab;
}

std::vector<int> ArgumentGenerator::token_ids(
    const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(vocab_.id_or_unk(tok));
  return ids;
}

std::vector<int> ArgumentGenerator::encoder_ids(
    const EncoderInput& input) const {
  std::vector<int> ids = {vocab_.id(kBos)};
  for (const auto& tok : corpus::tokenize(input.topic).tokens)
    ids.push_back(vocab_.id_or_unk(tok));
  for (const auto& [var_tok, text] : input.variables) {
    ids.push_back(vocab_.id(var_tok));
    for (const auto& tok : corpus::tokenize(text).tokens)
      ids.push_back(vocab_.id_or_unk(tok));
  }
  ids.push_back(vocab_.id(kEos));
  return ids;
}

std::optional<ArgumentScheme> pick_control_scheme(const AnnotatedExample& ex) {
  if (!ex.scheme_probs.empty()) {
    std::optional<ArgumentScheme> best;
    double best_p = -1.0;
    for (ArgumentScheme s : corpus::all_schemes()) {
      if (s == ArgumentScheme::kOthers) continue;
      auto it = ex.scheme_probs.find(s);
      if (it != ex.scheme_probs.end() && it->second > best_p) {
        best = s;
        best_p = it->second;
      }
    }
    if (best) return best;
  }
  for (ArgumentScheme s : corpus::all_schemes()) {
    if (s != ArgumentScheme::kOthers && ex.schemes.count(s)) return s;
  }
  return std::nullopt;
}

ArgumentGenerator::TrainingRow ArgumentGenerator::make_training_row(
    const AnnotatedExample& ex, const KnowledgeBase& kb,
    std::uint64_t permutation_seed) const {
  if (ex.variables.empty() ||
      ex.variables.size() > static_cast<size_t>(kMaxGeneratorVariables))
    throw ValidationError("row " + ex.id + ": generator rows need 1-4 variables");

  std::vector<std::string> var_texts;
  for (const auto& id : ex.variables) var_texts.push_back(kb.get(id).text);
  EncoderInput input =
      build_encoder_input(ex.topic, var_texts, permutation_seed);

  std::optional<ArgumentScheme> scheme;
  if (cfg_.variant != GeneratorVariant::kStanceOnly) {
    scheme = pick_control_scheme(ex);
    if (!scheme)
      throw ValidationError("row " + ex.id +
                            ": no non-Others scheme available as control code");
  }

  std::vector<std::string> prefix = build_control_prefix(
      cfg_.variant, ex.stance, scheme, 1);

  std::vector<std::string> target;
  if (cfg_.variant == GeneratorVariant::kDual) {
    // template: each grounded span collapses to the <VAR_X> of its slot
    bool has_grounded = false;
    for (const auto& s : ex.spans.spans)
      if (s.grounding != corpus::kOthersGrounding) has_grounded = true;
    if (!has_grounded)
      throw ValidationError("row " + ex.id +
                            ": dual training requires span groundings to "
                            "construct the template");
    std::vector<std::string> tmpl;
    auto spans = ex.spans.spans;
    std::sort(spans.begin(), spans.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    int cursor = 0;
    for (const auto& span : spans) {
      for (int i = cursor; i < span.start; ++i)
        tmpl.push_back(ex.argument.tokens[static_cast<size_t>(i)]);
      if (span.grounding == corpus::kOthersGrounding) {
        for (int i = span.start; i < span.end; ++i)
          tmpl.push_back(ex.argument.tokens[static_cast<size_t>(i)]);
      } else {
        const auto it = std::find(ex.variables.begin(), ex.variables.end(),
                                  span.grounding);
        const int original = static_cast<int>(it - ex.variables.begin());
        const auto slot_it = std::find(input.permutation.begin(),
                                       input.permutation.end(), original);
        tmpl.push_back(variable_token(
            static_cast<int>(slot_it - input.permutation.begin())));
      }
      cursor = span.end;
    }
    for (int i = cursor; i < ex.argument.token_count(); ++i)
      tmpl.push_back(ex.argument.tokens[static_cast<size_t>(i)]);

    target = tmpl;
    target.push_back(kArgumentToken);
    target.insert(target.end(), ex.argument.tokens.begin(),
                  ex.argument.tokens.end());
  } else {
    target = ex.argument.tokens;
  }

  TrainingRow row;
  row.id = ex.id;
  row.encoder_ids = encoder_ids(input);
  row.decoder_ids.push_back(vocab_.id(kBos));
  for (const auto& tok : prefix) row.decoder_ids.push_back(vocab_.id(tok));
  row.prefix_len = static_cast<int>(prefix.size());
  for (const auto& tok : target)
    row.decoder_ids.push_back(vocab_.id_or_unk(tok));
  row.decoder_ids.push_back(vocab_.id(kEos));
  return row;
}

double ArgumentGenerator::row_loss(const TrainingRow& row, double loss_scale,
                                   bool backward) {
  Tape t;
  Expr enc = encoder_->encode(t, row.encoder_ids);
  std::vector<int> inputs(row.decoder_ids.begin(), row.decoder_ids.end() - 1);
  std::vector<int> labels(row.decoder_ids.begin() + 1, row.decoder_ids.end());
  for (int i = 0; i < row.prefix_len && i < static_cast<int>(labels.size());
       ++i)
    labels[static_cast<size_t>(i)] = -1;
  Expr dec = decoder_->decode(t, inputs, enc);
  Expr logits = t.matmul(dec, t.transpose(t.param(*embedding_)));
  Expr loss = t.scale(t.cross_entropy(logits, std::move(labels)), loss_scale);
  const double value = t.value(loss)(0, 0) / loss_scale;
  if (backward) t.backward(loss);
  return value;
}

nn::TrainLog ArgumentGenerator::train(const std::vector<TrainingRow>& train_rows,
                                      const std::vector<TrainingRow>& val_rows) {
  if (train_rows.empty()) throw ValidationError("training corpus is empty");
  const auto& eval_rows = val_rows.empty() ? train_rows : val_rows;
  return nn::train_loop(
      store_, cfg_.train, static_cast<int>(train_rows.size()),
      [&](int i, double scale) {
        return row_loss(train_rows[static_cast<size_t>(i)], scale, true);
      },
      [&]() {
        double sum = 0.0;
        for (const auto& row : eval_rows) sum += row_loss(row, 1.0, false);
        return sum / static_cast<double>(eval_rows.size());
      });
}

nn::Matrix ArgumentGenerator::run_encoder(const std::vector<int>& ids) const {
  Tape t;
  return t.value(encoder_->encode(t, ids));
}

std::vector<double> ArgumentGenerator::next_token_log_probs(
    const std::vector<int>& decoder_ids, const Matrix& encoder_states) const {
  Tape t;
  Expr dec = decoder_->decode(t, decoder_ids, t.input(encoder_states));
  Expr last = t.slice_rows(dec, static_cast<int>(decoder_ids.size()) - 1,
                           static_cast<int>(decoder_ids.size()));
  Expr logits = t.matmul(last, t.transpose(t.param(*embedding_)));
  const Matrix& lv = t.value(logits);
  double mx = lv(0, 0);
  for (int j = 1; j < lv.cols(); ++j) mx = std::max(mx, lv(0, j));
  double sum = 0.0;
  for (int j = 0; j < lv.cols(); ++j) sum += std::exp(lv(0, j) - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(static_cast<size_t>(lv.cols()));
  for (int j = 0; j < lv.cols(); ++j)
    out[static_cast<size_t>(j)] = lv(0, j) - lse;
  return out;
}

GenerationRecord ArgumentGenerator::generate(
    const EncoderInput& input, std::optional<Stance> stance,
    std::optional<ArgumentScheme> scheme) const {
  GenerationRecord rec;
  rec.input = input;
  rec.variant = cfg_.variant;
  rec.stance = stance;
  rec.scheme = scheme;
  rec.control_codes = build_control_prefix(cfg_.variant, stance, scheme, 1);

  const Matrix enc_states = run_encoder(encoder_ids(input));
  const BeamConfig beam_cfg{cfg_.beam_width, cfg_.max_new_tokens,
                            cfg_.block_repeated_trigrams};
  const int eos = vocab_.id(kEos);

  std::vector<int> context = {vocab_.id(kBos)};
  for (const auto& tok : rec.control_codes) context.push_back(vocab_.id(tok));

  auto step_fn = [&](const std::vector<int>& generated) {
    std::vector<int> ids = context;
    ids.insert(ids.end(), generated.begin(), generated.end());
    return next_token_log_probs(ids, enc_states);
  };

  if (cfg_.variant == GeneratorVariant::kDual) {
    const int argument_tok = vocab_.id(kArgumentToken);
    BeamResult phase1 = beam_search(step_fn, {argument_tok, eos}, beam_cfg);
    if (phase1.tokens.empty())
      throw Error("dual decoding produced an empty template");
    for (int id : phase1.tokens) rec.template_tokens.push_back(vocab_.token(id));
    rec.template_text = join_tokens(rec.template_tokens);
    rec.phase2_context = rec.template_tokens;
    rec.phase2_context.push_back(kArgumentToken);

    for (const auto& tok : rec.phase2_context) context.push_back(vocab_.id(tok));
    BeamResult phase2 = beam_search(step_fn, {eos}, beam_cfg);
    for (int id : phase2.tokens) rec.argument_tokens.push_back(vocab_.token(id));
    rec.beam_score = phase2.score;
    rec.truncated = phase2.truncated || phase1.truncated;

    std::set<int> used, supplied;
    for (const auto& tok : rec.template_tokens) {
      if (auto x = parse_variable_token(tok)) used.insert(*x);
    }
    for (size_t i = 0; i < input.variables.size(); ++i)
      supplied.insert(static_cast<int>(i));
    for (int x : used) {
      if (!supplied.count(x)) {
        rec.flags.push_back("template-unknown-placeholder:" +
                            variable_token(x));
      }
    }
    for (int x : supplied) {
      if (!used.count(x))
        rec.flags.push_back("template-omits-variable:" + variable_token(x));
    }
  } else {
    BeamResult result = beam_search(step_fn, {eos}, beam_cfg);
    for (int id : result.tokens) rec.argument_tokens.push_back(vocab_.token(id));
    rec.beam_score = result.score;
    rec.truncated = result.truncated;
  }
  rec.argument_text = join_tokens(rec.argument_tokens);
  return rec;
}

void ArgumentGenerator::save(const std::string& path) const {
  nn::OrderedJson cfg;
  cfg["variant"] = std::string(generator_variant_name(cfg_.variant));
  cfg["encoder"] = {{"layers", cfg_.encoder.layers},
                    {"width", cfg_.encoder.width},
                    {"heads", cfg_.encoder.heads},
                    {"ffn_mult", cfg_.encoder.ffn_mult},
                    {"max_len", cfg_.encoder.max_len}};
  cfg["decoder"] = {{"layers", cfg_.decoder.layers},
                    {"width", cfg_.decoder.width},
                    {"heads", cfg_.decoder.heads},
                    {"ffn_mult", cfg_.decoder.ffn_mult},
                    {"max_len", cfg_.decoder.max_len}};
  cfg["beam_width"] = cfg_.beam_width;
  cfg["max_new_tokens"] = cfg_.max_new_tokens;
  cfg["block_repeated_trigrams"] = cfg_.block_repeated_trigrams;
  cfg["seed"] = cfg_.seed;
  cfg["special_tokens"] = special_tokens();
  cfg["vocab"] = vocab_.items();
  nn::save_checkpoint(path, "argument-generator", cfg, store_);
}

std::unique_ptr<ArgumentGenerator> ArgumentGenerator::load(
    const std::string& path) {
  auto header = nn::read_checkpoint_header(path);
  if (header.kind != "argument-generator")
    throw ValidationError("checkpoint kind mismatch: " + header.kind);
  GeneratorConfig cfg;
  cfg.variant = generator_variant_from_name(
      header.config.at("variant").get<std::string>());
  auto read_dims = [&](const char* key, nn::TransformerDims& d) {
    const auto& j = header.config.at(key);
    d.layers = j.at("layers").get<int>();
    d.width = j.at("width").get<int>();
    d.heads = j.at("heads").get<int>();
    d.ffn_mult = j.at("ffn_mult").get<int>();
    d.max_len = j.at("max_len").get<int>();
  };
  read_dims("encoder", cfg.encoder);
  read_dims("decoder", cfg.decoder);
  cfg.beam_width = header.config.at("beam_width").get<int>();
  cfg.max_new_tokens = header.config.at("max_new_tokens").get<int>();
  cfg.block_repeated_trigrams =
      header.config.at("block_repeated_trigrams").get<bool>();
  cfg.seed = header.config.at("seed").get<std::uint64_t>();
  nn::Vocab vocab;
  for (const auto& tok : header.config.at("vocab"))
    vocab.add(tok.get<std::string>());
  vocab.set_unk(kUnk);
  auto model = std::make_unique<ArgumentGenerator>(cfg, std::move(vocab));
  nn::load_checkpoint_weights(path, model->store_);
  return model;
}

}  // namespace argpipe::gen
