#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "argpipe/corpus/tokenize.hpp"
#include "argpipe/grounder/grounder.hpp"
#include "argpipe/grounder/span_metrics.hpp"
#include "argpipe/pipeline/fixture.hpp"
#include "support/gradcheck.hpp"

using namespace argpipe;
using namespace argpipe::grounder;
using corpus::FactVariable;
using corpus::KnowledgeBase;
using corpus::Span;
using corpus::SpanLabeling;

namespace {

GrounderConfig toy_config(int width = 16, int reduced = 8) {
  GrounderConfig cfg;
  cfg.encoder.layers = 1;
  cfg.encoder.width = width;
  cfg.encoder.heads = 2;
  cfg.encoder.max_len = 64;
  cfg.reduced_dim = reduced;
  cfg.seed = 11;
  return cfg;
}

struct Setup {
  KnowledgeBase kb;
  std::vector<const FactVariable*> vars;
  corpus::TokenizedText argument;
};

Setup make_setup() {
  Setup s;
  s.kb.add({"v_a", "strict wage floors", "wages", corpus::VariableOrigin::kSeedKb});
  s.kb.add({"v_b", "modern transit passes", "transit", corpus::VariableOrigin::kSeedKb});
  s.argument = corpus::tokenize("strict wage floors help the city");
  s.vars = {&s.kb.get("v_a"), &s.kb.get("v_b")};
  return s;
}

SpanLabeling random_labeling(std::mt19937_64& rng, int tokens,
                             const std::vector<std::string>& ids) {
  SpanLabeling lab;
  int pos = 0;
  while (pos < tokens) {
    pos += static_cast<int>(rng() % 3);
    if (pos >= tokens) break;
    int end = std::min<int>(tokens, pos + 1 + static_cast<int>(rng() % 3));
    lab.spans.push_back({pos, end, ids[rng() % ids.size()]});
    pos = end + 1;
  }
  return lab;
}

}  // namespace

TEST_CASE("encode_pair shape contract and determinism") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(),
                     SpanGrounder::build_vocab({}, s.kb));
  auto [tokens, var_bos] = model.encode_pair(s.argument, s.vars);
  CHECK(tokens.rows() == s.argument.token_count());
  CHECK(tokens.cols() == 16);
  REQUIRE(var_bos.size() == 2);
  CHECK(var_bos[0].rows() == 1);
  CHECK(var_bos[0].cols() == 16);

  auto [tokens2, var_bos2] = model.encode_pair(s.argument, s.vars);
  CHECK(tokens == tokens2);  // bitwise
  CHECK(var_bos[0] == var_bos2[0]);
  CHECK(var_bos[1] == var_bos2[1]);
}

TEST_CASE("encode_pair permutation equivariance") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(), SpanGrounder::build_vocab({}, s.kb));
  auto [_, fwd] = model.encode_pair(s.argument, {s.vars[0], s.vars[1]});
  auto [__, rev] = model.encode_pair(s.argument, {s.vars[1], s.vars[0]});
  CHECK(fwd[0] == rev[1]);
  CHECK(fwd[1] == rev[0]);
}

TEST_CASE("encode_pair input validation") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(), SpanGrounder::build_vocab({}, s.kb));
  CHECK_THROWS_AS(model.encode_pair(corpus::tokenize(""), s.vars),
                  ValidationError);
  CHECK_THROWS_AS(model.encode_pair(s.argument, {}), ValidationError);
  std::vector<const FactVariable*> six(6, s.vars[0]);
  CHECK_THROWS_AS(model.encode_pair(s.argument, six), ValidationError);
}

TEST_CASE("reduce_variable shapes and linearity") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(64, 32), SpanGrounder::build_vocab({}, s.kb));
  nn::Matrix zero(1, 64);
  // zero bias by construction, so zero in -> zero out
  auto out = model.reduce_variable(zero);
  CHECK(out.rows() == 1);
  CHECK(out.cols() == 32);
  for (int j = 0; j < 32; ++j) CHECK(out(0, j) == 0.0);
  CHECK_THROWS_AS(model.reduce_variable(nn::Matrix(1, 63)), ShapeError);
}

TEST_CASE("biaffine zero weights give uniform tag distribution") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(16, 8), SpanGrounder::build_vocab({}, s.kb));
  for (const char* tag : {"b", "i", "o"}) {
    model.params().get(std::string("biaffine.") + tag + ".w").value.fill(0.0);
    model.params().get(std::string("biaffine.") + tag + ".var_lin").value.fill(0.0);
    model.params().get(std::string("biaffine.") + tag + ".token_lin").value.fill(0.0);
    model.params().get(std::string("biaffine.") + tag + ".bias").value.fill(0.0);
  }
  nn::Matrix tokens(5, 8), vars(2, 8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  for (size_t i = 0; i < tokens.size(); ++i) tokens.data()[i] = d(rng);
  for (size_t i = 0; i < vars.size(); ++i) vars.data()[i] = d(rng);
  auto pred = model.biaffine_score(tokens, vars);
  CHECK(pred.channels == 3);  // 2 variables + OTHERS
  CHECK(pred.tokens == 5);
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < 5; ++t) {
      const double b = pred.logit(c, t, 0), i = pred.logit(c, t, 1),
                   o = pred.logit(c, t, 2);
      CHECK(b == doctest::Approx(0.0));
      CHECK(i == doctest::Approx(0.0));
      CHECK(o == doctest::Approx(0.0));
      // softmax of equal logits = 1/3 per tag
      const double denom = std::exp(b) + std::exp(i) + std::exp(o);
      CHECK(std::exp(b) / denom == doctest::Approx(1.0 / 3));
    }
}

TEST_CASE("full grounder loss gradient check (width 8)") {
  KnowledgeBase kb;
  kb.add({"v_a", "wage floors", "t", corpus::VariableOrigin::kSeedKb});
  kb.add({"v_b", "transit fares", "t", corpus::VariableOrigin::kSeedKb});
  corpus::AnnotatedExample ex;
  ex.id = "g";
  ex.topic = "t";
  ex.argument = corpus::tokenize("wage floors move transit fares");
  ex.spans.spans = {{0, 2, "v_a"}, {3, 5, "v_b"}};
  ex.variables = {"v_a", "v_b"};

  GrounderConfig cfg = toy_config(8, 4);
  cfg.encoder.heads = 2;
  SpanGrounder model(cfg, SpanGrounder::build_vocab({ex}, kb));
  auto loss_fn = [&](bool backward) {
    return model.example_loss(ex, kb, 1.0, backward);
  };
  auto res = testsupport::check_gradients(model.params(), loss_fn, 1e-5, 1e-4,
                                          1e-8, 48);
  INFO("worst: ", res.worst_param, " rel ", res.worst_rel);
  CHECK(res.ok);
}

TEST_CASE("uniform logits give ln 3 loss per position") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(16, 8), SpanGrounder::build_vocab({}, s.kb));
  for (const char* tag : {"b", "i", "o"}) {
    model.params().get(std::string("biaffine.") + tag + ".w").value.fill(0.0);
    model.params().get(std::string("biaffine.") + tag + ".var_lin").value.fill(0.0);
    model.params().get(std::string("biaffine.") + tag + ".token_lin").value.fill(0.0);
    model.params().get(std::string("biaffine.") + tag + ".bias").value.fill(0.0);
  }
  corpus::AnnotatedExample ex;
  ex.id = "u";
  ex.topic = "wages";
  ex.argument = s.argument;
  ex.spans.spans = {{0, 3, "v_a"}};
  ex.variables = {"v_a", "v_b"};
  const double loss = model.example_loss(ex, s.kb, 1.0, false);
  CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("ground decodes non-overlapping spans and respects all-O logits") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(16, 8), SpanGrounder::build_vocab({}, s.kb));
  auto pred = model.ground(s.argument, s.vars);
  CHECK(pred.channels == 3);
  CHECK(pred.tokens == s.argument.token_count());
  pred.decoded.validate(pred.tokens);  // non-overlap invariant

  // force the O tag to dominate every position
  model.params().get("biaffine.o.bias").value.fill(100.0);
  auto empty_pred = model.ground(s.argument, s.vars);
  CHECK(empty_pred.decoded.spans.empty());
}

TEST_CASE("training clips gradients to unit norm") {
  pipeline::FixtureSpec spec;
  spec.num_topics = 1;
  spec.examples_per_topic = 4;
  spec.kb_per_topic = 4;
  spec.noise_rate = 0.0;
  spec.seed = 5;
  auto fx = pipeline::make_fixture(spec);

  GrounderConfig cfg = toy_config(16, 8);
  cfg.train.learning_rate = 1e-2;
  cfg.train.batch_size = 4;
  cfg.train.max_steps = 12;
  cfg.train.eval_every = 4;
  cfg.train.grad_clip_norm = 1.0;
  SpanGrounder model(cfg, SpanGrounder::build_vocab(fx.labeled, fx.kb));
  auto log = model.train(fx.labeled, {}, fx.kb);
  CHECK(log.steps.size() >= 12);
  bool clipped_at_least_once = false;
  for (const auto& step : log.steps) {
    CHECK(step.grad_norm_postclip <= 1.0 + 1e-6);
    if (step.grad_norm_preclip > 1.0) clipped_at_least_once = true;
  }
  CHECK(clipped_at_least_once);
  CHECK_THROWS_AS(model.train({}, {}, fx.kb), ValidationError);
}

TEST_CASE("span_f1 identity, boundary and degenerate cases") {
  SpanLabeling gold{{{3, 9, "x"}}};  // tokens {3..8}
  SpanLabeling pred_same = gold;
  for (auto mode : {SpanMatchMode::kPartial, SpanMatchMode::kFull,
                    SpanMatchMode::kOverall})
    CHECK(span_f1(pred_same, gold, 12, mode) == doctest::Approx(1.0));

  // pred tokens {3..8}, gold {5..10}: overlap 4 of 6 -> partial TP, full no
  SpanLabeling pred{{{3, 9, "x"}}};
  SpanLabeling gold2{{{5, 11, "x"}}};
  CHECK(span_f1(pred, gold2, 12, SpanMatchMode::kPartial) == doctest::Approx(1.0));
  CHECK(span_f1(pred, gold2, 12, SpanMatchMode::kFull) == doctest::Approx(0.0));

  CHECK(span_f1(SpanLabeling{}, gold, 12, SpanMatchMode::kPartial) ==
        doctest::Approx(0.0));
  CHECK(span_f1(SpanLabeling{}, gold, 12, SpanMatchMode::kOverall) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(span_f1(SpanLabeling{{{0, 20, "x"}}}, gold, 12,
                          SpanMatchMode::kPartial),
                  RangeError);
}

TEST_CASE("span_f1 and grounding_accuracy agree with brute-force recounts") {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 300; ++iter) {
    const int tokens = 4 + static_cast<int>(rng() % 12);
    SpanLabeling pred = random_labeling(rng, tokens, {"a", "b", "OTHERS"});
    SpanLabeling gold = random_labeling(rng, tokens, {"a", "b", "OTHERS"});

    for (auto mode : {SpanMatchMode::kPartial, SpanMatchMode::kFull}) {
      // brute-force recount via the same published matching rule applied
      // with an independent O(n^3) greedy loop
      std::vector<bool> pu(pred.spans.size()), gu(gold.spans.size());
      long tp = 0;
      while (true) {
        int best_ov = 0;
        size_t bp = 0, bg = 0;
        bool found = false;
        for (size_t p = 0; p < pred.spans.size(); ++p) {
          if (pu[p]) continue;
          for (size_t g = 0; g < gold.spans.size(); ++g) {
            if (gu[g]) continue;
            const auto& ps = pred.spans[p];
            const auto& gs = gold.spans[g];
            const int ov = std::max(
                0, std::min(ps.end, gs.end) - std::max(ps.start, gs.start));
            const int plen = ps.end - ps.start;
            const bool ok = mode == SpanMatchMode::kPartial ? 2 * ov >= plen
                                                            : ov == plen;
            if (ov > 0 && ok && ov > best_ov) {
              best_ov = ov;
              bp = p;
              bg = g;
              found = true;
            }
          }
        }
        if (!found) break;
        pu[bp] = gu[bg] = true;
        ++tp;
      }
      const double p = pred.spans.empty() ? 0.0 : double(tp) / pred.spans.size();
      const double r = gold.spans.empty() ? 0.0 : double(tp) / gold.spans.size();
      const double expect = (p + r > 0) ? 2 * p * r / (p + r) : 0.0;
      CHECK(span_f1(pred, gold, tokens, mode) ==
            doctest::Approx(expect).epsilon(1e-12));
    }

    // grounding accuracy recount over partial matches
    auto matches = match_spans(pred, gold, SpanMatchMode::kPartial);
    long agree = 0;
    for (const auto& m : matches)
      if (pred.spans[m.pred_index].grounding ==
          gold.spans[m.gold_index].grounding)
        ++agree;
    const double expect =
        matches.empty() ? 0.0 : double(agree) / double(matches.size());
    CHECK(grounding_accuracy(pred, gold) == doctest::Approx(expect));
  }
}

TEST_CASE("span_f1 is invariant under span-order permutation") {
  std::mt19937_64 rng(59);
  for (int iter = 0; iter < 200; ++iter) {
    const int tokens = 4 + static_cast<int>(rng() % 10);
    SpanLabeling pred = random_labeling(rng, tokens, {"a", "b"});
    SpanLabeling gold = random_labeling(rng, tokens, {"a", "b"});
    SpanLabeling pred_shuffled = pred, gold_shuffled = gold;
    std::shuffle(pred_shuffled.spans.begin(), pred_shuffled.spans.end(), rng);
    std::shuffle(gold_shuffled.spans.begin(), gold_shuffled.spans.end(), rng);
    for (auto mode : {SpanMatchMode::kPartial, SpanMatchMode::kFull,
                      SpanMatchMode::kOverall}) {
      CHECK(span_f1(pred, gold, tokens, mode) ==
            span_f1(pred_shuffled, gold_shuffled, tokens, mode));
    }
    CHECK(grounding_accuracy(pred, gold) ==
          grounding_accuracy(pred_shuffled, gold_shuffled));
  }
}

TEST_CASE("grounding_accuracy simple fractions") {
  SpanLabeling gold{{{0, 2, "a"}, {4, 6, "b"}}};
  SpanLabeling pred_all{{{0, 2, "a"}, {4, 6, "b"}}};
  CHECK(grounding_accuracy(pred_all, gold) == doctest::Approx(1.0));
  SpanLabeling pred_half{{{0, 2, "a"}, {4, 6, "OTHERS"}}};
  CHECK(grounding_accuracy(pred_half, gold) == doctest::Approx(0.5));
}

TEST_CASE("checkpoint round trip preserves predictions") {
  Setup s = make_setup();
  SpanGrounder model(toy_config(16, 8), SpanGrounder::build_vocab({}, s.kb));
  auto before = model.ground(s.argument, s.vars);
  const std::string path =
      (std::filesystem::temp_directory_path() / "argpipe_grounder.ckpt.json")
          .string();
  model.save(path);
  auto loaded = SpanGrounder::load(path);
  auto after = loaded->ground(s.argument, s.vars);
  CHECK(before.tag_logits[0] == after.tag_logits[0]);
  CHECK(before.tag_logits[1] == after.tag_logits[1]);
  CHECK(before.tag_logits[2] == after.tag_logits[2]);
  CHECK(before.decoded == after.decoded);
}
