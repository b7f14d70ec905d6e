#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "argpipe/corpus/tokenize.hpp"
#include "argpipe/normalize/claims.hpp"
#include "argpipe/normalize/embedding.hpp"
#include "argpipe/normalize/filters.hpp"
#include "argpipe/normalize/normalize.hpp"

using namespace argpipe;
using namespace argpipe::normalize;
using corpus::AnnotatedExample;
using corpus::ArgumentScheme;
using corpus::KnowledgeBase;

namespace {

// Embedding provider with hand-assigned vectors, so cosines (including the
// 0.85 boundary) are exact by construction.
class MockEmbedding : public EmbeddingProvider {
 public:
  explicit MockEmbedding(int width) : width_(width) {}
  void set(const std::string& text, std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    vectors_[text] = std::move(v);
  }
  std::vector<double> embed(const std::string& text) const override {
    auto it = vectors_.find(text);
    if (it == vectors_.end())
      throw ValidationError("mock embedding missing: " + text);
    return it->second;
  }
  std::string name() const override { return "mock"; }
  int width() const override { return width_; }

 private:
  int width_;
  std::map<std::string, std::vector<double>> vectors_;
};

KnowledgeBase two_var_kb() {
  KnowledgeBase kb;
  kb.add({"kb_a", "alpha fact", "topic", corpus::VariableOrigin::kSeedKb});
  kb.add({"kb_b", "beta fact", "topic", corpus::VariableOrigin::kSeedKb});
  return kb;
}

}  // namespace

TEST_CASE("hashed bag-of-words embedding is unit norm and deterministic") {
  HashedBowEmbedding provider(256);
  const auto v1 = provider.embed("strict curbside pickup");
  const auto v2 = provider.embed("strict curbside pickup");
  CHECK(v1 == v2);
  double norm = 0.0;
  for (double x : v1) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cosine(v1, v1) == doctest::Approx(1.0));
}

TEST_CASE("direct_map identity, orthogonal and threshold behavior") {
  KnowledgeBase kb = two_var_kb();
  MockEmbedding mock(4);
  mock.set("alpha fact", {1, 0, 0, 0});
  mock.set("beta fact", {0, 1, 0, 0});
  mock.set("alpha fact", {1, 0, 0, 0});

  mock.set("same as alpha", {1, 0, 0, 0});
  auto hit = direct_map("same as alpha", kb, mock, 0.85);
  REQUIRE(hit.has_value());
  CHECK(hit->variable_id == "kb_a");
  CHECK(hit->similarity == doctest::Approx(1.0));

  mock.set("orthogonal", {0, 0, 1, 0});
  CHECK_FALSE(direct_map("orthogonal", kb, mock, 0.85).has_value());

  // exactly at the threshold counts (inclusive boundary)
  mock.set("boundary", {0.85, std::sqrt(1.0 - 0.85 * 0.85), 0, 0});
  auto boundary = direct_map("boundary", kb, mock, 0.85);
  REQUIRE(boundary.has_value());
  CHECK(boundary->variable_id == "kb_a");
  CHECK(boundary->similarity == doctest::Approx(0.85));

  CHECK_THROWS_AS(direct_map("", kb, mock, 0.85), ValidationError);
}

TEST_CASE("direct_map tie breaks on the smaller variable id and ignores KB "
          "order") {
  MockEmbedding mock(2);
  mock.set("alpha fact", {1, 0});
  mock.set("beta fact", {1, 0});  // identical embeddings: a tie
  mock.set("the span", {1, 0});
  KnowledgeBase fwd = two_var_kb();
  auto hit = direct_map("the span", fwd, mock, 0.85);
  REQUIRE(hit.has_value());
  CHECK(hit->variable_id == "kb_a");

  KnowledgeBase rev;
  rev.add({"kb_b", "beta fact", "topic", corpus::VariableOrigin::kSeedKb});
  rev.add({"kb_a", "alpha fact", "topic", corpus::VariableOrigin::kSeedKb});
  auto hit2 = direct_map("the span", rev, mock, 0.85);
  REQUIRE(hit2.has_value());
  CHECK(hit2->variable_id == "kb_a");
}

TEST_CASE("direct_map equals a brute-force nearest-neighbor scan") {
  HashedBowEmbedding provider(64);
  KnowledgeBase kb;
  const std::vector<std::string> words = {"wage",   "floor", "transit",
                                          "permit", "tax",   "curfew",
                                          "market", "lane"};
  std::mt19937_64 rng(7);
  for (int i = 0; i < 12; ++i) {
    std::string text;
    for (int w = 0; w < 3; ++w) {
      if (w) text += ' ';
      text += words[rng() % words.size()];
    }
    text += " " + std::to_string(i);  // force distinct texts
    kb.add({"kb_" + std::to_string(i), text, "t",
            corpus::VariableOrigin::kSeedKb});
  }
  for (int iter = 0; iter < 100; ++iter) {
    std::string span;
    for (int w = 0; w < 3; ++w) {
      if (w) span += ' ';
      span += words[rng() % words.size()];
    }
    const auto got = direct_map(span, kb, provider, 0.55);
    // exhaustive scan oracle
    const auto span_vec = provider.embed(span);
    std::optional<std::pair<std::string, double>> best;
    for (const auto& v : kb.variables()) {
      const double sim = cosine(span_vec, provider.embed(v.text));
      if (sim < 0.55) continue;
      if (!best || sim > best->second ||
          (sim == best->second && v.id < best->first))
        best = {v.id, sim};
    }
    CHECK(got.has_value() == best.has_value());
    if (got && best) {
      CHECK(got->variable_id == best->first);
      CHECK(got->similarity == doctest::Approx(best->second).epsilon(1e-12));
    }
  }
}

TEST_CASE("cluster_spans basics") {
  MockEmbedding mock(3);
  mock.set("a", {1, 0, 0});
  mock.set("b", {0, 1, 0});
  mock.set("c", {0, 0, 1});
  auto singletons = cluster_spans({"a", "b", "c"}, mock, 0.75, 2);
  CHECK(singletons.size() == 3);
  for (const auto& c : singletons) CHECK(c.size() == 1);

  auto same = cluster_spans({"a", "a"}, mock, 0.75, 2);
  REQUIRE(same.size() == 1);
  CHECK(same[0] == std::vector<int>{0, 1});

  CHECK_THROWS_AS(cluster_spans({}, mock, 0.75, 2), ValidationError);
}

TEST_CASE("cluster_spans equals union-find connected components") {
  HashedBowEmbedding provider(32);
  const std::vector<std::string> words = {"wage", "floor", "transit", "tax"};
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<std::string> spans;
    const int n = 2 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      std::string s;
      const int len = 1 + static_cast<int>(rng() % 3);
      for (int w = 0; w < len; ++w) {
        if (w) s += ' ';
        s += words[rng() % words.size()];
      }
      spans.push_back(s);
    }
    const double threshold = 0.6;
    const auto got = cluster_spans(spans, provider, threshold, 2);

    // oracle: naive union-find over the cosine graph
    std::vector<int> parent(spans.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      return parent[static_cast<size_t>(x)] == x
                 ? x
                 : find(parent[static_cast<size_t>(x)]);
    };
    for (size_t i = 0; i < spans.size(); ++i)
      for (size_t j = i + 1; j < spans.size(); ++j)
        if (cosine(provider.embed(spans[i]), provider.embed(spans[j])) >=
            threshold)
          parent[static_cast<size_t>(find(static_cast<int>(j)))] =
              find(static_cast<int>(i));
    std::map<int, std::vector<int>> comps;
    for (size_t i = 0; i < spans.size(); ++i)
      comps[find(static_cast<int>(i))].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> expect;
    for (auto& [root, members] : comps) {
      if (members.size() >= 2) expect.push_back(members);
      else for (int m : members) expect.push_back({m});
    }
    std::sort(expect.begin(), expect.end());
    auto got_sorted = got;
    std::sort(got_sorted.begin(), got_sorted.end());
    CHECK(got_sorted == expect);
  }
}

TEST_CASE("indirect_map inherits from the nearest directly mapped neighbor") {
  MockEmbedding mock(3);
  mock.set("unmapped span", {1, 0, 0});
  mock.set("mapped span", {0.9, std::sqrt(1 - 0.81), 0});
  const std::vector<std::string> spans = {"unmapped span", "mapped span"};
  std::vector<std::vector<double>> embs = {mock.embed(spans[0]),
                                           mock.embed(spans[1])};
  std::vector<std::optional<DirectMatch>> direct = {
      std::nullopt, DirectMatch{"kb_v1", 0.99}};
  const std::vector<std::vector<int>> clusters = {{0, 1}};
  auto hit = indirect_map(0, clusters, direct, embs);
  REQUIRE(hit.has_value());
  CHECK(hit->variable_id == "kb_v1");
  CHECK(hit->via_index == 1);

  // singleton cluster: nothing to inherit
  CHECK_FALSE(indirect_map(0, {{0}, {1}}, direct, embs).has_value());
  // span missing from every cluster: an error
  CHECK_THROWS_AS(indirect_map(5, clusters, direct, embs), ValidationError);
}

TEST_CASE("indirect_map equals a brute-force max-cosine scan") {
  HashedBowEmbedding provider(64);
  std::mt19937_64 rng(13);
  const std::vector<std::string> words = {"wage", "floor", "transit", "tax",
                                          "lane", "market"};
  for (int iter = 0; iter < 50; ++iter) {
    const int n = 3 + static_cast<int>(rng() % 5);
    std::vector<std::string> spans;
    std::vector<std::vector<double>> embs;
    std::vector<std::optional<DirectMatch>> direct;
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      std::string s = words[rng() % words.size()] + " " +
                      words[rng() % words.size()] + " " + std::to_string(i);
      spans.push_back(s);
      embs.push_back(provider.embed(s));
      if (i > 0 && rng() % 2 == 0)
        direct.push_back(DirectMatch{"kb_" + std::to_string(i), 0.9});
      else
        direct.push_back(std::nullopt);
      members.push_back(i);
    }
    const std::vector<std::vector<int>> clusters = {members};
    const auto got = indirect_map(0, clusters, direct, embs);
    std::optional<std::pair<int, double>> best;
    for (int m = 1; m < n; ++m) {
      if (!direct[static_cast<size_t>(m)]) continue;
      const double sim = cosine(embs[0], embs[static_cast<size_t>(m)]);
      if (!best || sim > best->second) best = {m, sim};
    }
    CHECK(got.has_value() == best.has_value());
    if (got && best) CHECK(got->via_index == best->first);
  }
}

namespace {

AnnotatedExample probed_example(const std::string& id, double consequence_p,
                                double others_p = 0.0) {
  AnnotatedExample ex;
  ex.id = id;
  ex.topic = "topic";
  ex.argument = corpus::tokenize("alpha fact should win");
  ex.stance = corpus::Stance::kPro;
  ex.scheme_probs[ArgumentScheme::kFromConsequence] = consequence_p;
  ex.scheme_probs[ArgumentScheme::kOthers] = others_p;
  return ex;
}

}  // namespace

TEST_CASE("scheme probability filter: means, boundaries and Others") {
  // mean over the corpus for from_consequence = (0.89+0.91+0.11+0.09)/4 = 0.5
  std::vector<AnnotatedExample> corpus_rows = {
      probed_example("e1", 0.89), probed_example("e2", 0.91),
      probed_example("e3", 0.11), probed_example("e4", 0.09)};
  auto result = scheme_probability_filter(corpus_rows, 0.20);
  CHECK(result.mean_probs.at(ArgumentScheme::kFromConsequence) ==
        doctest::Approx(0.5));
  // cutoff = 0.2 * 0.5 = 0.1, boundary inclusive: 0.11 kept, 0.09 dropped
  std::vector<std::string> kept_ids;
  for (const auto& ex : result.kept) kept_ids.push_back(ex.id);
  CHECK(kept_ids == std::vector<std::string>{"e1", "e2", "e3"});
  REQUIRE(result.dropped.size() == 1);
  CHECK(result.dropped[0].first == "e4");
  CHECK(result.dropped[0].second == DropReason::kSchemeProbability);

  // top scheme Others: always dropped
  auto others = probed_example("e5", 0.2, 0.9);
  auto r2 = scheme_probability_filter({others}, 0.20);
  CHECK(r2.kept.empty());
  CHECK(r2.dropped[0].second == DropReason::kSchemeOthers);

  // every example at the mean survives (p >= 0.2 * p)
  auto r3 = scheme_probability_filter(
      {probed_example("a", 0.4), probed_example("b", 0.4)}, 0.20);
  CHECK(r3.kept.size() == 2);

  AnnotatedExample no_probs;
  no_probs.id = "x";
  no_probs.argument = corpus::tokenize("text");
  CHECK_THROWS_AS(scheme_probability_filter({no_probs}, 0.20),
                  ValidationError);
}

namespace {

AnnotatedExample quality_example(int spans_total, int distinct_vars,
                                 int words) {
  AnnotatedExample ex;
  ex.id = "q";
  ex.topic = "topic";
  std::string text = "we should keep";
  for (int w = 3; w < words; ++w) text += " w" + std::to_string(w);
  ex.argument = corpus::tokenize(text);
  for (int s = 0; s < spans_total; ++s) {
    const int var = s % std::max(1, distinct_vars);
    ex.spans.spans.push_back({s, s + 1, "kb_" + std::to_string(var)});
  }
  return ex;
}

}  // namespace

TEST_CASE("quality filter rules and boundary semantics") {
  FilterConfig cfg;  // 0.30 / 150 words / [1,4] vars / [2,4] occurrences
  ConstantClaimDetector always(true);

  // 10 spans, 3 unnormalized: 0.30 <= 0.30 passes the fraction rule
  auto ex = quality_example(10, 3, 40);  // 3 vars x (4,3,3) occurrences
  auto decision = quality_filter(ex, cfg, 3, always);
  CHECK(decision.keep);

  // 4 of 10 unnormalized: dropped by the fraction rule
  CHECK(quality_filter(ex, cfg, 4, always).reason ==
        DropReason::kUnnormalizedFraction);

  // 151 words: length
  auto long_ex = quality_example(10, 3, 151);
  CHECK(quality_filter(long_ex, cfg, 0, always).reason == DropReason::kLength);
  auto at_limit = quality_example(10, 3, 150);
  CHECK(quality_filter(at_limit, cfg, 0, always).keep);

  // one variable with 5 grounded spans: occurrence bound
  auto heavy = quality_example(7, 2, 40);  // vars get 4 and 3
  heavy.spans.spans.push_back({7, 8, "kb_0"});  // now 5 occurrences of kb_0
  CHECK(quality_filter(heavy, cfg, 0, always).reason ==
        DropReason::kVariableOccurrence);

  // five distinct variables: variable count
  auto wide = quality_example(10, 5, 40);
  CHECK(quality_filter(wide, cfg, 0, always).reason ==
        DropReason::kVariableCount);

  // no grounded variables at all
  AnnotatedExample bare;
  bare.id = "bare";
  bare.argument = corpus::tokenize("we should act now");
  CHECK(quality_filter(bare, cfg, 0, always).reason ==
        DropReason::kVariableCount);

  // claim rule with a constant-false detector
  ConstantClaimDetector never(false);
  CHECK(quality_filter(ex, cfg, 0, never).reason == DropReason::kNoClaim);
}

TEST_CASE("expand_kb adds fresh deduplicated entries and keeps old ones") {
  KnowledgeBase kb = two_var_kb();
  const size_t before = kb.size();

  auto map0 = expand_kb(kb, {});
  CHECK(map0.empty());
  CHECK(kb.size() == before);

  auto map1 = expand_kb(kb, {{"new fact", "topic"}});
  CHECK(kb.size() == before + 1);
  CHECK(kb.get(map1.at("new fact")).origin == corpus::VariableOrigin::kExpanded);
  CHECK(kb.get("kb_a").text == "alpha fact");

  // N = 4 additions with d = 2 duplicates -> |KB| + 2
  KnowledgeBase kb2 = two_var_kb();
  auto map2 = expand_kb(kb2, {{"x1", "t"}, {"x2", "t"}, {"x1", "t"},
                              {"x2", "t"}});
  CHECK(kb2.size() == before + 2);
  CHECK(map2.size() == 2);

  // a text already in the KB is reused, never re-added
  KnowledgeBase kb3 = two_var_kb();
  auto map3 = expand_kb(kb3, {{"alpha fact", "topic"}});
  CHECK(kb3.size() == before);
  CHECK(map3.at("alpha fact") == "kb_a");
}

TEST_CASE("claim detector rules") {
  RuleBasedClaimDetector rules;
  CHECK(rules.has_claim("We should abolish the death penalty."));
  CHECK(rules.has_claim("strict fare caps are favourable as it helps"));
  CHECK(rules.has_claim("experts say the rule supports better outcomes"));
  CHECK(rules.has_claim("this policy is a violation of basic fairness"));
  CHECK_FALSE(rules.has_claim(""));
  CHECK_FALSE(rules.has_claim("the cat sat on the mat"));
  CHECK_FALSE(rules.has_claim("some people link one thing with another"));

  ConstantClaimDetector stub(true);
  CHECK(stub.has_claim(""));
  CHECK(stub.has_claim("anything at all"));
}

TEST_CASE("normalize_corpus is idempotent and rewrites groundings") {
  KnowledgeBase kb = two_var_kb();
  HashedBowEmbedding provider(64);
  NormalizerConfig cfg;

  AnnotatedExample ex;
  ex.id = "n0";
  ex.topic = "topic";
  ex.argument = corpus::tokenize("alpha fact meets nothing shared here");
  ex.stance = corpus::Stance::kPro;
  ex.spans.spans = {{0, 2, "OTHERS"}, {3, 6, "OTHERS"}};

  auto first = normalize_corpus({ex}, kb, provider, cfg);
  REQUIRE(first.outcomes.size() == 2);
  CHECK(first.outcomes[0].outcome == SpanOutcome::kDirect);
  CHECK(first.outcomes[0].variable_id == "kb_a");
  CHECK(first.outcomes[1].outcome == SpanOutcome::kUnmapped);
  CHECK(first.examples[0].spans.spans[0].grounding == "kb_a");
  CHECK(first.examples[0].spans.spans[1].grounding == "OTHERS");
  CHECK(first.examples[0].variables == std::vector<std::string>{"kb_a"});

  auto second = normalize_corpus(first.examples, kb, provider, cfg);
  CHECK(second.examples[0].spans == first.examples[0].spans);
  CHECK(second.examples[0].variables == first.examples[0].variables);
}

TEST_CASE("filter decisions are order independent") {
  std::vector<AnnotatedExample> rows = {
      probed_example("a", 0.9), probed_example("b", 0.05),
      probed_example("c", 0.6), probed_example("d", 0.45)};
  auto fwd = scheme_probability_filter(rows, 0.20);
  std::reverse(rows.begin(), rows.end());
  auto rev = scheme_probability_filter(rows, 0.20);
  std::set<std::string> fwd_ids, rev_ids;
  for (const auto& ex : fwd.kept) fwd_ids.insert(ex.id);
  for (const auto& ex : rev.kept) rev_ids.insert(ex.id);
  CHECK(fwd_ids == rev_ids);
}
