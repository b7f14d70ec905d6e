#include "argpipe/normalize/normalize.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace argpipe::normalize {

using corpus::AnnotatedExample;
using corpus::KnowledgeBase;

std::optional<DirectMatch> direct_map(const std::string& span_text,
                                      const KnowledgeBase& kb,
                                      const EmbeddingProvider& provider,
                                      double threshold) {
  if (span_text.empty()) throw ValidationError("direct_map: empty span text");
  if (kb.size() == 0) throw ValidationError("direct_map: empty knowledge base");
  const auto span_vec = provider.embed(span_text);
  std::optional<DirectMatch> best;
  for (const auto& var : kb.variables()) {
    const double sim = cosine(span_vec, provider.embed(var.text));
    if (sim < threshold) continue;
    if (!best || sim > best->similarity ||
        (sim == best->similarity && var.id < best->variable_id)) {
      best = DirectMatch{var.id, sim};
    }
  }
  return best;
}

std::vector<std::vector<int>> cluster_spans(
    const std::vector<std::string>& span_texts,
    const EmbeddingProvider& provider, double community_threshold,
    int min_community_size) {
  if (span_texts.empty())
    throw ValidationError("cluster_spans: at least one span required");
  const int n = static_cast<int>(span_texts.size());
  std::vector<std::vector<double>> embs;
  embs.reserve(span_texts.size());
  for (const auto& s : span_texts) embs.push_back(provider.embed(s));

  // union-find over the cosine-threshold graph
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] =
          parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (cosine(embs[static_cast<size_t>(i)], embs[static_cast<size_t>(j)]) >=
          community_threshold) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[static_cast<size_t>(std::max(ri, rj))] =
            std::min(ri, rj);
      }

  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) by_root[find(i)].push_back(i);

  std::vector<std::vector<int>> clusters;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    if (static_cast<int>(members.size()) >= min_community_size) {
      clusters.push_back(std::move(members));
    } else {
      for (int m : members) clusters.push_back({m});
    }
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return clusters;
}

std::optional<IndirectMatch> indirect_map(
    int span_index, const std::vector<std::vector<int>>& clusters,
    const std::vector<std::optional<DirectMatch>>& direct_results,
    const std::vector<std::vector<double>>& embeddings) {
  const std::vector<int>* cluster = nullptr;
  for (const auto& c : clusters) {
    if (std::find(c.begin(), c.end(), span_index) != c.end()) {
      cluster = &c;
      break;
    }
  }
  if (!cluster)
    throw ValidationError("indirect_map: span " + std::to_string(span_index) +
                          " is not present in any cluster");
  std::optional<IndirectMatch> best;
  for (int member : *cluster) {
    if (member == span_index) continue;
    const auto& direct = direct_results[static_cast<size_t>(member)];
    if (!direct) continue;
    const double sim = cosine(embeddings[static_cast<size_t>(span_index)],
                              embeddings[static_cast<size_t>(member)]);
    if (!best || sim > best->similarity ||
        (sim == best->similarity && member < best->via_index)) {
      best = IndirectMatch{direct->variable_id, member, sim};
    }
  }
  return best;
}

std::string_view outcome_name(SpanOutcome o) {
  switch (o) {
    case SpanOutcome::kDirect: return "direct";
    case SpanOutcome::kIndirect: return "indirect";
    case SpanOutcome::kUnmapped: return "unmapped";
  }
  throw ValidationError("invalid SpanOutcome");
}

nlohmann::ordered_json SpanOutcomeRecord::to_json() const {
  nlohmann::ordered_json j;
  j["example_id"] = example_id;
  j["span_index"] = span_index;
  j["span_text"] = span_text;
  j["outcome"] = std::string(outcome_name(outcome));
  if (outcome != SpanOutcome::kUnmapped) {
    j["variable_id"] = variable_id;
    j["similarity"] = similarity;
  }
  if (outcome == SpanOutcome::kIndirect) j["via_text"] = via_text;
  return j;
}

SpanOutcomeRecord SpanOutcomeRecord::from_json(const nlohmann::ordered_json& j) {
  SpanOutcomeRecord r;
  r.example_id = j.at("example_id").get<std::string>();
  r.span_index = j.at("span_index").get<int>();
  r.span_text = j.at("span_text").get<std::string>();
  const std::string o = j.at("outcome").get<std::string>();
  if (o == "direct") r.outcome = SpanOutcome::kDirect;
  else if (o == "indirect") r.outcome = SpanOutcome::kIndirect;
  else if (o == "unmapped") r.outcome = SpanOutcome::kUnmapped;
  else throw ValidationError("unknown span outcome: " + o);
  if (r.outcome != SpanOutcome::kUnmapped) {
    r.variable_id = j.at("variable_id").get<std::string>();
    r.similarity = j.at("similarity").get<double>();
  }
  if (r.outcome == SpanOutcome::kIndirect)
    r.via_text = j.at("via_text").get<std::string>();
  return r;
}

NormalizationResult normalize_corpus(
    const std::vector<AnnotatedExample>& examples, const KnowledgeBase& kb,
    const EmbeddingProvider& provider, const NormalizerConfig& cfg) {
  NormalizationResult result;
  result.examples = examples;

  struct Pending {
    size_t example;
    int span;
    std::string text;
  };
  std::vector<Pending> pending;
  for (size_t e = 0; e < result.examples.size(); ++e) {
    const auto& ex = result.examples[e];
    for (size_t s = 0; s < ex.spans.spans.size(); ++s) {
      const auto& span = ex.spans.spans[s];
      if (span.grounding != corpus::kOthersGrounding) continue;  // idempotence
      const auto& off = ex.argument.offsets;
      const int cb = off[static_cast<size_t>(span.start)].first;
      const int ce = off[static_cast<size_t>(span.end - 1)].second;
      pending.push_back({e, static_cast<int>(s),
                         ex.argument.raw.substr(static_cast<size_t>(cb),
                                                static_cast<size_t>(ce - cb))});
    }
  }

  std::vector<std::optional<DirectMatch>> direct(pending.size());
  std::vector<std::vector<double>> embs(pending.size());
  for (size_t i = 0; i < pending.size(); ++i) {
    embs[i] = provider.embed(pending[i].text);
    direct[i] = direct_map(pending[i].text, kb, provider, cfg.direct_threshold);
  }

  std::vector<std::optional<IndirectMatch>> indirect(pending.size());
  if (!pending.empty()) {
    std::vector<std::string> texts;
    texts.reserve(pending.size());
    for (const auto& p : pending) texts.push_back(p.text);
    const auto clusters = cluster_spans(texts, provider,
                                        cfg.community_threshold,
                                        cfg.min_community_size);
    for (size_t i = 0; i < pending.size(); ++i) {
      if (direct[i]) continue;
      indirect[i] = indirect_map(static_cast<int>(i), clusters, direct, embs);
    }
  }

  for (size_t i = 0; i < pending.size(); ++i) {
    const auto& p = pending[i];
    auto& span = result.examples[p.example].spans.spans[static_cast<size_t>(p.span)];
    SpanOutcomeRecord rec;
    rec.example_id = result.examples[p.example].id;
    rec.span_index = p.span;
    rec.span_text = p.text;
    if (direct[i]) {
      rec.outcome = SpanOutcome::kDirect;
      rec.variable_id = direct[i]->variable_id;
      rec.similarity = direct[i]->similarity;
      span.grounding = direct[i]->variable_id;
    } else if (indirect[i]) {
      rec.outcome = SpanOutcome::kIndirect;
      rec.variable_id = indirect[i]->variable_id;
      rec.similarity = indirect[i]->similarity;
      rec.via_text = pending[static_cast<size_t>(indirect[i]->via_index)].text;
      span.grounding = indirect[i]->variable_id;
    } else {
      rec.outcome = SpanOutcome::kUnmapped;
    }
    result.outcomes.push_back(std::move(rec));
  }

  // refresh variable lists from the groundings, first-occurrence order
  for (auto& ex : result.examples) {
    std::vector<std::string> vars;
    for (const auto& span : ex.spans.spans) {
      if (span.grounding == corpus::kOthersGrounding) continue;
      if (std::find(vars.begin(), vars.end(), span.grounding) == vars.end())
        vars.push_back(span.grounding);
    }
    if (!vars.empty() || ex.variables.empty()) ex.variables = std::move(vars);
  }
  return result;
}

}  // namespace argpipe::normalize
