#include "argpipe/normalize/filters.hpp"

#include <algorithm>

namespace argpipe::normalize {

using corpus::AnnotatedExample;
using corpus::ArgumentScheme;

std::string_view drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "none";
    case DropReason::kSchemeOthers: return "scheme-others";
    case DropReason::kSchemeProbability: return "scheme-probability";
    case DropReason::kUnnormalizedFraction: return "unnormalized-fraction";
    case DropReason::kLength: return "length";
    case DropReason::kVariableCount: return "variable-count";
    case DropReason::kVariableOccurrence: return "variable-occurrence";
    case DropReason::kNoClaim: return "no-claim";
  }
  throw ValidationError("invalid DropReason");
}

namespace {

std::pair<ArgumentScheme, double> top_scheme(const AnnotatedExample& ex) {
  if (ex.scheme_probs.empty())
    throw ValidationError("example " + ex.id +
                          " carries no scheme probabilities");
  ArgumentScheme best = ex.scheme_probs.begin()->first;
  double best_p = ex.scheme_probs.begin()->second;
  for (ArgumentScheme s : corpus::all_schemes()) {
    auto it = ex.scheme_probs.find(s);
    if (it != ex.scheme_probs.end() && it->second > best_p) {
      best = s;
      best_p = it->second;
    }
  }
  return {best, best_p};
}

}  // namespace

SchemeFilterResult scheme_probability_filter(
    const std::vector<AnnotatedExample>& examples, double scheme_prob_factor) {
  SchemeFilterResult result;
  std::map<ArgumentScheme, double> sums;
  std::map<ArgumentScheme, long> counts;
  for (const auto& ex : examples) {
    if (ex.scheme_probs.empty())
      throw ValidationError("example " + ex.id +
                            " carries no scheme probabilities");
    for (const auto& [s, p] : ex.scheme_probs) {
      sums[s] += p;
      ++counts[s];
    }
  }
  for (const auto& [s, sum] : sums)
    result.mean_probs[s] = sum / static_cast<double>(counts[s]);

  for (const auto& ex : examples) {
    const auto [scheme, prob] = top_scheme(ex);
    if (scheme == ArgumentScheme::kOthers) {
      result.dropped.emplace_back(ex.id, DropReason::kSchemeOthers);
      continue;
    }
    if (prob >= scheme_prob_factor * result.mean_probs.at(scheme)) {
      result.kept.push_back(ex);
    } else {
      result.dropped.emplace_back(ex.id, DropReason::kSchemeProbability);
    }
  }
  return result;
}

QualityDecision quality_filter(const AnnotatedExample& ex,
                               const FilterConfig& cfg, int unmapped_spans,
                               const ClaimDetector& claims) {
  const int total_spans = static_cast<int>(ex.spans.spans.size());
  const double fraction =
      total_spans > 0 ? static_cast<double>(unmapped_spans) / total_spans : 0.0;
  if (fraction > cfg.max_unnormalized_fraction)
    return {false, DropReason::kUnnormalizedFraction};

  if (ex.argument.token_count() > cfg.max_words)
    return {false, DropReason::kLength};

  std::map<std::string, int> occurrences;
  for (const auto& span : ex.spans.spans) {
    if (span.grounding != corpus::kOthersGrounding)
      ++occurrences[span.grounding];
  }
  const int distinct = static_cast<int>(occurrences.size());
  if (distinct < cfg.min_variables || distinct > cfg.max_variables)
    return {false, DropReason::kVariableCount};
  for (const auto& [id, n] : occurrences) {
    if (n < cfg.min_occurrences || n > cfg.max_occurrences)
      return {false, DropReason::kVariableOccurrence};
  }

  if (!claims.has_claim(ex.argument.raw)) return {false, DropReason::kNoClaim};
  return {true, DropReason::kNone};
}

QualityPipelineResult apply_quality_filters(
    const std::vector<AnnotatedExample>& normalized,
    const std::vector<SpanOutcomeRecord>& outcomes,
    const corpus::KnowledgeBase& kb, const FilterConfig& cfg,
    const ClaimDetector& claims) {
  std::map<std::string, std::vector<std::pair<int, std::string>>> unmapped;
  for (const auto& rec : outcomes) {
    if (rec.outcome == SpanOutcome::kUnmapped)
      unmapped[rec.example_id].emplace_back(rec.span_index, rec.span_text);
  }

  QualityPipelineResult result;
  result.kb = kb;

  std::vector<AnnotatedExample> rule1_pass;
  std::vector<std::pair<std::string, std::string>> expansion_texts;
  for (const auto& ex : normalized) {
    const auto it = unmapped.find(ex.id);
    const int unmapped_n =
        it == unmapped.end() ? 0 : static_cast<int>(it->second.size());
    const int total = static_cast<int>(ex.spans.spans.size());
    const double fraction =
        total > 0 ? static_cast<double>(unmapped_n) / total : 0.0;
    if (fraction > cfg.max_unnormalized_fraction) {
      result.dropped.emplace_back(ex.id, DropReason::kUnnormalizedFraction);
      continue;
    }
    rule1_pass.push_back(ex);
    if (it != unmapped.end()) {
      for (const auto& [span_idx, text] : it->second)
        expansion_texts.emplace_back(text, ex.topic);
    }
  }

  const auto text_to_id = expand_kb(result.kb, expansion_texts);

  for (AnnotatedExample& ex : rule1_pass) {
    const auto it = unmapped.find(ex.id);
    if (it != unmapped.end()) {
      for (const auto& [span_idx, text] : it->second)
        ex.spans.spans[static_cast<size_t>(span_idx)].grounding =
            text_to_id.at(text);
      std::vector<std::string> vars;
      for (const auto& span : ex.spans.spans) {
        if (span.grounding == corpus::kOthersGrounding) continue;
        if (std::find(vars.begin(), vars.end(), span.grounding) == vars.end())
          vars.push_back(span.grounding);
      }
      ex.variables = std::move(vars);
    }
    const QualityDecision decision =
        quality_filter(ex, cfg, /*unmapped_spans=*/0, claims);
    if (decision.keep) {
      ex.validate(result.kb);
      result.survivors.push_back(std::move(ex));
    } else {
      result.dropped.emplace_back(ex.id, decision.reason);
    }
  }
  return result;
}

std::map<std::string, std::string> expand_kb(
    corpus::KnowledgeBase& kb,
    const std::vector<std::pair<std::string, std::string>>&
        unmapped_text_topic) {
  std::map<std::string, std::string> existing_by_text;
  for (const auto& v : kb.variables()) existing_by_text[v.text] = v.id;

  std::map<std::string, std::string> text_to_id;
  int next = 0;
  for (const auto& v : kb.variables()) {
    if (v.origin == corpus::VariableOrigin::kExpanded) ++next;
  }
  for (const auto& [text, topic] : unmapped_text_topic) {
    if (text.empty()) throw ValidationError("cannot expand KB with empty text");
    auto hit = existing_by_text.find(text);
    if (hit != existing_by_text.end()) {
      text_to_id[text] = hit->second;  // duplicate text: reuse, never re-add
      continue;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "exp_%04d", next++);
    corpus::FactVariable var{buf, text, topic,
                             corpus::VariableOrigin::kExpanded};
    kb.add(var);
    existing_by_text[text] = var.id;
    text_to_id[text] = var.id;
  }
  return text_to_id;
}

}  // namespace argpipe::normalize
