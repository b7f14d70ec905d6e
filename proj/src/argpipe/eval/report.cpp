#include "argpipe/eval/report.hpp"

#include <cstdio>

#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::eval {

double fact_faithfulness(const std::vector<std::string>& variables,
                         const std::string& generated,
                         const normalize::EmbeddingProvider& provider) {
  if (variables.empty())
    throw ValidationError("fact_faithfulness: at least one variable required");
  if (generated.empty())
    throw ValidationError("fact_faithfulness: generated text is empty");
  const auto gen_vec = provider.embed(generated);
  double sum = 0.0;
  for (const auto& v : variables)
    sum += normalize::cosine(provider.embed(v), gen_vec);
  return sum / static_cast<double>(variables.size());
}

EvalReport evaluate_corpus(const std::vector<EvalPair>& pairs,
                           const normalize::EmbeddingProvider& embeddings,
                           const NliProvider& nli, double nli_threshold,
                           const BleuConfig& bleu_cfg) {
  if (pairs.empty()) throw ValidationError("evaluate_corpus: no pairs");
  EvalReport report;
  std::vector<TokenSeq> candidates, references;
  double rouge_sum = 0.0, fact_sum = 0.0;
  long entail_n = 0, contra_n = 0;
  for (const auto& pair : pairs) {
    EvalReport::Row row;
    row.id = pair.id;
    const TokenSeq cand = corpus::tokenize(pair.generated).tokens;
    const TokenSeq ref = corpus::tokenize(pair.original).tokens;
    candidates.push_back(cand);
    references.push_back(ref);
    row.rouge_l = rouge_l(cand, ref);
    row.fact = fact_faithfulness(pair.variables, pair.generated, embeddings);
    const EntailContra ec =
        entail_contra(pair.original, pair.generated, nli, nli_threshold);
    row.entails = ec.entails;
    row.contradicts = ec.contradicts;
    rouge_sum += row.rouge_l;
    fact_sum += row.fact;
    if (row.entails) ++entail_n;
    if (row.contradicts) ++contra_n;
    report.per_example.push_back(std::move(row));
  }
  const double n = static_cast<double>(pairs.size());
  report.bleu = corpus_bleu(candidates, references, bleu_cfg);
  report.rouge_l = rouge_sum / n;
  report.fact = fact_sum / n;
  report.entail_rate = static_cast<double>(entail_n) / n;
  report.contra_rate = static_cast<double>(contra_n) / n;
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["bleu"] = bleu;
  j["rouge_l"] = rouge_l;
  j["fact"] = fact;
  j["entail_rate"] = entail_rate;
  j["contra_rate"] = contra_rate;
  j["count"] = per_example.size();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : per_example) {
    nlohmann::ordered_json r;
    r["id"] = row.id;
    r["rouge_l"] = row.rouge_l;
    r["fact"] = row.fact;
    r["entails"] = row.entails;
    r["contradicts"] = row.contradicts;
    rows.push_back(std::move(r));
  }
  j["per_example"] = std::move(rows);
  return j;
}

std::string EvalReport::to_table() const {
  char buf[160];
  std::string out = "Model\tBLEU\tRougeL\tFact\tEntail\tContra\n";
  std::snprintf(buf, sizeof(buf), "run\t%.3f\t%.3f\t%.3f\t%.3f\t%.3f\n", bleu,
                rouge_l, fact, entail_rate, contra_rate);
  out += buf;
  return out;
}

}  // namespace argpipe::eval
