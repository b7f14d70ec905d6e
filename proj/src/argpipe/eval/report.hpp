#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "argpipe/eval/nli.hpp"
#include "argpipe/eval/text_metrics.hpp"
#include "argpipe/normalize/embedding.hpp"

namespace argpipe::eval {

// Mean cosine between each input variable's embedding and the generated
// argument's embedding.
double fact_faithfulness(const std::vector<std::string>& variables,
                         const std::string& generated,
                         const normalize::EmbeddingProvider& provider);

struct EvalPair {
  std::string id;
  std::vector<std::string> variables;  // fact texts fed to the generator
  std::string original;                // reference argument
  std::string generated;
};

struct EvalReport {
  double bleu = 0.0;
  double rouge_l = 0.0;
  double fact = 0.0;
  double entail_rate = 0.0;
  double contra_rate = 0.0;
  struct Row {
    std::string id;
    double rouge_l = 0.0;
    double fact = 0.0;
    bool entails = false;
    bool contradicts = false;
  };
  std::vector<Row> per_example;

  nlohmann::ordered_json to_json() const;
  // Plain-text table with the BLEU / RougeL / Fact / Entail / Contra columns.
  std::string to_table() const;
};

EvalReport evaluate_corpus(const std::vector<EvalPair>& pairs,
                           const normalize::EmbeddingProvider& embeddings,
                           const NliProvider& nli, double nli_threshold,
                           const BleuConfig& bleu_cfg = {});

}  // namespace argpipe::eval
