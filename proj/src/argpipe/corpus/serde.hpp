#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "argpipe/corpus/types.hpp"

namespace argpipe::corpus {

using OrderedJson = nlohmann::ordered_json;

// Line-delimited record format. One JSON object per line with fields
// id, topic, text, stance, schemes, scheme_probs (optional), spans
// (char-offset triples [start, end, grounding]), variables, provenance.
// Token-level spans are derived through the reference tokenizer on read.

OrderedJson example_to_json(const AnnotatedExample& ex);
// line is 1-based and only used for error messages.
AnnotatedExample example_from_json(const OrderedJson& j, size_t line = 0);

std::vector<AnnotatedExample> read_corpus(const std::string& path);
void write_corpus(const std::vector<AnnotatedExample>& examples,
                  const std::string& path);

// Streaming read; visit is called once per record in file order.
void for_each_example(const std::string& path,
                      const std::function<void(AnnotatedExample&&)>& visit);

KnowledgeBase read_kb(const std::string& path);
void write_kb(const KnowledgeBase& kb, const std::string& path);

}  // namespace argpipe::corpus
