#include "argpipe/corpus/serde.hpp"

#include <fstream>

#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::corpus {

namespace {

std::string at_line(size_t line) {
  return line ? " (line " + std::to_string(line) + ")" : "";
}

// Character span -> token span. Boundaries must coincide with token
// boundaries; anything else means the record was not produced through the
// reference tokenizer.
Span char_span_to_tokens(const TokenizedText& text, int start_char,
                         int end_char, std::string grounding, size_t line) {
  int tok_start = -1, tok_end = -1;
  for (size_t t = 0; t < text.offsets.size(); ++t) {
    if (text.offsets[t].first == start_char) tok_start = static_cast<int>(t);
    if (text.offsets[t].second == end_char) tok_end = static_cast<int>(t) + 1;
  }
  if (tok_start < 0 || tok_end <= tok_start)
    throw ValidationError("field 'spans': char range [" +
                          std::to_string(start_char) + "," +
                          std::to_string(end_char) +
                          ") does not align with token boundaries" +
                          at_line(line));
  return Span{tok_start, tok_end, std::move(grounding)};
}

}  // namespace

OrderedJson example_to_json(const AnnotatedExample& ex) {
  OrderedJson j;
  j["id"] = ex.id;
  j["topic"] = ex.topic;
  j["text"] = ex.argument.raw;
  j["stance"] = std::string(stance_name(ex.stance));
  OrderedJson schemes = OrderedJson::array();
  for (ArgumentScheme s : all_schemes()) {
    if (ex.schemes.count(s)) schemes.push_back(std::string(scheme_name(s)));
  }
  j["schemes"] = std::move(schemes);
  if (!ex.scheme_probs.empty()) {
    OrderedJson probs;
    for (ArgumentScheme s : all_schemes()) {
      auto it = ex.scheme_probs.find(s);
      if (it != ex.scheme_probs.end())
        probs[std::string(scheme_name(s))] = it->second;
    }
    j["scheme_probs"] = std::move(probs);
  }
  OrderedJson spans = OrderedJson::array();
  for (const Span& s : ex.spans.spans) {
    const auto& off = ex.argument.offsets;
    spans.push_back(OrderedJson::array(
        {off[static_cast<size_t>(s.start)].first,
         off[static_cast<size_t>(s.end - 1)].second, s.grounding}));
  }
  j["spans"] = std::move(spans);
  j["variables"] = ex.variables;
  j["provenance"] = std::string(provenance_name(ex.provenance));
  return j;
}

AnnotatedExample example_from_json(const OrderedJson& j, size_t line) {
  AnnotatedExample ex;
  try {
    ex.id = j.at("id").get<std::string>();
    ex.topic = j.at("topic").get<std::string>();
    ex.argument = tokenize(j.at("text").get<std::string>());
    ex.stance = stance_from_name(j.at("stance").get<std::string>());
    for (const auto& s : j.at("schemes"))
      ex.schemes.insert(scheme_from_name(s.get<std::string>()));
    if (j.contains("scheme_probs")) {
      for (const auto& [k, v] : j.at("scheme_probs").items())
        ex.scheme_probs[scheme_from_name(k)] = v.get<double>();
    }
    for (const auto& sp : j.at("spans")) {
      if (!sp.is_array() || sp.size() != 3)
        throw ValidationError("field 'spans': each span is [start_char, "
                              "end_char, grounding_id]" + at_line(line));
      ex.spans.spans.push_back(char_span_to_tokens(
          ex.argument, sp[0].get<int>(), sp[1].get<int>(),
          sp[2].get<std::string>(), line));
    }
    ex.spans.validate(ex.argument.token_count());
    for (const auto& v : j.at("variables"))
      ex.variables.push_back(v.get<std::string>());
    ex.provenance = provenance_from_name(j.at("provenance").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed record" + at_line(line) + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + at_line(line));
  }
  return ex;
}

void for_each_example(const std::string& path,
                      const std::function<void(AnnotatedExample&&)>& visit) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::string buf;
  size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (buf.empty()) continue;
    OrderedJson j;
    try {
      j = OrderedJson::parse(buf);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed record" + at_line(line) + ": " +
                            e.what());
    }
    visit(example_from_json(j, line));
  }
}

std::vector<AnnotatedExample> read_corpus(const std::string& path) {
  std::vector<AnnotatedExample> out;
  for_each_example(path,
                   [&](AnnotatedExample&& ex) { out.push_back(std::move(ex)); });
  return out;
}

void write_corpus(const std::vector<AnnotatedExample>& examples,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open corpus file for writing: " + path);
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
}

KnowledgeBase read_kb(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open KB file: " + path);
  KnowledgeBase kb;
  std::string buf;
  size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (buf.empty()) continue;
    try {
      OrderedJson j = OrderedJson::parse(buf);
      FactVariable v;
      v.id = j.at("id").get<std::string>();
      v.text = j.at("text").get<std::string>();
      v.topic = j.at("topic").get<std::string>();
      v.origin = origin_from_name(j.at("origin").get<std::string>());
      kb.add(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed KB record" + at_line(line) + ": " +
                            e.what());
    }
  }
  return kb;
}

void write_kb(const KnowledgeBase& kb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open KB file for writing: " + path);
  for (const auto& v : kb.variables()) {
    OrderedJson j;
    j["id"] = v.id;
    j["text"] = v.text;
    j["topic"] = v.topic;
    j["origin"] = std::string(origin_name(v.origin));
    out << j.dump() << '\n';
  }
}

}  // namespace argpipe::corpus
