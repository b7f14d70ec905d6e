#include "argpipe/tagger/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "argpipe/common/hash.hpp"
#include "argpipe/common/rng.hpp"

namespace argpipe::tagger {

using corpus::AnnotatedExample;

std::string_view ratio_name(SplitRatio r) {
  switch (r) {
    case SplitRatio::kCV: return "cv";
    case SplitRatio::k5to1: return "5:1";
    case SplitRatio::k4to2: return "4:2";
    case SplitRatio::k2to4: return "2:4";
  }
  throw ValidationError("invalid SplitRatio");
}

SplitRatio ratio_from_name(std::string_view name) {
  if (name == "cv") return SplitRatio::kCV;
  if (name == "5:1") return SplitRatio::k5to1;
  if (name == "4:2") return SplitRatio::k4to2;
  if (name == "2:4") return SplitRatio::k2to4;
  throw ValidationError("unknown split ratio: '" + std::string(name) + "'");
}

TopicSplit topic_split(const std::vector<AnnotatedExample>& corpus,
                       SplitRatio ratio, int split_id) {
  if (corpus.empty()) throw ValidationError("cannot split an empty corpus");
  TopicSplit out;
  out.ratio = ratio;
  out.split_id = split_id;

  if (ratio == SplitRatio::kCV) {
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(static_cast<std::uint64_t>(split_id), "cv-split"));
    std::shuffle(order.begin(), order.end(), rng);
    const size_t val_n = static_cast<size_t>(
        std::llround(0.07 * static_cast<double>(corpus.size())));
    for (size_t i = 0; i < order.size(); ++i) {
      if (i < val_n)
        out.validation.push_back(corpus[order[i]]);
      else
        out.train.push_back(corpus[order[i]]);
    }
    return out;
  }

  std::set<std::string> topic_set;
  for (const auto& ex : corpus) topic_set.insert(ex.topic);
  if (topic_set.size() < 6)
    throw ValidationError("topic-ratio splits require six topics, corpus has " +
                          std::to_string(topic_set.size()));
  std::vector<std::string> topics(topic_set.begin(), topic_set.end());
  Rng rng(derive_seed(static_cast<std::uint64_t>(split_id),
                      std::string("topic-split-") +
                          std::string(ratio_name(ratio))));
  std::shuffle(topics.begin(), topics.end(), rng);

  const size_t val_topics = ratio == SplitRatio::k5to1
                                ? 1
                                : (ratio == SplitRatio::k4to2 ? 2 : 4);
  out.validation_topics.assign(topics.begin(),
                               topics.begin() + static_cast<long>(val_topics));
  out.train_topics.assign(topics.begin() + static_cast<long>(val_topics),
                          topics.end());
  std::sort(out.validation_topics.begin(), out.validation_topics.end());
  std::sort(out.train_topics.begin(), out.train_topics.end());

  const std::set<std::string> val_set(out.validation_topics.begin(),
                                      out.validation_topics.end());
  for (const auto& ex : corpus) {
    if (val_set.count(ex.topic))
      out.validation.push_back(ex);
    else
      out.train.push_back(ex);
  }
  // zero-leakage postcondition, asserted over every emitted example
  for (const auto& ex : out.train) {
    if (val_set.count(ex.topic))
      throw Error("topic leakage: training example " + ex.id +
                  " carries a validation topic");
  }
  for (const auto& ex : out.validation) {
    if (!val_set.count(ex.topic))
      throw Error("topic leakage: validation example " + ex.id +
                  " carries a training topic");
  }
  return out;
}

nlohmann::ordered_json split_manifest(const TopicSplit& split) {
  nlohmann::ordered_json j;
  j["split_id"] = split.split_id;
  j["ratio"] = std::string(ratio_name(split.ratio));
  j["train_topics"] = split.train_topics;
  j["validation_topics"] = split.validation_topics;
  auto ids = [](const std::vector<AnnotatedExample>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& ex : v) out.push_back(ex.id);
    return out;
  };
  j["train_ids"] = ids(split.train);
  j["validation_ids"] = ids(split.validation);
  return j;
}

}  // namespace argpipe::tagger
