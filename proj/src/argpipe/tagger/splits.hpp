#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "argpipe/corpus/types.hpp"

namespace argpipe::tagger {

enum class SplitRatio { kCV, k5to1, k4to2, k2to4 };

std::string_view ratio_name(SplitRatio r);
SplitRatio ratio_from_name(std::string_view name);

struct TopicSplit {
  SplitRatio ratio;
  int split_id = 1;
  std::vector<std::string> train_topics;       // empty for CV
  std::vector<std::string> validation_topics;  // empty for CV
  std::vector<corpus::AnnotatedExample> train;
  std::vector<corpus::AnnotatedExample> validation;
};

// Topic-disjoint train/validation for the 5:1 / 4:2 / 2:4 ratios (requires
// exactly six topics in the corpus); CV is a seeded random 93%/7% example
// split. Assignments derive deterministically from split_id alone.
TopicSplit topic_split(const std::vector<corpus::AnnotatedExample>& corpus,
                       SplitRatio ratio, int split_id);

nlohmann::ordered_json split_manifest(const TopicSplit& split);

}  // namespace argpipe::tagger
