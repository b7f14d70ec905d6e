#pragma once

#include <string_view>

#include "argpipe/corpus/types.hpp"

namespace argpipe::corpus {

// Reference tokenizer: maximal runs of word characters [A-Za-z0-9_'] plus
// single-character punctuation tokens, whitespace skipped. All span metrics
// and word counts in the pipeline are defined over these tokens.
TokenizedText tokenize(std::string_view raw);

}  // namespace argpipe::corpus
