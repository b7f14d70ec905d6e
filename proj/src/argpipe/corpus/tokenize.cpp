#include "argpipe/corpus/tokenize.hpp"

#include <cctype>

namespace argpipe::corpus {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '\'';
}

}  // namespace

TokenizedText tokenize(std::string_view raw) {
  TokenizedText out;
  out.raw.assign(raw);
  const int n = static_cast<int>(raw.size());
  int i = 0;
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(raw[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    int start = i;
    if (is_word_char(c)) {
      while (i < n && is_word_char(static_cast<unsigned char>(raw[i]))) ++i;
    } else {
      ++i;  // punctuation: one char per token
    }
    out.tokens.emplace_back(raw.substr(start, i - start));
    out.offsets.emplace_back(start, i);
  }
  return out;
}

}  // namespace argpipe::corpus
