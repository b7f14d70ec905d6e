#include "argpipe/gen/special_tokens.hpp"

#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::gen {

using corpus::ArgumentScheme;
using corpus::Stance;

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> kTokens = {
      "<from_consequence>",
      "<from_source_authority>",
      "<from_source_knowledge>",
      "<goal_from_means/means_for_goal>",
      "<rule_or_principle>",
      "<pro>",
      "<con>",
      "<VAR_0>",
      "<VAR_1>",
      "<VAR_2>",
      "<VAR_3>",
      kPatternToken,
      kArgumentToken,
  };
  return kTokens;
}

std::string scheme_code(ArgumentScheme s) {
  if (s == ArgumentScheme::kOthers)
    throw ValidationError("'others' is never a generation control code");
  return "<" + std::string(corpus::scheme_name(s)) + ">";
}

std::string stance_code(Stance s) {
  return "<" + std::string(corpus::stance_name(s)) + ">";
}

std::string variable_token(int position) {
  if (position < 0 || position >= kMaxGeneratorVariables)
    throw RangeError("variable token position must lie in [0, 3]");
  return "<VAR_" + std::to_string(position) + ">";
}

std::optional<int> parse_variable_token(const std::string& token) {
  for (int x = 0; x < kMaxGeneratorVariables; ++x)
    if (token == variable_token(x)) return x;
  return std::nullopt;
}

std::vector<std::string> tokenize_with_specials(const std::string& text) {
  std::vector<std::string> out;
  size_t pos = 0;
  size_t plain_start = 0;
  auto flush_plain = [&](size_t end) {
    if (end > plain_start) {
      const auto toks =
          corpus::tokenize(text.substr(plain_start, end - plain_start)).tokens;
      out.insert(out.end(), toks.begin(), toks.end());
    }
  };
  while (pos < text.size()) {
    if (text[pos] == '<') {
      const std::string* hit = nullptr;
      for (const auto& sp : special_tokens()) {
        if (text.compare(pos, sp.size(), sp) == 0) {
          if (!hit || sp.size() > hit->size()) hit = &sp;
        }
      }
      if (hit) {
        flush_plain(pos);
        out.push_back(*hit);
        pos += hit->size();
        plain_start = pos;
        continue;
      }
    }
    ++pos;
  }
  flush_plain(text.size());
  return out;
}

}  // namespace argpipe::gen
