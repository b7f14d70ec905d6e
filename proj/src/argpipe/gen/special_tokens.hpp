#pragma once

#include <optional>
#include <string>
#include <vector>

#include "argpipe/corpus/types.hpp"

namespace argpipe::gen {

// The 13 control and section tokens: five scheme codes, two stance codes,
// four positional variable ids and the two decoder BOS tokens. They are
// atomic in the generator tokenizer and disjoint from the base vocabulary.
inline constexpr const char* kPatternToken = "<pattern>";
inline constexpr const char* kArgumentToken = "<argument>";
inline constexpr int kMaxGeneratorVariables = 4;

const std::vector<std::string>& special_tokens();  // exactly 13

// Control code for a scheme; Others is never a control code.
std::string scheme_code(corpus::ArgumentScheme s);
std::string stance_code(corpus::Stance s);
std::string variable_token(int position);  // <VAR_X>, X in [0, 3]

// Parses "<VAR_X>" -> X; nullopt for anything else.
std::optional<int> parse_variable_token(const std::string& token);

// Reference tokenization that additionally keeps every special token
// atomic (the plain tokenizer would split "<VAR_0>" at the punctuation).
std::vector<std::string> tokenize_with_specials(const std::string& text);

}  // namespace argpipe::gen
