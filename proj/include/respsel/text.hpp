#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace respsel {

enum class Tokenizer { whitespace, character };

const char* to_string(Tokenizer t);
Tokenizer tokenizer_from_string(const std::string& s);

// Whitespace mode splits on ASCII whitespace; character mode yields one
// token per UTF-8 code point and skips whitespace.
std::vector<std::string> tokenize(std::string_view text, Tokenizer mode);

std::string trim(std::string_view s);

}  // namespace respsel
