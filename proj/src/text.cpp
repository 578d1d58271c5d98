#include "respsel/text.hpp"

#include <cctype>

#include "respsel/errors.hpp"

namespace respsel {

const char* to_string(Tokenizer t) { return t == Tokenizer::whitespace ? "whitespace" : "character"; }

Tokenizer tokenizer_from_string(const std::string& s) {
  if (s == "whitespace") return Tokenizer::whitespace;
  if (s == "character") return Tokenizer::character;
  throw ConfigError("unknown tokenizer '" + s + "'");
}

namespace {
bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as its own token
}
}  // namespace

std::vector<std::string> tokenize(std::string_view text, Tokenizer mode) {
  std::vector<std::string> tokens;
  if (mode == Tokenizer::whitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) tokens.emplace_back(text.substr(i, j - i));
      i = j;
    }
    return tokens;
  }
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    const std::size_t len = std::min(utf8_length(lead), text.size() - i);
    if (!(len == 1 && is_space(lead))) tokens.emplace_back(text.substr(i, len));
    i += len;
  }
  return tokens;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace respsel
