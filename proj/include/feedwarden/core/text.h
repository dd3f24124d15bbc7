#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace feedwarden {

std::string_view trim(std::string_view text);

// Splits on ASCII whitespace and punctuation, lowercasing ASCII letters.
// Bytes >= 0x80 are kept as token characters so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

std::size_t word_count(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace feedwarden
