#pragma once

#include <string>
#include <string_view>

namespace c2sw::utf8 {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

bool is_space(char32_t cp);

// Simple one-to-one case mapping for Latin, Greek and Cyrillic letters.
// Returns cp unchanged when it has no case counterpart.
char32_t toggle_case(char32_t cp);
bool has_case(char32_t cp);

}  // namespace c2sw::utf8
