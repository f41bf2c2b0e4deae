#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared across modules. All offsets used in the corpus and in
// marker alignment are codepoint offsets, not byte offsets.

namespace skillforge::textnorm {

std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(const std::vector<char32_t>& codepoints);
std::string encode_utf8(char32_t codepoint);
std::size_t codepoint_count(std::string_view text);

// Lowercasing with Turkish casing rules: 'I' -> 'ı' and 'İ' -> 'i'.
// Covers ASCII, Latin-1 Supplement and Latin Extended-A.
char32_t to_lower_turkish(char32_t c);
std::string to_lower_turkish(std::string_view text);

bool is_space(char32_t c);

// Collapse whitespace runs to single spaces and trim the ends.
std::string normalize_whitespace(std::string_view text);

// As above, but also reports, for each codepoint of the normalized string,
// the codepoint index it came from in the input.
struct NormalizedText {
    std::vector<char32_t> codepoints;
    std::vector<std::size_t> source_index;
};
NormalizedText normalize_whitespace_mapped(const std::vector<char32_t>& input);

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace skillforge::textnorm
