#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace skillforge::fuzzy {

// Minimum number of insertions + deletions turning one sequence into the
// other (no substitutions), over codepoints.
std::size_t indel_distance(std::string_view a, std::string_view b);

// Lowercase (Turkish casing), collapse whitespace, sort tokens, rejoin.
std::string token_sort_normalize(std::string_view text);

// 100 * (1 - indel / (|a| + |b|)) over the token-sort-normalized strings.
// Two empty strings score 100.
double token_sort_ratio(std::string_view a, std::string_view b);

}  // namespace skillforge::fuzzy
