#include "skillforge/fuzzy.hpp"

#include <algorithm>
#include <vector>

#include "skillforge/textnorm.hpp"

namespace skillforge::fuzzy {

std::size_t indel_distance(std::string_view a, std::string_view b) {
    auto ua = textnorm::decode_utf8(a);
    auto ub = textnorm::decode_utf8(b);
    // indel = |a| + |b| - 2 * LCS
    if (ua.size() < ub.size()) std::swap(ua, ub);
    std::vector<std::size_t> prev(ub.size() + 1, 0), cur(ub.size() + 1, 0);
    for (std::size_t i = 1; i <= ua.size(); ++i) {
        for (std::size_t j = 1; j <= ub.size(); ++j) {
            if (ua[i - 1] == ub[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    std::size_t lcs = prev[ub.size()];
    return ua.size() + ub.size() - 2 * lcs;
}

std::string token_sort_normalize(std::string_view text) {
    auto tokens = textnorm::split_whitespace(textnorm::to_lower_turkish(text));
    std::sort(tokens.begin(), tokens.end());
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

double token_sort_ratio(std::string_view a, std::string_view b) {
    std::string na = token_sort_normalize(a);
    std::string nb = token_sort_normalize(b);
    std::size_t la = textnorm::codepoint_count(na);
    std::size_t lb = textnorm::codepoint_count(nb);
    if (la + lb == 0) return 100.0;
    std::size_t dist = indel_distance(na, nb);
    return 100.0 * (1.0 - static_cast<double>(dist) / static_cast<double>(la + lb));
}

}  // namespace skillforge::fuzzy
