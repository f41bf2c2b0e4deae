#include "skillforge/textnorm.hpp"

namespace skillforge::textnorm {

std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char b0 = static_cast<unsigned char>(text[i]);
        char32_t cp = 0;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            // stray continuation byte: keep it as-is so round trips stay lossless
            out.push_back(b0);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(b0);
            ++i;
            continue;
        }
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char bk = static_cast<unsigned char>(text[i + k]);
            if ((bk & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (!valid) {
            out.push_back(b0);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

std::string encode_utf8(const std::vector<char32_t>& codepoints) {
    std::string out;
    out.reserve(codepoints.size());
    for (char32_t cp : codepoints) out += encode_utf8(cp);
    return out;
}

std::size_t codepoint_count(std::string_view text) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < text.size(); ++i)
        if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) ++n;
    return n;
}

char32_t to_lower_turkish(char32_t c) {
    if (c == U'I') return U'ı';  // dotless i
    if (c == U'İ') return U'i';  // dotted capital I
    if (c >= U'A' && c <= U'Z') return c + 0x20;
    // Latin-1 Supplement uppercase block, skipping the multiplication sign
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
    // Latin Extended-A mostly alternates upper/lower
    if (c >= 0x0100 && c <= 0x0137 && (c % 2) == 0) return c + 1;
    if (c >= 0x0139 && c <= 0x0148 && (c % 2) == 1) return c + 1;
    if (c >= 0x014A && c <= 0x0177 && (c % 2) == 0) return c + 1;
    if (c == 0x0178) return 0x00FF;  // Y with diaeresis
    if (c >= 0x0179 && c <= 0x017E && (c % 2) == 1) return c + 1;
    return c;
}

std::string to_lower_turkish(std::string_view text) {
    auto cps = decode_utf8(text);
    for (auto& c : cps) c = to_lower_turkish(c);
    return encode_utf8(cps);
}

bool is_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
           c == 0x00A0;
}

std::string normalize_whitespace(std::string_view text) {
    auto norm = normalize_whitespace_mapped(decode_utf8(text));
    return encode_utf8(norm.codepoints);
}

NormalizedText normalize_whitespace_mapped(const std::vector<char32_t>& input) {
    NormalizedText out;
    out.codepoints.reserve(input.size());
    out.source_index.reserve(input.size());
    bool pending_space = false;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (is_space(input[i])) {
            pending_space = !out.codepoints.empty();
            continue;
        }
        if (pending_space) {
            out.codepoints.push_back(U' ');
            out.source_index.push_back(i > 0 ? i - 1 : 0);
            pending_space = false;
        }
        out.codepoints.push_back(input[i]);
        out.source_index.push_back(i);
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> tokens;
    auto cps = decode_utf8(text);
    std::vector<char32_t> current;
    for (char32_t c : cps) {
        if (is_space(c)) {
            if (!current.empty()) {
                tokens.push_back(encode_utf8(current));
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(encode_utf8(current));
    return tokens;
}

}  // namespace skillforge::textnorm
