#include "goldrank/unicode.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

namespace goldrank::unicode {

namespace {

struct CharRange {
    char32_t lo;
    char32_t hi;
};
struct CharPair {
    char32_t from;
    char32_t to;
};

#include "unicode_tables.inc"

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar value starting at text[i], advancing i past it.
char32_t decode_one(std::string_view text, std::size_t& i) {
    const auto byte = [&](std::size_t k) -> unsigned {
        return static_cast<unsigned char>(text[k]);
    };
    const unsigned b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    unsigned len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return kReplacement;
    }
    if (i + len > text.size()) {
        ++i;
        return kReplacement;
    }
    for (unsigned k = 1; k < len; ++k) {
        const unsigned b = byte(i + k);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    // Overlong forms and surrogates are not valid scalar values.
    const char32_t min_cp[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        return kReplacement;
    return cp;
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) out.push_back(decode_one(text, i));
    return out;
}

std::string encode_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) {
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacement;
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
    }
    return out;
}

std::size_t char_count(std::string_view text) {
    std::size_t n = 0, i = 0;
    while (i < text.size()) {
        decode_one(text, i);
        ++n;
    }
    return n;
}

std::string substr_chars(std::string_view text, std::size_t first_char,
                         std::size_t last_char) {
    if (first_char > last_char)
        throw std::out_of_range("substr_chars: first_char > last_char");
    std::size_t i = 0, seen = 0;
    std::size_t begin_byte = std::string_view::npos;
    if (first_char == 0) begin_byte = 0;
    while (i < text.size() && seen < last_char) {
        decode_one(text, i);
        ++seen;
        if (seen == first_char) begin_byte = i;
    }
    if (seen < last_char || begin_byte == std::string_view::npos)
        throw std::out_of_range("substr_chars: window [" +
                                std::to_string(first_char) + ", " +
                                std::to_string(last_char) +
                                ") exceeds text of " + std::to_string(seen) +
                                " characters");
    return std::string(text.substr(begin_byte, i - begin_byte));
}

bool is_punctuation(char32_t cp) {
    const auto* end = std::end(kPunctRanges);
    const auto* it = std::lower_bound(
        std::begin(kPunctRanges), end, cp,
        [](const CharRange& r, char32_t c) { return r.hi < c; });
    return it != end && it->lo <= cp;
}

bool is_whitespace(char32_t cp) {
    for (char32_t w : kWhitespace)
        if (w == cp) return true;
    return false;
}

char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 0x20 : cp;
    const auto* end = std::end(kLowerPairs);
    const auto* it = std::lower_bound(
        std::begin(kLowerPairs), end, cp,
        [](const CharPair& p, char32_t c) { return p.from < c; });
    return (it != end && it->from == cp) ? it->to : cp;
}

}  // namespace goldrank::unicode
