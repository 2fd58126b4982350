#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace iqloc::detail {

inline constexpr char32_t replacement_char = 0xFFFD;

/// Decodes one code point starting at `pos`. Invalid or truncated sequences
/// yield U+FFFD and consume a single byte.
inline char32_t decode_one(std::string_view s, std::size_t& pos) noexcept
{
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        ++pos;
        return replacement_char;
    }
    if (pos + len > s.size()) {
        ++pos;
        return replacement_char;
    }
    for (int i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return replacement_char;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return replacement_char;
    }
    pos += len;
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp)
{
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

struct LossyDecode {
    std::string text;
    std::size_t replaced = 0;
};

/// Re-encodes `bytes` as valid UTF-8, substituting U+FFFD for every invalid byte.
inline LossyDecode decode_lossy(std::string_view bytes)
{
    LossyDecode out;
    out.text.reserve(bytes.size());
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const std::size_t start = pos;
        const char32_t cp = decode_one(bytes, pos);
        if (cp == replacement_char && !(pos - start == 3 && bytes.substr(start, 3) == "\xEF\xBF\xBD")) {
            ++out.replaced;
            append_utf8(out.text, cp);
        } else {
            out.text.append(bytes.substr(start, pos - start));
        }
    }
    return out;
}

}  // namespace iqloc::detail
