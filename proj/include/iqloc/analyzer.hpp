#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detail/utf8.hpp"
#include "stopwords.hpp"

namespace iqloc {

/// `standard` mimics a plain word analyzer; `code` additionally emits the
/// camelCase / snake_case parts of identifiers after the compound token.
enum class AnalyzerMode : std::uint8_t { standard = 0, code = 1 };

inline std::string_view to_string(AnalyzerMode mode) noexcept
{
    return mode == AnalyzerMode::code ? "code" : "standard";
}

inline AnalyzerMode analyzer_mode_from_string(std::string_view s)
{
    if (s == "code") {
        return AnalyzerMode::code;
    }
    if (s == "standard") {
        return AnalyzerMode::standard;
    }
    throw std::invalid_argument("unknown analyzer mode: " + std::string(s));
}

struct AnalyzedToken {
    std::string term;
    std::size_t position = 0;

    friend bool operator==(const AnalyzedToken&, const AnalyzedToken&) = default;
};

namespace detail {

inline bool is_word_codepoint(char32_t cp) noexcept
{
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
    }
    // Latin-1 punctuation and symbols, general punctuation, CJK punctuation,
    // fullwidth ASCII punctuation, specials.
    if ((cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7) {
        return false;
    }
    if ((cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F)) {
        return false;
    }
    if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFFF0)) {
        return false;
    }
    return true;
}

inline bool ascii_upper(char c) noexcept { return c >= 'A' && c <= 'Z'; }
inline bool ascii_lower(char c) noexcept { return c >= 'a' && c <= 'z'; }
inline bool ascii_digit(char c) noexcept { return c >= '0' && c <= '9'; }

inline std::string ascii_lowercase(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        if (ascii_upper(c)) {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

/// Splits one underscore-free identifier piece at case transitions:
/// fooBar -> foo|Bar, utf8Decoder -> utf8|Decoder, HTTPServer -> HTTP|Server.
inline void split_camel(std::string_view piece, std::vector<std::string_view>& parts)
{
    std::size_t start = 0;
    for (std::size_t i = 1; i < piece.size(); ++i) {
        const char prev = piece[i - 1];
        const char cur = piece[i];
        const bool next_lower = i + 1 < piece.size() && ascii_lower(piece[i + 1]);
        const bool boundary = ascii_upper(cur)
                              && ((ascii_lower(prev) || ascii_digit(prev)) || (ascii_upper(prev) && next_lower));
        if (boundary) {
            parts.push_back(piece.substr(start, i - start));
            start = i;
        }
    }
    parts.push_back(piece.substr(start));
}

inline std::vector<std::string_view> identifier_parts(std::string_view word)
{
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (pos <= word.size()) {
        auto next = word.find('_', pos);
        if (next == std::string_view::npos) {
            next = word.size();
        }
        if (next > pos) {
            split_camel(word.substr(pos, next - pos), parts);
        }
        pos = next + 1;
    }
    return parts;
}

}  // namespace detail

/// Word segmentation + lowercasing. Letters, digits, underscores and
/// non-punctuation non-ASCII code points form words; everything else
/// separates them. Leading/trailing underscores are trimmed. No stop words
/// are removed here.
inline std::vector<AnalyzedToken> analyze(std::string_view text, AnalyzerMode mode = AnalyzerMode::code)
{
    std::vector<AnalyzedToken> tokens;
    std::size_t position = 0;
    auto emit = [&](std::string term) { tokens.push_back({std::move(term), position++}); };

    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t start = pos;
        char32_t cp = detail::decode_one(text, pos);
        if (!detail::is_word_codepoint(cp)) {
            continue;
        }
        std::size_t end = pos;
        while (pos < text.size()) {
            std::size_t probe = pos;
            cp = detail::decode_one(text, probe);
            if (!detail::is_word_codepoint(cp)) {
                break;
            }
            pos = probe;
            end = probe;
        }
        std::string_view word = text.substr(start, end - start);
        while (!word.empty() && word.front() == '_') {
            word.remove_prefix(1);
        }
        while (!word.empty() && word.back() == '_') {
            word.remove_suffix(1);
        }
        if (word.empty()) {
            continue;
        }
        emit(detail::ascii_lowercase(word));
        if (mode == AnalyzerMode::code) {
            const auto parts = detail::identifier_parts(word);
            if (parts.size() > 1) {
                for (auto part : parts) {
                    emit(detail::ascii_lowercase(part));
                }
            }
        }
    }
    return tokens;
}

inline std::vector<std::string> analyze_terms(std::string_view text, AnalyzerMode mode = AnalyzerMode::code)
{
    std::vector<std::string> terms;
    for (auto& token : analyze(text, mode)) {
        terms.push_back(std::move(token.term));
    }
    return terms;
}

inline bool is_number(std::string_view term) noexcept
{
    if (term.empty()) {
        return false;
    }
    for (char c : term) {
        if (!detail::ascii_digit(c)) {
            return false;
        }
    }
    return true;
}

/// Analyzed terms with stop words removed, multiplicity kept. This is the
/// search-query form of free text.
inline std::vector<std::string> query_terms(std::string_view text, AnalyzerMode mode = AnalyzerMode::code)
{
    std::vector<std::string> terms;
    for (auto& token : analyze(text, mode)) {
        if (!is_stopword(token.term)) {
            terms.push_back(std::move(token.term));
        }
    }
    return terms;
}

}  // namespace iqloc
