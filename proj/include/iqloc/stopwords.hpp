#pragma once

#include <algorithm>
#include <array>
#include <string_view>

namespace iqloc {

/// Version tag of the frozen English stop-word list. Bump it whenever the
/// list changes, since keyword outputs depend on it.
inline constexpr std::string_view stopword_list_version = "en-1";

namespace detail {

inline constexpr auto english_stopwords = std::to_array<std::string_view>({
    "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an",
    "and", "any", "are", "aren", "as", "at", "be", "because", "been", "before",
    "being", "below", "between", "both", "but", "by", "can", "couldn", "d", "did",
    "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each", "few",
    "for", "from", "further", "had", "hadn", "has", "hasn", "have", "haven", "having",
    "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i",
    "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "ll",
    "m", "ma", "me", "mightn", "more", "most", "mustn", "my", "myself", "needn",
    "no", "nor", "not", "now", "o", "of", "off", "on", "once", "only",
    "or", "other", "our", "ours", "ourselves", "out", "over", "own", "re", "s",
    "same", "shan", "she", "should", "shouldn", "so", "some", "such", "t", "than",
    "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
    "this", "those", "through", "to", "too", "under", "until", "up", "ve", "very",
    "was", "wasn", "we", "were", "weren", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "won", "wouldn", "y", "you", "your",
    "yours", "yourself", "yourselves", "also", "could", "e", "etc", "g", "get", "got",
    "however", "ie", "may", "might", "must", "one", "please", "seems", "since", "still",
    "thus", "us", "would", "x", "yet", "like", "make", "much", "need", "well",
});

}  // namespace detail

inline bool is_stopword(std::string_view term) noexcept
{
    static const auto sorted = [] {
        auto words = detail::english_stopwords;
        std::sort(words.begin(), words.end());
        return words;
    }();
    return std::binary_search(sorted.begin(), sorted.end(), term);
}

}  // namespace iqloc
