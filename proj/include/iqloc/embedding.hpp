#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "analyzer.hpp"
#include "detail/hash.hpp"

namespace iqloc {

using Vector = std::vector<double>;

/// u·v / (‖u‖‖v‖). Throws on mismatched dimensions or a zero vector.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw std::invalid_argument("cosine_similarity: zero vector");
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

/// Embeds text into a fixed-dimension real space. Implementations are
/// deterministic, never return the zero vector for non-empty text and are
/// safe to call concurrently.
class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const = 0;

    Vector embed(std::string_view text) const
    {
        const std::string owned(text);
        return embed_batch(std::span(&owned, 1)).front();
    }
};

namespace detail {

/// Content terms used by the built-in embedders: analyzed, stop words and
/// pure numbers removed, multiplicity kept.
inline std::vector<std::string> content_terms(std::string_view text)
{
    std::vector<std::string> terms;
    for (auto& token : analyze(text, AnalyzerMode::code)) {
        if (!is_stopword(token.term) && !is_number(token.term)) {
            terms.push_back(std::move(token.term));
        }
    }
    return terms;
}

inline void guard_nonzero(Vector& v)
{
    double norm = 0.0;
    for (double x : v) {
        norm += x * x;
    }
    if (!(norm > 1e-24) && !v.empty()) {
        v[0] += 1e-6;
    }
}

inline void normalize(Vector& v)
{
    double norm = 0.0;
    for (double x : v) {
        norm += x * x;
    }
    if (norm > 0.0) {
        const double inv = 1.0 / std::sqrt(norm);
        for (double& x : v) {
            x *= inv;
        }
    }
}

}  // namespace detail

/// Hashed random projection of character-trigram features. Each trigram of
/// `<term>` owns a pseudo-random direction seeded by its bytes; a term is
/// the normalized sum of its trigram directions, and a text is the sum of
/// its term vectors. Terms sharing character material therefore land close.
class HashedEmbedding final : public EmbeddingBackend {
  public:
    explicit HashedEmbedding(std::size_t dimension = 16) : dimension_(dimension)
    {
        if (dimension == 0) {
            throw std::invalid_argument("embedding dimension must be positive");
        }
    }

    std::string name() const override { return "hashed"; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override
    {
        std::vector<Vector> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            out.push_back(embed_text(text));
        }
        return out;
    }

    Vector term_vector(std::string_view term) const
    {
        Vector v(dimension_, 0.0);
        const std::string marked = "<" + std::string(term) + ">";
        for (std::size_t i = 0; i + 3 <= marked.size(); ++i) {
            std::uint64_t state = detail::fnv1a64(std::string_view(marked).substr(i, 3));
            for (auto& x : v) {
                x += detail::unit_symmetric(detail::splitmix64(state));
            }
        }
        detail::normalize(v);
        return v;
    }

  private:
    Vector embed_text(std::string_view text) const
    {
        auto terms = detail::content_terms(text);
        if (terms.empty()) {
            const auto trimmed = detail::ascii_lowercase(text);
            if (!trimmed.empty()) {
                terms.push_back(trimmed);
            }
        }
        Vector v(dimension_, 0.0);
        for (const auto& term : terms) {
            const auto tv = term_vector(term);
            for (std::size_t i = 0; i < dimension_; ++i) {
                v[i] += tv[i];
            }
        }
        detail::guard_nonzero(v);
        return v;
    }

    std::size_t dimension_;
};

/// TF-IDF weighted co-occurrence embedding fitted on a text collection.
/// A term vector is a hashed signed projection of its own identity plus the
/// IDF-weighted terms seen within `window` positions of it; a text is the
/// TF-IDF weighted sum of its term vectors. Terms unseen at fit time fall
/// back to their identity component.
class CooccurrenceEmbedding final : public EmbeddingBackend {
  public:
    static CooccurrenceEmbedding fit(std::span<const std::string> texts, std::size_t dimension = 128,
                                     std::size_t window = 5)
    {
        if (dimension == 0) {
            throw std::invalid_argument("embedding dimension must be positive");
        }
        CooccurrenceEmbedding model(dimension);
        std::vector<std::vector<std::string>> tokenized;
        tokenized.reserve(texts.size());
        std::map<std::string, std::size_t> df;
        for (const auto& text : texts) {
            tokenized.push_back(detail::content_terms(text));
            std::vector<std::string> unique = tokenized.back();
            std::sort(unique.begin(), unique.end());
            unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
            for (auto& t : unique) {
                ++df[t];
            }
        }
        const double n = static_cast<double>(std::max<std::size_t>(texts.size(), 1));
        model.max_idf_ = std::log(1.0 + n / 0.5);
        for (const auto& [term, count] : df) {
            model.idf_[term] = std::log(1.0 + n / (static_cast<double>(count) + 0.5));
        }
        for (const auto& tokens : tokenized) {
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                auto [it, inserted] = model.vectors_.try_emplace(tokens[i], Vector(dimension, 0.0));
                auto& v = it->second;
                if (inserted) {
                    model.add_feature(v, tokens[i], 2.0 * model.idf(tokens[i]));
                }
                const std::size_t lo = i >= window ? i - window : 0;
                const std::size_t hi = std::min(tokens.size(), i + window + 1);
                for (std::size_t j = lo; j < hi; ++j) {
                    if (j != i && tokens[j] != tokens[i]) {
                        model.add_feature(v, tokens[j], model.idf(tokens[j]));
                    }
                }
            }
        }
        for (auto& [term, v] : model.vectors_) {
            detail::normalize(v);
        }
        return model;
    }

    std::string name() const override { return "tfidf"; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override
    {
        std::vector<Vector> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            out.push_back(embed_text(text));
        }
        return out;
    }

    double idf(const std::string& term) const
    {
        auto it = idf_.find(term);
        return it == idf_.end() ? max_idf_ : it->second;
    }

  private:
    explicit CooccurrenceEmbedding(std::size_t dimension) : dimension_(dimension) {}

    void add_feature(Vector& v, std::string_view feature, double weight) const
    {
        const auto h = detail::fnv1a64(feature);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v[h % dimension_] += sign * weight;
    }

    Vector term_vector(const std::string& term) const
    {
        if (auto it = vectors_.find(term); it != vectors_.end()) {
            return it->second;
        }
        Vector v(dimension_, 0.0);
        add_feature(v, term, 1.0);
        return v;
    }

    Vector embed_text(std::string_view text) const
    {
        auto terms = detail::content_terms(text);
        if (terms.empty()) {
            const auto lowered = detail::ascii_lowercase(text);
            if (!lowered.empty()) {
                terms.push_back(lowered);
            }
        }
        std::map<std::string, std::size_t> tf;
        for (auto& t : terms) {
            ++tf[t];
        }
        Vector v(dimension_, 0.0);
        for (const auto& [term, count] : tf) {
            const double w = static_cast<double>(count) * idf(term);
            const auto tv = term_vector(term);
            for (std::size_t i = 0; i < dimension_; ++i) {
                v[i] += w * tv[i];
            }
        }
        detail::guard_nonzero(v);
        return v;
    }

    std::size_t dimension_;
    double max_idf_ = 1.0;
    std::unordered_map<std::string, double> idf_;
    std::unordered_map<std::string, Vector> vectors_;
};

/// Exact text → vector lookup. Used to pin embeddings in tests and worked
/// examples; unknown texts are an error.
class TableEmbedding final : public EmbeddingBackend {
  public:
    TableEmbedding(std::size_t dimension, std::map<std::string, Vector> table)
        : dimension_(dimension), table_(std::move(table))
    {
        for (const auto& [text, v] : table_) {
            if (v.size() != dimension_) {
                throw std::invalid_argument("table embedding for '" + text + "' has the wrong dimension");
            }
        }
    }

    std::string name() const override { return "table"; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override
    {
        std::vector<Vector> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            auto it = table_.find(text);
            if (it == table_.end()) {
                throw std::out_of_range("no table embedding for '" + text + "'");
            }
            out.push_back(it->second);
        }
        return out;
    }

  private:
    std::size_t dimension_;
    std::map<std::string, Vector> table_;
};

}  // namespace iqloc
