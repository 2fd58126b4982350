#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "analyzer.hpp"
#include "embedding.hpp"
#include "relevance.hpp"

namespace iqloc {

struct KeywordRequest {
    std::string doc;
    std::size_t n = 15;
    double lambda = 0.5;

    void validate() const
    {
        if (n == 0) {
            throw std::invalid_argument("keyword count must be at least 1");
        }
        if (!(lambda >= 0.0 && lambda <= 1.0)) {
            throw std::invalid_argument("MMR lambda must lie in [0, 1]");
        }
    }
};

/// One selected keyword with the scores it won its round with.
struct Keyword {
    std::string term;
    std::size_t round = 0;  // 1-based selection round
    double s_doc = 0.0;     // similarity to the document
    double s_selected = 0.0;  // max similarity to earlier picks
    double mmr = 0.0;

    friend bool operator==(const Keyword&, const Keyword&) = default;
};

struct KeywordSet {
    std::vector<Keyword> keywords;

    bool empty() const noexcept { return keywords.empty(); }
    std::size_t size() const noexcept { return keywords.size(); }

    std::vector<std::string> terms() const
    {
        std::vector<std::string> out;
        out.reserve(keywords.size());
        for (const auto& k : keywords) {
            out.push_back(k.term);
        }
        return out;
    }

    friend bool operator==(const KeywordSet&, const KeywordSet&) = default;
};

inline void to_json(nlohmann::json& j, const Keyword& k)
{
    j = nlohmann::json{{"term", k.term}, {"round", k.round}, {"s_d", k.s_doc}, {"s_k", k.s_selected}, {"mmr", k.mmr}};
}

/// Distinct candidate terms of a text in first-occurrence order: analyzed,
/// with stop words and pure numbers removed.
inline std::vector<std::string> preprocess(std::string_view doc, AnalyzerMode mode = AnalyzerMode::code)
{
    std::vector<std::string> terms;
    std::set<std::string, std::less<>> seen;
    for (auto& token : analyze(doc, mode)) {
        if (is_stopword(token.term) || is_number(token.term)) {
            continue;
        }
        if (seen.insert(token.term).second) {
            terms.push_back(std::move(token.term));
        }
    }
    return terms;
}

/// Greedy maximal-marginal-relevance selection over given candidates.
///
/// Each round scores the remaining candidates with
///   mmr = λ·cos(term, doc) − (1 − λ)·max_{k ∈ selected} cos(term, k)
/// (the penalty is 0 before anything is selected) and moves the argmax into
/// the selection. Exact ties go to the lexicographically smallest term. The
/// loop stops after `n` picks or when candidates run out.
inline KeywordSet mmr_select(std::span<const std::string> candidates, std::span<const Vector> token_vectors,
                             std::span<const double> doc_vector, std::size_t n, double lambda)
{
    if (candidates.size() != token_vectors.size()) {
        throw std::invalid_argument("mmr_select: one vector per candidate required");
    }
    KeywordSet result;
    std::vector<double> s_doc(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        s_doc[i] = cosine_similarity(token_vectors[i], doc_vector);
    }
    // Running max similarity to the selected set, updated once per pick.
    std::vector<double> s_sel(candidates.size(), 0.0);
    std::vector<bool> remaining(candidates.size(), true);

    while (result.size() < n && result.size() < candidates.size()) {
        std::size_t best = candidates.size();
        double best_mmr = 0.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!remaining[i]) {
                continue;
            }
            const double mmr = lambda * s_doc[i] - (1.0 - lambda) * s_sel[i];
            if (best == candidates.size() || mmr > best_mmr
                || (mmr == best_mmr && candidates[i] < candidates[best])) {
                best = i;
                best_mmr = mmr;
            }
        }
        remaining[best] = false;
        result.keywords.push_back({candidates[best], result.size() + 1, s_doc[best], s_sel[best], best_mmr});
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (remaining[i]) {
                const double sim = cosine_similarity(token_vectors[i], token_vectors[best]);
                s_sel[i] = result.size() == 1 ? sim : std::max(s_sel[i], sim);
            }
        }
    }
    return result;
}

/// Keywords of a document: its preprocessed terms and the whole document
/// are embedded once, then mmr_select picks `n` of them.
inline KeywordSet extract_keywords(const KeywordRequest& req, const EmbeddingBackend& backend,
                                   AnalyzerMode mode = AnalyzerMode::code)
{
    req.validate();
    const auto candidates = preprocess(req.doc, mode);
    if (candidates.empty()) {
        return {};
    }
    const auto token_vectors = backend.embed_batch(candidates);
    const auto doc_vector = backend.embed(req.doc);
    return mmr_select(candidates, token_vectors, doc_vector, req.n, req.lambda);
}

/// Keywords of the relevant code: method bodies concatenated in
/// (path, start_line) order, newline-separated, then extract_keywords.
inline KeywordSet keywords_from_code(std::span<const ScoredMethod> relevant, std::size_t n, double lambda,
                                     const EmbeddingBackend& backend, AnalyzerMode mode = AnalyzerMode::code)
{
    if (relevant.empty()) {
        return {};
    }
    std::vector<const ScoredMethod*> ordered;
    for (const auto& m : relevant) {
        ordered.push_back(&m);
    }
    std::sort(ordered.begin(), ordered.end(), [](const ScoredMethod* a, const ScoredMethod* b) {
        return std::tie(a->path, a->method.start_line, a->method.end_line, a->method.name)
               < std::tie(b->path, b->method.start_line, b->method.end_line, b->method.name);
    });
    KeywordRequest req;
    req.n = n;
    req.lambda = lambda;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (i != 0) {
            req.doc.push_back('\n');
        }
        req.doc += ordered[i]->method.body;
    }
    return extract_keywords(req, backend, mode);
}

}  // namespace iqloc
