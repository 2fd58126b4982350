#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "embedding.hpp"
#include "keywords.hpp"

namespace iqloc {

enum class Provenance { report, code, both };

inline std::string_view to_string(Provenance p) noexcept
{
    switch (p) {
    case Provenance::report:
        return "report";
    case Provenance::code:
        return "code";
    case Provenance::both:
        return "both";
    }
    return "report";
}

struct ReformulationParams {
    double tau = 0.5;
    std::size_t max_len = 15;
    double cap_factor = 1.5;

    void validate() const
    {
        if (!(tau >= 0.0 && tau <= 1.0)) {
            throw std::invalid_argument("reformulation tau must lie in [0, 1]");
        }
        if (max_len == 0) {
            throw std::invalid_argument("reformulation max_len must be at least 1");
        }
        if (!(cap_factor >= 1.0)) {
            throw std::invalid_argument("reformulation cap_factor must be >= 1");
        }
    }

    /// Total length bound: ⌈cap_factor · max_len⌉.
    std::size_t cap() const { return static_cast<std::size_t>(std::ceil(cap_factor * static_cast<double>(max_len))); }
};

struct QueryTerm {
    std::string term;
    Provenance provenance = Provenance::report;
    double similarity = 1.0;  // for code terms: best cosine to a report term

    friend bool operator==(const QueryTerm&, const QueryTerm&) = default;
};

struct ReformulatedQuery {
    std::vector<QueryTerm> terms;
    ReformulationParams params;

    std::vector<std::string> term_strings() const
    {
        std::vector<std::string> out;
        out.reserve(terms.size());
        for (const auto& t : terms) {
            out.push_back(t.term);
        }
        return out;
    }
};

inline void to_json(nlohmann::json& j, const QueryTerm& t)
{
    j = nlohmann::json{{"term", t.term}, {"provenance", std::string(to_string(t.provenance))}};
    if (t.provenance == Provenance::code) {
        j["similarity"] = t.similarity;
    }
}

/// Fuses report and code keywords into the search query.
///
/// The report keywords (selection order, first max_len) form the base. A
/// code keyword equal to a base term marks it `both`. Every other code
/// keyword whose best cosine to a base term reaches tau is appended as
/// `code`, most similar first, until the query holds cap() terms.
inline ReformulatedQuery reformulate_query(const KeywordSet& report_kw, const KeywordSet& code_kw,
                                           const EmbeddingBackend& backend, ReformulationParams params = {})
{
    params.validate();
    if (report_kw.empty()) {
        throw std::invalid_argument("cannot reformulate: the report produced no keyword candidates");
    }
    ReformulatedQuery query;
    query.params = params;
    std::map<std::string, std::size_t> position;
    for (const auto& k : report_kw.keywords) {
        if (query.terms.size() == params.max_len) {
            break;
        }
        if (position.emplace(k.term, query.terms.size()).second) {
            query.terms.push_back({k.term, Provenance::report, 1.0});
        }
    }
    if (code_kw.empty()) {
        return query;
    }

    std::vector<std::string> extra;
    std::set<std::string> extra_seen;
    for (const auto& k : code_kw.keywords) {
        if (auto it = position.find(k.term); it != position.end()) {
            query.terms[it->second].provenance = Provenance::both;
        } else if (extra_seen.insert(k.term).second) {
            extra.push_back(k.term);
        }
    }
    if (extra.empty()) {
        return query;
    }

    const auto base_terms = query.term_strings();
    const auto base_vectors = backend.embed_batch(base_terms);
    const auto extra_vectors = backend.embed_batch(extra);
    struct Candidate {
        std::size_t order;
        double similarity;
    };
    std::vector<Candidate> accepted;
    for (std::size_t i = 0; i < extra.size(); ++i) {
        double best = -1.0;
        for (const auto& bv : base_vectors) {
            best = std::max(best, cosine_similarity(extra_vectors[i], bv));
        }
        if (best >= params.tau) {
            accepted.push_back({i, best});
        }
    }
    std::stable_sort(accepted.begin(), accepted.end(),
                     [](const Candidate& a, const Candidate& b) { return a.similarity > b.similarity; });
    const auto cap = params.cap();
    for (const auto& c : accepted) {
        if (query.terms.size() >= cap) {
            break;
        }
        query.terms.push_back({extra[c.order], Provenance::code, c.similarity});
    }
    return query;
}

}  // namespace iqloc
