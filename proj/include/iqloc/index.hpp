#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "analyzer.hpp"
#include "corpus.hpp"
#include "error.hpp"

namespace iqloc {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const
    {
        if (!(k1 > 0.0) || !(b >= 0.0 && b <= 1.0)) {
            throw std::invalid_argument("BM25 parameters out of range: need k1 > 0 and 0 <= b <= 1");
        }
    }

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct DocEntry {
    std::string project;
    std::string version;
    std::string path;

    friend bool operator==(const DocEntry&, const DocEntry&) = default;
};

struct Hit {
    std::string path;
    double score = 0.0;
    std::size_t rank = 0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

struct RankedList {
    std::string query_id;
    std::vector<Hit> hits;

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

inline void to_json(nlohmann::json& j, const Hit& h)
{
    j = nlohmann::json{{"path", h.path}, {"score", h.score}, {"rank", h.rank}};
}

inline void from_json(const nlohmann::json& j, Hit& h)
{
    h.path = j.at("path").get<std::string>();
    h.score = j.at("score").get<double>();
    h.rank = j.at("rank").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const RankedList& r)
{
    j = nlohmann::json{{"query_id", r.query_id}, {"hits", r.hits}};
}

inline void from_json(const nlohmann::json& j, RankedList& r)
{
    r.query_id = j.value("query_id", std::string{});
    r.hits = j.at("hits").get<std::vector<Hit>>();
}

/// Immutable inverted index with Okapi BM25 scoring. Documents keep the
/// ordinals they had in the input sequence; IDF statistics are global over
/// all documents while retrieval is scoped to one (project, version).
class Index {
  public:
    Index() = default;

    /// Builds the index. Throws DataError on an empty document set.
    static Index build(std::span<const SourceDocument> docs, Bm25Params params = {},
                       AnalyzerMode mode = AnalyzerMode::code)
    {
        if (docs.empty()) {
            throw DataError("cannot build an index over zero documents");
        }
        params.validate();
        Index index;
        index.params_ = params;
        index.mode_ = mode;
        index.doc_table_.reserve(docs.size());
        index.doc_lengths_.reserve(docs.size());
        for (std::uint32_t ordinal = 0; ordinal < docs.size(); ++ordinal) {
            const auto& doc = docs[ordinal];
            index.doc_table_.push_back({doc.project, doc.version, doc.path});
            std::map<std::string, std::uint32_t> counts;
            std::uint64_t length = 0;
            for (auto& token : analyze(doc.content, mode)) {
                ++counts[std::move(token.term)];
                ++length;
            }
            index.doc_lengths_.push_back(length);
            for (auto& [term, tf] : counts) {
                index.postings_[term].push_back({ordinal, tf});
            }
        }
        index.finalize();
        return index;
    }

    static Index from_parts(Bm25Params params, AnalyzerMode mode, std::vector<DocEntry> table,
                            std::vector<std::uint64_t> lengths,
                            std::unordered_map<std::string, std::vector<Posting>> postings)
    {
        Index index;
        index.params_ = params;
        index.mode_ = mode;
        index.doc_table_ = std::move(table);
        index.doc_lengths_ = std::move(lengths);
        index.postings_ = std::move(postings);
        if (index.doc_table_.empty() || index.doc_table_.size() != index.doc_lengths_.size()) {
            throw DataError("inconsistent index parts");
        }
        index.finalize();
        return index;
    }

    const Bm25Params& params() const noexcept { return params_; }
    AnalyzerMode analyzer_mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return doc_table_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const std::vector<DocEntry>& doc_table() const noexcept { return doc_table_; }
    const std::vector<std::uint64_t>& doc_lengths() const noexcept { return doc_lengths_; }
    const std::unordered_map<std::string, std::vector<Posting>>& postings() const noexcept { return postings_; }

    std::size_t doc_frequency(std::string_view term) const
    {
        const auto* list = find(term);
        return list ? list->size() : 0;
    }

    std::uint32_t term_frequency(std::string_view term, std::uint32_t doc) const
    {
        const auto* list = find(term);
        if (!list) {
            return 0;
        }
        auto it = std::lower_bound(list->begin(), list->end(), doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        return it != list->end() && it->doc == doc ? it->tf : 0;
    }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    double idf(std::size_t df) const noexcept
    {
        const double n = static_cast<double>(size());
        const double d = static_cast<double>(df);
        return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
    }

    double term_weight(double idf_value, std::uint32_t tf, std::uint32_t doc) const noexcept
    {
        if (tf == 0) {
            return 0.0;
        }
        const double f = tf;
        const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_lengths_[doc]) / avg_doc_length_;
        return idf_value * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
    }

    /// BM25 score of one document; terms are summed in query order, so a
    /// repeated query term counts once per occurrence.
    double score(std::span<const std::string> query, std::uint32_t doc) const
    {
        if (doc >= size()) {
            throw std::out_of_range("document ordinal out of range");
        }
        double total = 0.0;
        for (const auto& term : query) {
            const auto tf = term_frequency(term, doc);
            if (tf != 0) {
                total += term_weight(idf(doc_frequency(term)), tf, doc);
            }
        }
        return total;
    }

    /// Ordinals of the documents of one (project, version), ascending.
    std::span<const std::uint32_t> scope(std::string_view project, std::string_view version) const
    {
        auto it = scopes_.find(std::pair{std::string(project), std::string(version)});
        if (it == scopes_.end()) {
            return {};
        }
        return it->second;
    }

    std::optional<std::uint32_t> ordinal_of(std::string_view project, std::string_view version,
                                            std::string_view path) const
    {
        for (auto ordinal : scope(project, version)) {
            if (doc_table_[ordinal].path == path) {
                return ordinal;
            }
        }
        return std::nullopt;
    }

    /// Scores `candidates` against `query` in term-at-a-time order. The sum
    /// for each document accumulates in query order, matching score().
    std::vector<double> score_candidates(std::span<const std::string> query,
                                         std::span<const std::uint32_t> candidates) const
    {
        std::vector<double> totals(candidates.size(), 0.0);
        if (candidates.empty()) {
            return totals;
        }
        std::unordered_map<std::uint32_t, std::size_t> slot;
        slot.reserve(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            slot.emplace(candidates[i], i);
        }
        for (const auto& term : query) {
            const auto* list = find(term);
            if (!list) {
                continue;
            }
            const double w = idf(list->size());
            if (list->size() < candidates.size()) {
                for (const auto& p : *list) {
                    if (auto s = slot.find(p.doc); s != slot.end()) {
                        totals[s->second] += term_weight(w, p.tf, p.doc);
                    }
                }
            } else {
                for (std::size_t i = 0; i < candidates.size(); ++i) {
                    const auto tf = term_frequency(term, candidates[i]);
                    if (tf != 0) {
                        totals[i] += term_weight(w, tf, candidates[i]);
                    }
                }
            }
        }
        return totals;
    }

    /// Top-k documents of one (project, version). Zero scores are dropped;
    /// ties go to the lexicographically smaller path. An unknown scope gives
    /// an empty list.
    RankedList search(std::span<const std::string> query, std::string_view project, std::string_view version,
                      std::size_t k, std::string query_id = {}) const
    {
        if (k == 0) {
            throw std::invalid_argument("search requires k >= 1");
        }
        const auto candidates = scope(project, version);
        const auto totals = score_candidates(query, candidates);
        std::vector<std::pair<double, std::uint32_t>> scored;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (totals[i] > 0.0) {
                scored.emplace_back(totals[i], candidates[i]);
            }
        }
        auto better = [&](const auto& a, const auto& b) {
            if (a.first != b.first) {
                return a.first > b.first;
            }
            return doc_table_[a.second].path < doc_table_[b.second].path;
        };
        const auto keep = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
        RankedList list{std::move(query_id), {}};
        for (std::size_t i = 0; i < keep; ++i) {
            list.hits.push_back({doc_table_[scored[i].second].path, scored[i].first, i + 1});
        }
        return list;
    }

  private:
    const std::vector<Posting>* find(std::string_view term) const
    {
        auto it = postings_.find(std::string(term));
        return it == postings_.end() ? nullptr : &it->second;
    }

    void finalize()
    {
        std::uint64_t total = 0;
        for (auto len : doc_lengths_) {
            total += len;
        }
        // Zero only when every document is empty, in which case no tf is ever
        // nonzero and term_weight never divides by it.
        avg_doc_length_ = static_cast<double>(total) / static_cast<double>(doc_lengths_.size());
        scopes_.clear();
        for (std::uint32_t ordinal = 0; ordinal < doc_table_.size(); ++ordinal) {
            const auto& e = doc_table_[ordinal];
            scopes_[{e.project, e.version}].push_back(ordinal);
        }
    }

    Bm25Params params_;
    AnalyzerMode mode_ = AnalyzerMode::code;
    std::vector<DocEntry> doc_table_;
    std::vector<std::uint64_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::map<std::pair<std::string, std::string>, std::vector<std::uint32_t>> scopes_;
};

inline Index build_index(std::span<const SourceDocument> docs, Bm25Params params = {},
                         AnalyzerMode mode = AnalyzerMode::code)
{
    return Index::build(docs, params, mode);
}

}  // namespace iqloc
