#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "analyzer.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "method_extractor.hpp"

namespace iqloc {

/// One (context, candidate) input of a cross-encoder style scorer.
struct ScorePair {
    std::string context;
    std::string candidate;
};

/// Scores (context, candidate) pairs into [0, 1]. Implementations must be
/// deterministic and safe to call from several threads at once; batch
/// results must equal element-wise results.
class ScorerBackend {
  public:
    virtual ~ScorerBackend() = default;

    virtual std::string name() const = 0;

    /// Whitespace-token budget for one combined input; 0 means unlimited.
    virtual std::size_t token_budget() const { return 0; }

    virtual std::vector<double> score_batch(std::span<const ScorePair> pairs) const = 0;

    double score(const ScorePair& pair) const { return score_batch(std::span(&pair, 1)).front(); }
};

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

/// Jaccard similarity of two term sets mapped through σ(4·(2J − 1)):
/// J = 1 → 0.982, J = 0.5 → 0.5, J = 0 → 0.018. Two empty sets give 0.5.
inline double lexical_backend_score(std::span<const std::string> report_tokens,
                                    std::span<const std::string> method_tokens)
{
    const std::set<std::string_view> a(report_tokens.begin(), report_tokens.end());
    const std::set<std::string_view> b(method_tokens.begin(), method_tokens.end());
    if (a.empty() && b.empty()) {
        return 0.5;
    }
    std::size_t shared = 0;
    for (auto t : a) {
        shared += b.count(t);
    }
    const double jaccard = static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
    return logistic(4.0 * (2.0 * jaccard - 1.0));
}

/// Deterministic built-in scorer over analyzed, stop-word-free tokens.
class LexicalScorer final : public ScorerBackend {
  public:
    explicit LexicalScorer(AnalyzerMode mode = AnalyzerMode::code) : mode_(mode) {}

    std::string name() const override { return "lexical"; }

    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override
    {
        std::vector<double> scores;
        scores.reserve(pairs.size());
        for (const auto& p : pairs) {
            scores.push_back(lexical_backend_score(query_terms(p.context, mode_), query_terms(p.candidate, mode_)));
        }
        return scores;
    }

  private:
    AnalyzerMode mode_;
};

namespace detail {

/// Whitespace-delimited prefix of at most `budget` tokens.
inline std::string take_tokens(std::string_view text, std::size_t budget, std::size_t& used)
{
    used = 0;
    std::size_t pos = 0;
    std::size_t end = 0;
    while (pos < text.size() && used < budget) {
        while (pos < text.size() && is_space(text[pos])) {
            ++pos;
        }
        if (pos >= text.size()) {
            break;
        }
        while (pos < text.size() && !is_space(text[pos])) {
            ++pos;
        }
        end = pos;
        ++used;
    }
    return std::string(text.substr(0, end));
}

}  // namespace detail

/// Builds the scorer input for a report and a method. Under a token budget
/// the report is kept whole and the method body is cut from the tail; a
/// report that alone exceeds the budget is cut to three quarters of it so
/// the method still contributes.
inline ScorePair make_score_pair(const BugReport& report, const MethodSpan& method, std::size_t budget)
{
    ScorePair pair{report.text(), method.body};
    if (budget == 0) {
        return pair;
    }
    std::size_t report_tokens = 0;
    auto context = detail::take_tokens(pair.context, budget, report_tokens);
    if (report_tokens >= budget) {
        context = detail::take_tokens(pair.context, budget - budget / 4, report_tokens);
    } else {
        context = pair.context;
    }
    std::size_t used = 0;
    pair.candidate = detail::take_tokens(pair.candidate, budget - report_tokens, used);
    pair.context = std::move(context);
    return pair;
}

inline void validate_score_inputs(const BugReport& report, const MethodSpan& method)
{
    if (detail::trim(report.title).empty() && detail::trim(report.description).empty()) {
        throw std::invalid_argument("report " + report.id + " has no title or description to score against");
    }
    if (detail::trim(method.body).empty()) {
        throw std::invalid_argument("method " + method.name + " has an empty body");
    }
}

inline void check_score_range(const ScorerBackend& backend, double score)
{
    if (!(score >= 0.0 && score <= 1.0)) {
        throw TransportError("scorer backend " + backend.name() + " returned a score outside [0, 1]");
    }
}

inline double score_pair(const ScorerBackend& backend, const BugReport& report, const MethodSpan& method)
{
    validate_score_inputs(report, method);
    const double s = backend.score(make_score_pair(report, method, backend.token_budget()));
    check_score_range(backend, s);
    return s;
}

struct ScoredMethod {
    std::string path;
    MethodSpan method;
    double score = 0.0;
};

struct RelevanceThreshold {
    double value = 0.5;

    explicit RelevanceThreshold(double v = 0.5) : value(v)
    {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("relevance threshold must lie in [0, 1]");
        }
    }
};

/// Keeps methods with score >= threshold, in input order.
inline std::vector<ScoredMethod> filter_relevant(std::span<const ScoredMethod> scored, RelevanceThreshold threshold)
{
    std::vector<ScoredMethod> kept;
    for (const auto& s : scored) {
        if (s.score >= threshold.value) {
            kept.push_back(s);
        }
    }
    return kept;
}

/// Document score is the maximum over its methods; a document without
/// methods scores 0.
inline double aggregate_document_score(std::span<const ScoredMethod> methods_of_document)
{
    double best = 0.0;
    for (const auto& s : methods_of_document) {
        best = std::max(best, s.score);
    }
    return best;
}

}  // namespace iqloc
