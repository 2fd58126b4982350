#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace iqloc {

/// A ranked list of paths for one query together with its ground truth.
struct EvalRecord {
    std::string query_id;
    std::vector<std::string> ranked;
    std::set<std::string> truth;

    void validate() const
    {
        if (truth.empty()) {
            throw std::invalid_argument("query " + query_id + " has an empty ground truth");
        }
        const std::set<std::string_view> unique(ranked.begin(), ranked.end());
        if (unique.size() != ranked.size()) {
            throw std::invalid_argument("query " + query_id + " has duplicate ranked paths");
        }
    }

    bool relevant_at(std::size_t position) const
    {
        return position < ranked.size() && truth.contains(ranked[position]);
    }
};

/// (1/|D|) Σ_{k≤K} P_k·B_k. Divides by the full ground-truth size even
/// when K < |D|. Positions past the end of the list count as non-relevant.
inline double average_precision(const EvalRecord& record, std::size_t k)
{
    record.validate();
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < std::min(k, record.ranked.size()); ++i) {
        if (record.relevant_at(i)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(record.truth.size());
}

/// 1/rank of the first relevant path, 0 when none is listed.
inline double reciprocal_rank(const EvalRecord& record)
{
    record.validate();
    for (std::size_t i = 0; i < record.ranked.size(); ++i) {
        if (record.relevant_at(i)) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

inline bool hit_in_top(const EvalRecord& record, std::size_t k)
{
    record.validate();
    for (std::size_t i = 0; i < std::min(k, record.ranked.size()); ++i) {
        if (record.relevant_at(i)) {
            return true;
        }
    }
    return false;
}

inline double precision_at(const EvalRecord& record, std::size_t k)
{
    record.validate();
    if (k == 0) {
        throw std::invalid_argument("precision@K needs K >= 1");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, record.ranked.size()); ++i) {
        hits += record.relevant_at(i) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

namespace detail {

template <typename F>
double mean_over(std::span<const EvalRecord> records, F per_record)
{
    if (records.empty()) {
        throw std::invalid_argument("metrics need at least one record");
    }
    double sum = 0.0;
    for (const auto& r : records) {
        sum += per_record(r);
    }
    return sum / static_cast<double>(records.size());
}

}  // namespace detail

inline double mean_average_precision(std::span<const EvalRecord> records, std::size_t k)
{
    return detail::mean_over(records, [k](const EvalRecord& r) { return average_precision(r, k); });
}

inline double mean_reciprocal_rank(std::span<const EvalRecord> records)
{
    return detail::mean_over(records, [](const EvalRecord& r) { return reciprocal_rank(r); });
}

inline double hit_at_k(std::span<const EvalRecord> records, std::size_t k)
{
    return detail::mean_over(records, [k](const EvalRecord& r) { return hit_in_top(r, k) ? 1.0 : 0.0; });
}

inline double precision_at_k(std::span<const EvalRecord> records, std::size_t k)
{
    return detail::mean_over(records, [k](const EvalRecord& r) { return precision_at(r, k); });
}

struct MetricReport {
    std::size_t queries = 0;
    std::size_t map_k = 0;
    double map = 0.0;
    double mrr = 0.0;
    std::map<std::size_t, double> hit;
    std::map<std::size_t, double> precision;
    std::vector<std::string> query_ids;
    std::vector<double> ap;
    std::vector<double> rr;
};

/// Evaluates a record set. AP uses cutoff `map_k`, where 0 means the whole
/// ranked list of each record.
inline MetricReport evaluate(std::span<const EvalRecord> records, std::span<const std::size_t> ks,
                             std::size_t map_k = 0)
{
    if (records.empty()) {
        throw std::invalid_argument("metrics need at least one record");
    }
    MetricReport report;
    report.queries = records.size();
    report.map_k = map_k;
    for (const auto& r : records) {
        report.query_ids.push_back(r.query_id);
        report.ap.push_back(average_precision(r, map_k == 0 ? r.ranked.size() : map_k));
        report.rr.push_back(reciprocal_rank(r));
    }
    const auto n = static_cast<double>(records.size());
    for (double v : report.ap) {
        report.map += v;
    }
    for (double v : report.rr) {
        report.mrr += v;
    }
    report.map /= n;
    report.mrr /= n;
    for (auto k : ks) {
        if (k == 0) {
            throw std::invalid_argument("cutoffs must be at least 1");
        }
        report.hit[k] = hit_at_k(records, k);
        report.precision[k] = precision_at_k(records, k);
    }
    return report;
}

inline void to_json(nlohmann::json& j, const MetricReport& m)
{
    j = nlohmann::json{{"queries", m.queries}, {"map_k", m.map_k}, {"map", m.map}, {"mrr", m.mrr}};
    for (const auto& [k, v] : m.hit) {
        j["hit@" + std::to_string(k)] = v;
    }
    for (const auto& [k, v] : m.precision) {
        j["precision@" + std::to_string(k)] = v;
    }
    auto per_query = nlohmann::json::array();
    for (std::size_t i = 0; i < m.query_ids.size(); ++i) {
        per_query.push_back({{"query_id", m.query_ids[i]}, {"ap", m.ap[i]}, {"rr", m.rr[i]}});
    }
    j["per_query"] = per_query;
}

struct LabeledScore {
    double score = 0.0;
    int label = 0;  // 1 positive, 0 negative
};

struct ConfusionCounts {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

struct ConfusionMetrics {
    double threshold = 0.5;
    ConfusionCounts counts;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline ConfusionMetrics metrics_from_counts(const ConfusionCounts& c, double threshold = 0.5)
{
    ConfusionMetrics m{threshold, c};
    const auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

/// Predicts positive when score >= threshold.
inline ConfusionMetrics confusion_metrics(std::span<const LabeledScore> scored, double threshold)
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("threshold must lie in [0, 1]");
    }
    ConfusionCounts c;
    for (const auto& s : scored) {
        if (s.label != 0 && s.label != 1) {
            throw std::invalid_argument("labels must be 0 or 1");
        }
        const bool predicted = s.score >= threshold;
        if (predicted) {
            ++(s.label == 1 ? c.tp : c.fp);
        } else {
            ++(s.label == 1 ? c.fn : c.tn);
        }
    }
    return metrics_from_counts(c, threshold);
}

inline void to_json(nlohmann::json& j, const ConfusionMetrics& m)
{
    j = nlohmann::json{{"threshold", m.threshold},
                       {"tp", m.counts.tp},
                       {"tn", m.counts.tn},
                       {"fp", m.counts.fp},
                       {"fn", m.counts.fn},
                       {"accuracy", m.accuracy},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1}};
}

struct WilcoxonResult {
    double statistic = 0.0;  // T+, the rank sum of positive (baseline - treatment) differences
    double p_value = 1.0;
    std::size_t n = 0;  // pairs left after dropping zero differences
    bool exact = true;
};

namespace detail {

/// Average ranks (1-based) of |d|, ties sharing the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> magnitudes)
{
    std::vector<std::size_t> order(magnitudes.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return magnitudes[a] < magnitudes[b]; });
    std::vector<double> ranks(magnitudes.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && magnitudes[order[j + 1]] == magnitudes[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace detail

inline constexpr std::size_t wilcoxon_exact_limit = 25;

/// One-sided signed-rank test of "baseline < treatment". Differences are
/// baseline - treatment; zero differences are dropped and tied magnitudes
/// get average ranks. The p-value is P(T+ <= observed) under the null:
/// exact up to 25 pairs (counting sign assignments over doubled ranks, so
/// half ranks from ties stay integral), normal approximation with
/// continuity and tie correction beyond.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> baseline, std::span<const double> treatment)
{
    if (baseline.size() != treatment.size()) {
        throw std::invalid_argument("wilcoxon: samples must be paired (equal length)");
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        const double d = baseline[i] - treatment[i];
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    if (diffs.empty()) {
        throw std::invalid_argument("wilcoxon: all differences are zero");
    }
    if (diffs.size() < 5) {
        throw std::invalid_argument("wilcoxon: needs at least 5 non-zero differences, got " +
                                    std::to_string(diffs.size()));
    }
    std::vector<double> magnitudes;
    for (double d : diffs) {
        magnitudes.push_back(std::abs(d));
    }
    const auto ranks = detail::average_ranks(magnitudes);
    WilcoxonResult result;
    result.n = diffs.size();
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0.0) {
            result.statistic += ranks[i];
        }
    }
    const auto n = static_cast<double>(result.n);
    if (result.n <= wilcoxon_exact_limit) {
        std::vector<std::size_t> doubled;
        std::size_t total = 0;
        for (double r : ranks) {
            doubled.push_back(static_cast<std::size_t>(std::lround(2.0 * r)));
            total += doubled.back();
        }
        std::vector<double> ways(total + 1, 0.0);
        ways[0] = 1.0;
        for (auto r : doubled) {
            for (std::size_t s = total; s >= r; --s) {
                ways[s] += ways[s - r];
                if (s == r) {
                    break;
                }
            }
        }
        const auto observed = static_cast<std::size_t>(std::lround(2.0 * result.statistic));
        double count = 0.0;
        for (std::size_t s = 0; s <= observed; ++s) {
            count += ways[s];
        }
        result.p_value = count / std::ldexp(1.0, static_cast<int>(result.n));
        result.exact = true;
    } else {
        double tie_term = 0.0;
        std::map<double, std::size_t> groups;
        for (double r : ranks) {
            ++groups[r];
        }
        for (const auto& [r, t] : groups) {
            const auto tt = static_cast<double>(t);
            tie_term += tt * tt * tt - tt;
        }
        const double mean = n * (n + 1.0) / 4.0;
        const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
        const double z = (result.statistic - mean + 0.5) / std::sqrt(var);
        result.p_value = std::min(1.0, detail::normal_cdf(z));
        result.exact = false;
    }
    return result;
}

enum class EffectMagnitude { negligible, small, medium, large, very_large };

inline std::string_view to_string(EffectMagnitude m) noexcept
{
    switch (m) {
    case EffectMagnitude::negligible:
        return "negligible";
    case EffectMagnitude::small:
        return "small";
    case EffectMagnitude::medium:
        return "medium";
    case EffectMagnitude::large:
        return "large";
    case EffectMagnitude::very_large:
        return "very large";
    }
    return "negligible";
}

/// |δ| < 0.147 negligible, < 0.33 small, < 0.474 medium, <= 0.71 large,
/// above that very large.
inline EffectMagnitude effect_magnitude(double delta) noexcept
{
    const double a = std::abs(delta);
    if (a < 0.147) {
        return EffectMagnitude::negligible;
    }
    if (a < 0.33) {
        return EffectMagnitude::small;
    }
    if (a < 0.474) {
        return EffectMagnitude::medium;
    }
    if (a <= 0.71) {
        return EffectMagnitude::large;
    }
    return EffectMagnitude::very_large;
}

struct CliffsDelta {
    double delta = 0.0;
    EffectMagnitude magnitude = EffectMagnitude::negligible;
};

/// (#{x_i > y_j} − #{x_i < y_j}) / (|x|·|y|), computed by sorting y and
/// binary searching each x.
inline CliffsDelta cliffs_delta(std::span<const double> x, std::span<const double> y)
{
    if (x.empty() || y.empty()) {
        throw std::invalid_argument("cliffs_delta: both samples must be non-empty");
    }
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    std::int64_t balance = 0;
    for (double v : x) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), v);
        balance += below - above;
    }
    CliffsDelta out;
    out.delta = static_cast<double>(balance) / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
    out.magnitude = effect_magnitude(out.delta);
    return out;
}

}  // namespace iqloc
