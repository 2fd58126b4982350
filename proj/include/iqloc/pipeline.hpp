#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "embedding.hpp"
#include "index.hpp"
#include "index_io.hpp"
#include "keywords.hpp"
#include "reformulate.hpp"
#include "relevance.hpp"
#include "remote.hpp"

namespace iqloc {

struct PipelineConfig {
    std::size_t top_k_initial = 100;
    AnalyzerMode analyzer = AnalyzerMode::code;
    Bm25Params bm25;
    double relevance_threshold = 0.5;
    std::string scorer_backend = "lexical";  // lexical | remote
    std::size_t scorer_batch_size = 32;
    std::size_t token_budget = 512;
    std::size_t keyword_n = 15;
    double keyword_lambda = 0.5;
    ReformulationParams reformulate;
    std::string embedding_backend = "tfidf";  // hashed | tfidf | remote
    std::size_t embedding_dimension = 128;
    RemoteConfig remote;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (top_k_initial == 0) {
            throw std::invalid_argument("top_k_initial must be at least 1");
        }
        bm25.validate();
        RelevanceThreshold{relevance_threshold};
        KeywordRequest{{}, keyword_n, keyword_lambda}.validate();
        reformulate.validate();
        if (scorer_backend != "lexical" && scorer_backend != "remote") {
            throw std::invalid_argument("unknown scorer backend: " + scorer_backend);
        }
        if (embedding_backend != "hashed" && embedding_backend != "tfidf" && embedding_backend != "remote") {
            throw std::invalid_argument("unknown embedding backend: " + embedding_backend);
        }
        if (embedding_dimension == 0) {
            throw std::invalid_argument("embedding dimension must be positive");
        }
    }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c)
{
    j = nlohmann::json{
        {"top_k_initial", c.top_k_initial},
        {"analyzer", std::string(to_string(c.analyzer))},
        {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}},
        {"relevance",
         {{"threshold", c.relevance_threshold},
          {"backend", c.scorer_backend},
          {"batch_size", c.scorer_batch_size},
          {"token_budget", c.token_budget}}},
        {"keywords", {{"n", c.keyword_n}, {"lambda", c.keyword_lambda}}},
        {"reformulate",
         {{"tau", c.reformulate.tau}, {"max_len", c.reformulate.max_len}, {"cap_factor", c.reformulate.cap_factor}}},
        {"embedding", {{"backend", c.embedding_backend}, {"dimension", c.embedding_dimension}}},
        {"remote", {{"url", c.remote.url}, {"timeout_ms", c.remote.timeout.count()}}},
        {"seed", c.seed},
    };
}

/// Missing keys keep their defaults; unknown keys are rejected so typos
/// do not silently fall back.
inline void from_json(const nlohmann::json& j, PipelineConfig& c)
{
    static const std::map<std::string, std::vector<std::string>> known = {
        {"top_k_initial", {}},
        {"analyzer", {}},
        {"bm25", {"k1", "b"}},
        {"relevance", {"threshold", "backend", "batch_size", "token_budget"}},
        {"keywords", {"n", "lambda"}},
        {"reformulate", {"tau", "max_len", "cap_factor"}},
        {"embedding", {"backend", "dimension"}},
        {"remote", {"url", "timeout_ms"}},
        {"seed", {}},
    };
    if (!j.is_object()) {
        throw DataError("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        auto it = known.find(key);
        if (it == known.end()) {
            throw DataError("unknown config key: " + key);
        }
        if (!it->second.empty()) {
            if (!value.is_object()) {
                throw DataError("config key " + key + " must be an object");
            }
            for (const auto& [sub, unused] : value.items()) {
                if (std::find(it->second.begin(), it->second.end(), sub) == it->second.end()) {
                    throw DataError("unknown config key: " + key + "." + sub);
                }
            }
        }
    }
    try {
        c.top_k_initial = j.value("top_k_initial", c.top_k_initial);
        c.analyzer = analyzer_mode_from_string(j.value("analyzer", std::string(to_string(c.analyzer))));
        const auto sub = [&](const char* key) { return j.contains(key) ? j[key] : nlohmann::json::object(); };
        const auto bm25 = sub("bm25");
        c.bm25.k1 = bm25.value("k1", c.bm25.k1);
        c.bm25.b = bm25.value("b", c.bm25.b);
        const auto rel = sub("relevance");
        c.relevance_threshold = rel.value("threshold", c.relevance_threshold);
        c.scorer_backend = rel.value("backend", c.scorer_backend);
        c.scorer_batch_size = rel.value("batch_size", c.scorer_batch_size);
        c.token_budget = rel.value("token_budget", c.token_budget);
        const auto kw = sub("keywords");
        c.keyword_n = kw.value("n", c.keyword_n);
        c.keyword_lambda = kw.value("lambda", c.keyword_lambda);
        const auto ref = sub("reformulate");
        c.reformulate.tau = ref.value("tau", c.reformulate.tau);
        c.reformulate.max_len = ref.value("max_len", c.reformulate.max_len);
        c.reformulate.cap_factor = ref.value("cap_factor", c.reformulate.cap_factor);
        const auto emb = sub("embedding");
        c.embedding_backend = emb.value("backend", c.embedding_backend);
        c.embedding_dimension = emb.value("dimension", c.embedding_dimension);
        const auto remote = sub("remote");
        c.remote.url = remote.value("url", c.remote.url);
        c.remote.timeout = std::chrono::milliseconds(remote.value("timeout_ms", c.remote.timeout.count()));
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("invalid config: ") + e.what());
    }
}

/// Reads a config file; IQLOC_BACKEND_URL, when set, overrides remote.url.
inline PipelineConfig load_config(const std::filesystem::path& path)
{
    PipelineConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw DataError("cannot open config file: " + path.string());
        }
        try {
            config = nlohmann::json::parse(in).get<PipelineConfig>();
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(std::string("config is not valid JSON: ") + e.what());
        }
    }
    if (const char* url = std::getenv("IQLOC_BACKEND_URL"); url && *url) {
        config.remote.url = url;
    }
    return config;
}

/// Non-owning view of the two model backends a run uses.
struct Backends {
    const ScorerBackend& scorer;
    const EmbeddingBackend& embedder;
};

/// Owns backends built from a config.
struct BackendSet {
    std::unique_ptr<ScorerBackend> scorer;
    std::unique_ptr<EmbeddingBackend> embedder;

    Backends view() const { return {*scorer, *embedder}; }
};

/// Constructs the configured backends. The co-occurrence embedder is fitted
/// on the documents of `bundle`.
inline BackendSet make_backends(const PipelineConfig& config, const IndexBundle& bundle)
{
    BackendSet set;
    RemoteConfig remote = config.remote;
    remote.batch_size = config.scorer_batch_size;
    if (config.scorer_backend == "remote") {
        set.scorer = std::make_unique<RemoteScorer>(remote, config.token_budget);
    } else {
        set.scorer = std::make_unique<LexicalScorer>(bundle.index.analyzer_mode());
    }
    if (config.embedding_backend == "hashed") {
        set.embedder = std::make_unique<HashedEmbedding>(config.embedding_dimension);
    } else if (config.embedding_backend == "remote") {
        set.embedder = std::make_unique<RemoteEmbedding>(remote);
    } else {
        std::vector<std::string> texts;
        texts.reserve(bundle.documents.size());
        for (const auto& d : bundle.documents) {
            texts.push_back(d.content);
        }
        set.embedder = std::make_unique<CooccurrenceEmbedding>(
            CooccurrenceEmbedding::fit(texts, config.embedding_dimension));
    }
    return set;
}

struct MethodScore {
    std::string path;
    std::string method;
    std::size_t start_line = 0;
    std::size_t end_line = 0;
    double score = 0.0;
    bool relevant = false;
};

struct StageTimings {
    double retrieve_ms = 0.0;
    double score_ms = 0.0;
    double filter_ms = 0.0;
    double keywords_ms = 0.0;
    double reformulate_ms = 0.0;
    double rerank_ms = 0.0;
};

struct LocalizationResult {
    std::string report_id;
    std::vector<std::string> initial_query;
    RankedList initial;
    std::vector<MethodScore> method_scores;
    KeywordSet report_keywords;
    KeywordSet code_keywords;
    ReformulatedQuery query;
    RankedList final_ranking;
    bool baseline = false;
    StageTimings timings;
};

/// Serializes a result. Timings live under their own key so comparisons can
/// drop them.
inline nlohmann::json to_json(const LocalizationResult& r, bool include_timings = true)
{
    auto methods = nlohmann::json::array();
    for (const auto& m : r.method_scores) {
        methods.push_back({{"path", m.path},
                           {"method", m.method},
                           {"start_line", m.start_line},
                           {"end_line", m.end_line},
                           {"score", m.score},
                           {"relevant", m.relevant}});
    }
    nlohmann::json j{
        {"report_id", r.report_id},
        {"mode", r.baseline ? "baseline" : "full"},
        {"initial_query", r.initial_query},
        {"initial", r.initial.hits},
        {"method_scores", methods},
        {"report_keywords", r.report_keywords.keywords},
        {"code_keywords", r.code_keywords.keywords},
        {"query", r.query.terms},
        {"final", r.final_ranking.hits},
    };
    if (include_timings) {
        j["timings_ms"] = {{"retrieve", r.timings.retrieve_ms},       {"score", r.timings.score_ms},
                           {"filter", r.timings.filter_ms},           {"keywords", r.timings.keywords_ms},
                           {"reformulate", r.timings.reformulate_ms}, {"rerank", r.timings.rerank_ms}};
    }
    return j;
}

/// Re-scores the documents of `initial` against `query`. Documents with a
/// positive score come first (score descending, path ascending); the rest
/// keep their initial relative order. The result never leaves the initial set.
inline RankedList rerank(const Index& index, std::span<const std::string> query, const RankedList& initial,
                         std::string_view project, std::string_view version)
{
    std::vector<std::uint32_t> ordinals;
    ordinals.reserve(initial.hits.size());
    for (const auto& hit : initial.hits) {
        auto ordinal = index.ordinal_of(project, version, hit.path);
        if (!ordinal) {
            throw std::logic_error("rerank: " + hit.path + " is not in the index scope");
        }
        ordinals.push_back(*ordinal);
    }
    const auto scores = index.score_candidates(query, ordinals);
    std::vector<std::size_t> order(ordinals.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool pa = scores[a] > 0.0;
        const bool pb = scores[b] > 0.0;
        if (pa != pb) {
            return pa;
        }
        if (!pa) {
            return false;
        }
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return initial.hits[a].path < initial.hits[b].path;
    });
    RankedList out{initial.query_id, {}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.hits.push_back({initial.hits[order[i]].path, scores[order[i]], i + 1});
    }
    return out;
}

namespace detail {

class StageClock {
  public:
    double lap()
    {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
        return ms;
    }

  private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Runs retrieval, method scoring, filtering, keyword extraction,
/// reformulation and reranking for one report. With `baseline` set only
/// retrieval runs and the final ranking equals the initial one.
inline LocalizationResult localize(const BugReport& report, const IndexBundle& bundle, const PipelineConfig& config,
                                   Backends backends, bool baseline = false)
{
    const auto& index = bundle.index;
    const auto mode = index.analyzer_mode();
    LocalizationResult result;
    result.report_id = report.id;
    result.baseline = baseline;
    detail::StageClock clock;

    // Retrieve.
    result.initial_query = query_terms(report.text(), mode);
    result.initial = index.search(result.initial_query, report.project, report.version, config.top_k_initial, report.id);
    result.timings.retrieve_ms = clock.lap();
    if (baseline || result.initial.hits.empty()) {
        result.final_ranking = result.initial;
        return result;
    }

    // Score every extracted method of every retrieved document.
    std::vector<ScoredMethod> scored;
    std::vector<ScorePair> pairs;
    for (const auto& hit : result.initial.hits) {
        const auto ordinal = *index.ordinal_of(report.project, report.version, hit.path);
        for (const auto& method : bundle.documents[ordinal].methods) {
            if (detail::trim(method.body).empty()) {
                continue;
            }
            scored.push_back({hit.path, method, 0.0});
        }
    }
    if (!scored.empty()) {
        validate_score_inputs(report, scored.front().method);
    }
    const auto budget = backends.scorer.token_budget();
    const std::size_t step = std::max<std::size_t>(1, config.scorer_batch_size);
    for (std::size_t start = 0; start < scored.size(); start += step) {
        pairs.clear();
        const auto stop = std::min(scored.size(), start + step);
        for (std::size_t i = start; i < stop; ++i) {
            pairs.push_back(make_score_pair(report, scored[i].method, budget));
        }
        const auto scores = backends.scorer.score_batch(pairs);
        if (scores.size() != pairs.size()) {
            throw TransportError("scorer backend " + backends.scorer.name() + " returned the wrong number of scores");
        }
        for (std::size_t i = start; i < stop; ++i) {
            check_score_range(backends.scorer, scores[i - start]);
            scored[i].score = scores[i - start];
        }
    }
    result.timings.score_ms = clock.lap();

    const auto relevant = filter_relevant(scored, RelevanceThreshold{config.relevance_threshold});
    for (const auto& s : scored) {
        result.method_scores.push_back({s.path, s.method.name, s.method.start_line, s.method.end_line, s.score,
                                        s.score >= config.relevance_threshold});
    }
    result.timings.filter_ms = clock.lap();

    result.report_keywords = extract_keywords({report.text(), config.keyword_n, config.keyword_lambda},
                                              backends.embedder, mode);
    result.code_keywords =
        keywords_from_code(relevant, config.keyword_n, config.keyword_lambda, backends.embedder, mode);
    result.timings.keywords_ms = clock.lap();

    if (result.report_keywords.empty()) {
        // Nothing to reformulate from (e.g. a numbers-only report).
        result.final_ranking = result.initial;
        return result;
    }
    result.query = reformulate_query(result.report_keywords, result.code_keywords, backends.embedder,
                                     config.reformulate);
    result.timings.reformulate_ms = clock.lap();

    const auto terms = result.query.term_strings();
    result.final_ranking = rerank(index, terms, result.initial, report.project, report.version);
    result.timings.rerank_ms = clock.lap();
    return result;
}

}  // namespace iqloc
