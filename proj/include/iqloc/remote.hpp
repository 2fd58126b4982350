#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "embedding.hpp"
#include "error.hpp"
#include "relevance.hpp"

namespace iqloc {

/// Connection settings for the model service.
struct RemoteConfig {
    std::string url = "http://localhost:8901";
    std::chrono::milliseconds timeout{30000};
    std::size_t batch_size = 32;
};

namespace detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

inline SplitUrl split_url(std::string_view url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string_view::npos) {
        throw std::invalid_argument("backend URL needs a scheme: " + std::string(url));
    }
    const auto slash = url.find('/', scheme + 3);
    SplitUrl out;
    out.origin = std::string(url.substr(0, slash));
    if (slash != std::string_view::npos) {
        out.prefix = std::string(url.substr(slash));
        while (!out.prefix.empty() && out.prefix.back() == '/') {
            out.prefix.pop_back();
        }
    }
    return out;
}

/// POSTs a JSON body and returns the parsed JSON response. Every failure
/// mode (connection, status, body) becomes a TransportError.
inline nlohmann::json post_json(const RemoteConfig& config, std::string_view endpoint, const nlohmann::json& body)
{
    const auto url = split_url(config.url);
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    const auto path = url.prefix + std::string(endpoint);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw TransportError("backend " + config.url + path + " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("backend " + config.url + path + " answered HTTP " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw TransportError("backend " + config.url + path + " sent invalid JSON: " + e.what());
    }
}

}  // namespace detail

/// Client for `POST /score`: {"pairs": [{"context", "candidate"}...]} →
/// {"scores": [float...]} in request order.
class RemoteScorer final : public ScorerBackend {
  public:
    explicit RemoteScorer(RemoteConfig config, std::size_t token_budget = 512)
        : config_(std::move(config)), budget_(token_budget)
    {
    }

    std::string name() const override { return "remote"; }
    std::size_t token_budget() const override { return budget_; }

    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override
    {
        std::vector<double> scores;
        scores.reserve(pairs.size());
        const std::size_t step = std::max<std::size_t>(1, config_.batch_size);
        for (std::size_t start = 0; start < pairs.size(); start += step) {
            const auto chunk = pairs.subspan(start, std::min(step, pairs.size() - start));
            auto body = nlohmann::json{{"pairs", nlohmann::json::array()}};
            for (const auto& p : chunk) {
                body["pairs"].push_back({{"context", p.context}, {"candidate", p.candidate}});
            }
            const auto response = detail::post_json(config_, "/score", body);
            if (!response.contains("scores") || !response["scores"].is_array()
                || response["scores"].size() != chunk.size()) {
                throw TransportError("/score response does not carry one score per pair");
            }
            for (const auto& s : response["scores"]) {
                if (!s.is_number()) {
                    throw TransportError("/score response holds a non-numeric score");
                }
                const double v = s.get<double>();
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw TransportError("/score response holds a score outside [0, 1]");
                }
                scores.push_back(v);
            }
        }
        return scores;
    }

  private:
    RemoteConfig config_;
    std::size_t budget_;
};

/// Client for `POST /embed`: {"texts": [...]} → {"vectors": [[...]...]}.
/// The dimension is learned from the first response and enforced after.
class RemoteEmbedding final : public EmbeddingBackend {
  public:
    explicit RemoteEmbedding(RemoteConfig config) : config_(std::move(config))
    {
        dimension_ = embed_batch(std::vector<std::string>{"dimension probe"}).front().size();
    }

    std::string name() const override { return "remote"; }
    std::size_t dimension() const override { return dimension_; }

    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override
    {
        std::vector<Vector> out;
        out.reserve(texts.size());
        const std::size_t step = std::max<std::size_t>(1, config_.batch_size);
        for (std::size_t start = 0; start < texts.size(); start += step) {
            const auto chunk = texts.subspan(start, std::min(step, texts.size() - start));
            const auto response = detail::post_json(
                config_, "/embed", nlohmann::json{{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
            if (!response.contains("vectors") || !response["vectors"].is_array()
                || response["vectors"].size() != chunk.size()) {
                throw TransportError("/embed response does not carry one vector per text");
            }
            for (const auto& v : response["vectors"]) {
                Vector vec;
                try {
                    vec = v.get<Vector>();
                } catch (const nlohmann::json::exception&) {
                    throw TransportError("/embed response holds a malformed vector");
                }
                if (vec.empty() || (dimension_ != 0 && vec.size() != dimension_)) {
                    throw TransportError("/embed response dimension is not constant");
                }
                detail::guard_nonzero(vec);
                out.push_back(std::move(vec));
            }
        }
        return out;
    }

  private:
    RemoteConfig config_;
    std::size_t dimension_ = 0;
};

struct BackendCheckResult {
    bool ok = true;
    std::vector<std::string> failures;
    std::size_t dimension = 0;

    void fail(std::string message)
    {
        ok = false;
        failures.push_back(std::move(message));
    }
};

/// Conformance probe of a model service: score ordering and range,
/// embedding dimension constancy, and determinism of both endpoints.
inline BackendCheckResult check_backend(const RemoteConfig& config)
{
    BackendCheckResult result;
    const std::vector<ScorePair> pairs = {
        {"NullPointerException when saving a snapshot", "void saveSnapshot() { snapshot.write(); }"},
        {"NullPointerException when saving a snapshot", "int add(int a, int b) { return a + b; }"},
        {"Login page renders blank", "void renderLogin(Page page) { page.show(); }"},
    };
    try {
        RemoteScorer scorer(config);
        const auto first = scorer.score_batch(pairs);
        const auto again = scorer.score_batch(pairs);
        if (first != again) {
            result.fail("/score is not deterministic for identical requests");
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (scorer.score(pairs[i]) != first[i]) {
                result.fail("/score batch result differs from single-pair result at index " + std::to_string(i));
            }
        }
    } catch (const TransportError& e) {
        result.fail(e.what());
    }
    const std::vector<std::string> texts = {"snapshot creation flow", "a", "Login page renders blank",
                                            "snapshot creation flow"};
    try {
        RemoteEmbedding embedder(config);
        result.dimension = embedder.dimension();
        const auto vectors = embedder.embed_batch(texts);
        if (vectors[0] != vectors[3]) {
            result.fail("/embed returns different vectors for identical texts");
        }
        if (embedder.embed_batch(texts) != vectors) {
            result.fail("/embed is not deterministic for identical requests");
        }
    } catch (const TransportError& e) {
        result.fail(e.what());
    }
    return result;
}

}  // namespace iqloc
