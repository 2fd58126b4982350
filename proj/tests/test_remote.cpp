#include <catch_amalgamated.hpp>

#include <atomic>
#include <string>
#include <vector>

#include <iqloc/remote.hpp>

#include "test_support.hpp"

using test_support::FakeModelServer;

namespace {

iqloc::RemoteConfig config_for(const FakeModelServer& server, std::size_t batch = 32)
{
    iqloc::RemoteConfig c;
    c.url = server.url();
    c.timeout = std::chrono::milliseconds(5000);
    c.batch_size = batch;
    return c;
}

std::vector<iqloc::ScorePair> some_pairs(std::size_t n)
{
    std::vector<iqloc::ScorePair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        pairs.push_back({"report " + std::to_string(i), "void m" + std::to_string(i) + "() {}"});
    }
    return pairs;
}

nlohmann::json constant_scores(const nlohmann::json& body, const nlohmann::json& value)
{
    return {{"scores", std::vector<nlohmann::json>(body.at("pairs").size(), value)}};
}

}  // namespace

TEST_CASE("remote scores arrive in request order across batches")
{
    std::atomic<int> calls{0};
    FakeModelServer server(
        [&](const nlohmann::json& body) {
            ++calls;
            REQUIRE(body.at("pairs").size() <= 3);
            return test_support::well_behaved_score(body);
        },
        test_support::well_behaved_embed);
    const iqloc::RemoteScorer scorer(config_for(server, 3));
    const auto pairs = some_pairs(7);
    const auto batch = scorer.score_batch(pairs);
    CHECK(calls == 3);
    REQUIRE(batch.size() == 7);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(batch[i] == scorer.score(pairs[i]));
    }
    CHECK(scorer.name() == "remote");
    CHECK(scorer.token_budget() == 512);
}

TEST_CASE("malformed score responses are transport errors")
{
    const auto scorer_with = [](FakeModelServer::Handler handler) {
        return std::make_unique<FakeModelServer>(std::move(handler), test_support::well_behaved_embed);
    };
    const auto pairs = some_pairs(2);
    SECTION("wrong count")
    {
        auto server = scorer_with([](const nlohmann::json&) { return nlohmann::json{{"scores", {0.5}}}; });
        CHECK_THROWS_AS(iqloc::RemoteScorer(config_for(*server)).score_batch(pairs), iqloc::TransportError);
    }
    SECTION("out of range")
    {
        auto server = scorer_with([](const nlohmann::json& b) { return constant_scores(b, 1.5); });
        CHECK_THROWS_AS(iqloc::RemoteScorer(config_for(*server)).score_batch(pairs), iqloc::TransportError);
    }
    SECTION("non-numeric")
    {
        auto server = scorer_with([](const nlohmann::json& b) { return constant_scores(b, "high"); });
        CHECK_THROWS_AS(iqloc::RemoteScorer(config_for(*server)).score_batch(pairs), iqloc::TransportError);
    }
    SECTION("missing field")
    {
        auto server = scorer_with([](const nlohmann::json&) { return nlohmann::json{{"score", 1}}; });
        CHECK_THROWS_AS(iqloc::RemoteScorer(config_for(*server)).score_batch(pairs), iqloc::TransportError);
    }
}

TEST_CASE("HTTP failures are transport errors")
{
    // httplib answers 500 when a handler throws.
    FakeModelServer server([](const nlohmann::json&) -> nlohmann::json { throw std::runtime_error("model crashed"); },
                           test_support::well_behaved_embed);
    CHECK_THROWS_WITH(iqloc::RemoteScorer(config_for(server)).score_batch(some_pairs(1)),
                      Catch::Matchers::ContainsSubstring("HTTP 500"));
    CHECK_THROWS_AS(iqloc::RemoteScorer(config_for(server)).score_batch(some_pairs(1)), iqloc::TransportError);

    iqloc::RemoteConfig nowhere;
    nowhere.url = "http://127.0.0.1:9";
    nowhere.timeout = std::chrono::milliseconds(500);
    CHECK_THROWS_AS(iqloc::RemoteScorer(nowhere).score_batch(some_pairs(1)), iqloc::TransportError);
    CHECK_THROWS_AS(iqloc::RemoteEmbedding(nowhere), iqloc::TransportError);
}

TEST_CASE("a URL path prefix is kept")
{
    FakeModelServer server(test_support::well_behaved_score, test_support::well_behaved_embed);
    server.raw().Post("/api/score", [](const httplib::Request& req, httplib::Response& res) {
        res.set_content(test_support::well_behaved_score(nlohmann::json::parse(req.body)).dump(), "application/json");
    });
    auto c = config_for(server);
    c.url += "/api/";
    CHECK(iqloc::RemoteScorer(c).score_batch(some_pairs(2)).size() == 2);
    c.url = "127.0.0.1";
    CHECK_THROWS_AS(iqloc::RemoteScorer(c).score_batch(some_pairs(1)), std::invalid_argument);
}

TEST_CASE("remote embeddings keep a constant dimension")
{
    FakeModelServer server(test_support::well_behaved_score, test_support::well_behaved_embed);
    const iqloc::RemoteEmbedding e(config_for(server, 2));
    CHECK(e.dimension() == 8);
    const std::vector<std::string> texts{"alpha", "beta", "gamma", "alpha"};
    const auto vectors = e.embed_batch(texts);
    REQUIRE(vectors.size() == 4);
    CHECK(vectors[0] == vectors[3]);

    std::atomic<int> calls{0};
    FakeModelServer drifting(test_support::well_behaved_score, [&](const nlohmann::json& body) {
        const std::size_t dim = calls++ == 0 ? 4 : 5;
        return nlohmann::json{{"vectors", std::vector<std::vector<double>>(body.at("texts").size(),
                                                                           std::vector<double>(dim, 1.0))}};
    });
    const iqloc::RemoteEmbedding d(config_for(drifting));
    CHECK(d.dimension() == 4);
    CHECK_THROWS_AS(d.embed("x"), iqloc::TransportError);
}

TEST_CASE("backend check accepts a conforming service")
{
    FakeModelServer server(test_support::well_behaved_score, test_support::well_behaved_embed);
    const auto result = iqloc::check_backend(config_for(server));
    CHECK(result.ok);
    CHECK(result.failures.empty());
    CHECK(result.dimension == 8);
}

TEST_CASE("backend check rejects a nondeterministic service")
{
    std::atomic<int> calls{0};
    FakeModelServer server(
        [&](const nlohmann::json& body) {
            const double v = (calls++ % 10) / 10.0;
            return nlohmann::json{{"scores", std::vector<double>(body.at("pairs").size(), v)}};
        },
        test_support::well_behaved_embed);
    const auto result = iqloc::check_backend(config_for(server));
    CHECK_FALSE(result.ok);
    CHECK_FALSE(result.failures.empty());
}

TEST_CASE("backend check reports an unreachable service")
{
    iqloc::RemoteConfig nowhere;
    nowhere.url = "http://127.0.0.1:9";
    nowhere.timeout = std::chrono::milliseconds(300);
    const auto result = iqloc::check_backend(nowhere);
    CHECK_FALSE(result.ok);
    CHECK(result.failures.size() == 2);
}
