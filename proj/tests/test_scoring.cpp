#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "mrs/remote.hpp"
#include "mrs/scoring.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mrs;
using mrs::testing::random_examples;
using mrs::testing::separable_pairs;
using mrs::testing::auc;
using mrs::testing::MockServer;

TEST(Features, IdentityAndDisjoint) {
    const FeatureExtractor fx;
    const auto same = fx.extract("red fox jumps", "red fox jumps");
    EXPECT_DOUBLE_EQ(same[0], 1.0);
    EXPECT_DOUBLE_EQ(same[1], 1.0);
    EXPECT_DOUBLE_EQ(same[2], 1.0);
    EXPECT_NEAR(same[5], 1.0, 1e-12);
    const auto disjoint = fx.extract("red fox", "blue whale swims");
    EXPECT_EQ(disjoint[0], 0.0);
    EXPECT_EQ(disjoint[1], 0.0);
    EXPECT_EQ(disjoint[2], 0.0);
    EXPECT_EQ(disjoint[5], 0.0);
}

TEST(Features, HandComputedPair) {
    // 10-token query, 8-token context, uniform idf (no corpus statistics).
    const FeatureExtractor fx;
    const std::string q = "the red fox jumped over the lazy brown dog today";
    const std::string c = "a lazy dog slept under the red barn";
    const auto f = fx.extract(q, c, "Lazy Brown");
    EXPECT_NEAR(f[0], 4.0 / 9.0, 1e-15);          // {the, red, lazy, dog} of 9 distinct
    EXPECT_NEAR(f[1], 1.0 / 9.0, 1e-15);          // "the red" of 9 distinct bigrams
    EXPECT_NEAR(f[2], 4.0 / 9.0, 1e-15);          // equal weights reduce to the ratio
    EXPECT_NEAR(f[3], 2.1972245773362196, 1e-15); // ln(1 + 8)
    EXPECT_EQ(f[4], 1.0);
    EXPECT_NEAR(f[5], 0.5033492145708278, 1e-12); // (4 + ln2) / (sqrt((1 + ln2)^2 + 8) sqrt 8)
    EXPECT_EQ(fx.extract(q, c, "Red Barn")[4], 0.0);
}

TEST(LexicalScorer, ZeroWeightsGiveOneHalf) {
    const LexicalScorer scorer(LexicalScorerModel{});
    const std::vector<ScoringInput> inputs = {{"a", "anything at all", ""}, {"b", "", "T"}, {"c", "x y z", ""}};
    const auto out = scorer.score_batch("some query", inputs);
    ASSERT_EQ(out.size(), 3u);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i].id, inputs[i].id);
        EXPECT_EQ(out[i].score, 0.5);
    }
    EXPECT_TRUE(scorer.score_batch("q", {}).empty());
}

TEST(LexicalScorer, BatchSplitDoesNotChangeScores) {
    LexicalScorerModel m;
    m.weights = {3.0, 1.0, 2.0, -0.3, 1.5, 2.5};
    m.bias = -2.0;
    const LexicalScorer scorer(m);
    std::vector<ScoringInput> inputs;
    for (int i = 0; i < 20; ++i) inputs.push_back({std::to_string(i), "word" + std::to_string(i % 4) + " red fox", ""});
    const auto all = scorer.score_batch("red fox word1", inputs);
    for (std::size_t i = 0; i < inputs.size(); ++i)
        EXPECT_EQ(scorer.score_batch("red fox word1", std::span(inputs).subspan(i, 1))[0], all[i]);
}

TEST(LexicalScorerModel, SaveLoadAndVersionCheck) {
    mrs::testing::TempDir dir;
    LexicalScorerModel m;
    m.weights = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    m.bias = -0.7;
    m.save(dir / "m.json");
    const auto back = LexicalScorerModel::load(dir / "m.json");
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.bias, m.bias);
    auto j = m.to_json();
    j["feature_spec_version"] = "lexical-v0";
    EXPECT_THROW(LexicalScorerModel::from_json(j), DataError);
    j = m.to_json();
    j["weights"] = {1.0};
    EXPECT_THROW(LexicalScorerModel::from_json(j), DataError);
}

TEST(Training, AnalyticGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    const auto data = random_examples(rng, 40);
    std::normal_distribution<double> w(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        LexicalScorerModel m;
        for (auto& x : m.weights) x = w(rng);
        m.bias = w(rng);
        const auto grad = retrieval_loss_gradient(m, data);
        const double eps = 1e-6;
        for (std::size_t i = 0; i <= kFeatureCount; ++i) {
            auto plus = m, minus = m;
            double& p = i < kFeatureCount ? plus.weights[i] : plus.bias;
            double& q = i < kFeatureCount ? minus.weights[i] : minus.bias;
            p += eps;
            q -= eps;
            const double numeric = (retrieval_loss(plus, data) - retrieval_loss(minus, data)) / (2 * eps);
            const double rel = std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-12});
            worst = std::max(worst, rel);
        }
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(Training, SeparableSetReachesHighAuc) {
    std::mt19937_64 rng(17);
    const auto train = separable_pairs(rng, 200, "t");
    const auto held_out = separable_pairs(rng, 50, "h");
    const FeatureExtractor features;
    TrainReport report;
    const auto model = train_logistic_scorer(std::span<const LabeledPair>(train), features, TrainConfig{}, &report);
    std::vector<double> pos, neg;
    for (const auto& p : held_out)
        (p.positive ? pos : neg).push_back(model.probability(features.extract(p.query_text, p.context_text)));
    EXPECT_GT(auc(pos, neg), 0.95);

    ASSERT_EQ(report.epoch_losses.size(), TrainConfig{}.epochs);
    double previous = report.initial_loss;
    for (double loss : report.epoch_losses) {
        EXPECT_LE(loss, previous + 1e-12);
        previous = loss;
    }
}

TEST(Training, OverfitsOnePositivePair) {
    const std::vector<LabeledPair> pairs = {
        {"q", "red fox", "c1", "red fox den", "", true, Provenance::ground_truth},
        {"q", "red fox", "c2", "blue whale song", "", false, Provenance::upstream_sampled},
    };
    const FeatureExtractor features;
    TrainConfig config;
    config.epochs = 500;
    config.learning_rate = 0.5;
    const auto model = train_logistic_scorer(std::span<const LabeledPair>(pairs), features, config);
    EXPECT_GT(model.probability(features.extract("red fox", "red fox den")), 0.9);
}

TEST(Training, DeterministicUnderSeed) {
    std::mt19937_64 rng(3);
    const auto pairs = separable_pairs(rng, 60, "p");
    TrainConfig config;
    config.seed = 42;
    config.batch_size = 7;
    const auto a = train_logistic_scorer(std::span<const LabeledPair>(pairs), FeatureExtractor{}, config);
    const auto b = train_logistic_scorer(std::span<const LabeledPair>(pairs), FeatureExtractor{}, config);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
}

TEST(Training, RejectsBadData) {
    std::vector<LabeledPair> one_class = {{"q", "a", "c", "a", "", true, Provenance::ground_truth}};
    EXPECT_THROW(train_logistic_scorer(std::span<const LabeledPair>(one_class), FeatureExtractor{}, TrainConfig{}),
                 DataError);
    std::vector<LabeledPair> sampled_positive = {{"q", "a", "c", "a", "", true, Provenance::upstream_sampled},
                                                 {"q", "a", "d", "b", "", false, Provenance::upstream_sampled}};
    EXPECT_THROW(
        train_logistic_scorer(std::span<const LabeledPair>(sampled_positive), FeatureExtractor{}, TrainConfig{}),
        DataError);

    std::mt19937_64 rng(1);
    const auto data = random_examples(rng, 10);
    TrainConfig explode;
    explode.learning_rate = 1e308;
    explode.epochs = 5;
    explode.batch_size = 1;
    try {
        train_logistic_scorer(std::span<const TrainingExample>(data), explode);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(CachingScorer, ReusesScores) {
    struct Counting final : Scorer {
        mutable std::atomic<int> calls{0};
        std::vector<ScoredCandidate> score_batch(std::string_view, std::span<const ScoringInput> c) const override {
            calls += static_cast<int>(c.size());
            std::vector<ScoredCandidate> out;
            for (const auto& x : c) out.push_back({x.id, 0.25});
            return out;
        }
    } inner;
    const CachingScorer cache(inner);
    const std::vector<ScoringInput> a = {{"1", "x", ""}, {"2", "y", ""}};
    const std::vector<ScoringInput> b = {{"2", "y", ""}, {"3", "z", ""}};
    cache.score_batch("q", a);
    const auto out = cache.score_batch("q", b);
    EXPECT_EQ(inner.calls, 3);
    EXPECT_EQ(out[0].id, "2");
    EXPECT_EQ(out[1].id, "3");
    cache.score_batch("other query", a);
    EXPECT_EQ(inner.calls, 5);
}

// ---------------------------------------------------------------------------
// Remote client against an in-process mock

namespace {

std::vector<ScoringInput> contexts(std::size_t n) {
    std::vector<ScoringInput> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"id" + std::to_string(i), "text " + std::to_string(i), ""});
    return out;
}

}  // namespace

TEST(RemoteScorer, EchoPreservesOrder) {
    MockServer server;
    server.score_constant(0.7);
    RemoteScorer scorer(server.url(), {});
    const auto in = contexts(6);
    const auto out = scorer.score_batch("q", in);
    ASSERT_EQ(out.size(), 6u);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i].id, in[i].id);
        EXPECT_DOUBLE_EQ(out[i].score, 0.7);
    }
    EXPECT_TRUE(scorer.score_batch("q", {}).empty());
}

TEST(RemoteScorer, BatchesByCeiling) {
    MockServer server;
    // Score derived from the id, so reassembly order is checked too.
    server.on_score([](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json scores = nlohmann::json::array();
        for (const auto& c : body["contexts"])
            scores.push_back(std::stod(c["id"].get<std::string>().substr(2)) / 1000.0);
        res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
    });
    RemoteScorer scorer(server.url(), {std::chrono::milliseconds(5000), 128, 3});
    const auto out = scorer.score_batch("q", contexts(1000));
    EXPECT_EQ(scorer.requests_issued(), 8u);
    EXPECT_EQ(server.score_calls(), 8u);
    EXPECT_EQ(server.health_calls(), 1u);
    ASSERT_EQ(out.size(), 1000u);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out[i].score, static_cast<double>(i) / 1000.0);
}

TEST(RemoteScorer, WrongCountIsProtocolError) {
    MockServer server;
    server.on_score([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"scores": [0.1, 0.2, 0.3, 0.4, 0.5]})", "application/json");
    });
    RemoteScorer scorer(server.url(), {});
    std::vector<ScoredCandidate> out;
    EXPECT_THROW(out = scorer.score_batch("q", contexts(6)), ProtocolError);
    EXPECT_TRUE(out.empty());
}

TEST(RemoteScorer, OutOfRangeScoreIsProtocolError) {
    MockServer server;
    server.score_constant(1.5);
    RemoteScorer scorer(server.url(), {});
    EXPECT_THROW(scorer.score_batch("q", contexts(2)), ProtocolError);
}

TEST(RemoteScorer, HealthFailureIsConnectError) {
    MockServer server;
    server.on_health([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status": "loading"})", "application/json");
    });
    server.score_constant(0.5);
    RemoteScorer scorer(server.url(), {});
    try {
        scorer.score_batch("q", contexts(1));
        FAIL() << "expected TransportError";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.kind(), TransportError::Kind::connect);
    }
    EXPECT_EQ(server.score_calls(), 0u);
}

TEST(RemoteScorer, UnreachableIsConnectError) {
    RemoteScorer scorer("http://127.0.0.1:1", {std::chrono::milliseconds(500), 128, 1});
    try {
        scorer.score_batch("q", contexts(1));
        FAIL() << "expected TransportError";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.kind(), TransportError::Kind::connect);
    }
}

TEST(RemoteScorer, SlowServerIsTimeout) {
    MockServer server;
    server.on_score([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        res.set_content(R"({"scores": [0.5]})", "application/json");
    });
    RemoteScorer scorer(server.url(), {std::chrono::milliseconds(150), 128, 1});
    try {
        scorer.score_batch("q", contexts(1));
        FAIL() << "expected TransportError";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.kind(), TransportError::Kind::timeout);
    }
}

TEST(RemoteScorer, HttpErrorStatus) {
    MockServer server;
    RemoteScorer scorer(server.url(), {});
    try {
        scorer.score_batch("q", contexts(1));
        FAIL() << "expected TransportError";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.kind(), TransportError::Kind::http_status);
    }
}

TEST(RemoteScorer, RejectsBadEndpoints) {
    EXPECT_THROW(RemoteScorer("ftp://host", {}), PreconditionError);
    EXPECT_THROW(RemoteScorer("http://", {}), PreconditionError);
    EXPECT_THROW(RemoteScorer("http://localhost:9", {std::chrono::milliseconds(10), 0, 1}), PreconditionError);
}
