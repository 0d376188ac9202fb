#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mrs/io.hpp"
#include "mrs/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mrs;
using mrs::testing::filter_oracle;
using namespace mrs::io;
using mrs::testing::DistractorFixture;
using mrs::testing::PanthersFixture;

namespace {

using Item = Scored<std::string>;

std::vector<std::string> ids(const std::vector<Item>& v) {
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x.id);
    return out;
}

std::set<SentenceId> selected(const PipelineRun& run) {
    std::set<SentenceId> out;
    for (const auto& s : *run.s_selected) out.insert(s.id);
    return out;
}

}  // namespace

TEST(Filter, WorkedExamples) {
    const std::vector<Item> c = {{"a", 0.9}, {"b", 0.3}, {"c", 0.7}, {"d", 0.5}};
    EXPECT_EQ(ids(filter_by_score(c, 2, 0.5)), (std::vector<std::string>{"a", "c"}));
    EXPECT_EQ(ids(filter_by_score(c, 10, 0.5)), (std::vector<std::string>{"a", "c"}));  // 0.5 is not > 0.5
    EXPECT_EQ(ids(filter_by_score(c, 1, 0.0)), (std::vector<std::string>{"a"}));
    EXPECT_TRUE(filter_by_score(c, 3, 0.95).empty());
    EXPECT_TRUE(filter_by_score(std::vector<Item>{}, 3, 0.1).empty());
    EXPECT_EQ(ids(filter_by_score<std::string>({{"z", 0.6}, {"y", 0.6}, {"x", 0.6}}, 2, 0.1)),
              (std::vector<std::string>{"x", "y"}));
    EXPECT_THROW(filter_by_score(c, 0, 0.5), PreconditionError);
    EXPECT_THROW(filter_by_score(c, 2, 1.5), PreconditionError);
    EXPECT_THROW(filter_by_score(c, 2, -0.1), PreconditionError);
}

TEST(Filter, RandomizedInvariants) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto n = detail::uniform_below(rng, 30);
        std::vector<Item> c;
        for (std::size_t i = 0; i < n; ++i) {
            // coarse scores so ties and exact-threshold hits occur
            const double s = trial % 2 ? std::round(u(rng) * 10) / 10 : u(rng);
            c.push_back({"id" + std::to_string(detail::uniform_below(rng, 1000)) + "_" + std::to_string(i), s});
        }
        const auto k = 1 + detail::uniform_below(rng, 12);
        const double h = std::round(u(rng) * 10) / 10;
        const auto out = filter_by_score(c, k, h);
        ASSERT_EQ(out, filter_oracle(c, k, h)) << "trial " << trial;
        ASSERT_LE(out.size(), k);
        for (std::size_t i = 0; i < out.size(); ++i) {
            ASSERT_GT(out[i].score, h);
            if (i) ASSERT_GE(out[i - 1].score, out[i].score);
        }
        // larger k only extends; larger h only removes
        const auto wider = filter_by_score(c, k + 1, h);
        ASSERT_TRUE(std::equal(out.begin(), out.end(), wider.begin()));
        if (h <= 0.9) {
            const auto tighter = filter_by_score(c, k, h + 0.1);
            for (const auto& t : tighter) ASSERT_GT(t.score, h + 0.1);
            ASSERT_LE(tighter.size(), out.size());
        }
    }
}

TEST(Pipeline, PanthersFullModeDropsDistractor) {
    const PanthersFixture fx;
    const auto run = run_pipeline(fx.query, fx.config(true), fx.modules());
    EXPECT_EQ(run.p_initial.size(), 3u);
    ASSERT_TRUE(run.p_neural);
    EXPECT_EQ(*run.p_neural,
              (std::vector<ScoredParagraph>{{{DocumentTitle("Florida Panthers"), 0}, 0.99},
                                            {{DocumentTitle("Wojtek Wolski"), 0}, 0.98}}));
    const std::set<SentenceId> gold(fx.query.evidence_groups[0].begin(), fx.query.evidence_groups[0].end());
    EXPECT_EQ(selected(run), gold);
    EXPECT_EQ(run.prediction.answer, "Florida Panthers");
    EXPECT_FALSE(run.prediction.error);
}

TEST(Pipeline, PanthersWithoutParagraphStageKeepsDistractor) {
    const PanthersFixture fx;
    const auto run = run_pipeline(fx.query, fx.config(false), fx.modules());
    EXPECT_FALSE(run.p_neural);
    const auto s = selected(run);
    EXPECT_EQ(s.size(), 3u);
    EXPECT_TRUE(s.count(PanthersFixture::distractor()));
    // the distractor outranks the Wolski sentence
    EXPECT_EQ(run.s_selected->at(1).id, PanthersFixture::distractor());
}

TEST(Pipeline, NoSentenceStageForwardsWholeParagraphs) {
    const PanthersFixture fx;
    auto config = fx.config(true);
    config.stages.sentence_level = false;
    const auto run = run_pipeline(fx.query, config, fx.modules());
    EXPECT_FALSE(run.s_selected);
    EXPECT_EQ(run.prediction.predicted_evidence,
              (std::vector<SentenceId>{{DocumentTitle("Florida Panthers"), 0},
                                       {DocumentTitle("Florida Panthers"), 1},
                                       {DocumentTitle("Wojtek Wolski"), 0},
                                       {DocumentTitle("Wojtek Wolski"), 1}}));
}

TEST(Pipeline, EmptyFilteredSetReachesReader) {
    const PanthersFixture fx;
    const BaselineReader reader{FeatureExtractor{}};
    auto config = fx.config(true);
    config.h_p = 1.0;
    const auto run = run_pipeline(fx.query, config, fx.modules(&reader));
    EXPECT_TRUE(run.p_neural->empty());
    EXPECT_TRUE(run.s_selected->empty());
    EXPECT_EQ(run.prediction.answer, "");
    EXPECT_FALSE(run.prediction.error);
}

TEST(Pipeline, RejectsInvalidConfig) {
    const PanthersFixture fx;
    auto config = fx.config();
    config.k_s = 0;
    EXPECT_THROW(run_pipeline(fx.query, config, fx.modules()), PreconditionError);
    config = fx.config();
    config.h_p = 2.0;
    EXPECT_THROW(run_batch({fx.query}, config, fx.modules()), PreconditionError);
}

TEST(Pipeline, DistractorsEnterOnlyWithoutParagraphStage) {
    const DistractorFixture fx;
    for (const auto& q : fx.queries) {
        const auto full = run_pipeline(q, fx.config(), fx.modules());
        const std::set<SentenceId> gold(q.evidence_groups[0].begin(), q.evidence_groups[0].end());
        EXPECT_EQ(selected(full), gold) << q.id;
        EXPECT_EQ(full.prediction.answer, "yes") << q.id;

        auto ablated = fx.config();
        ablated.stages.paragraph_level = false;
        const auto loose = run_pipeline(q, ablated, fx.modules());
        const auto s = selected(loose);
        EXPECT_TRUE(std::any_of(s.begin(), s.end(), [&](const SentenceId& id) {
            return fx.distractor_titles.count(id.title) > 0;
        })) << q.id;
    }
}

namespace {

class FailingScorer final : public Scorer {
public:
    explicit FailingScorer(const Scorer& inner, std::string poison) : inner_(&inner), poison_(std::move(poison)) {}
    std::vector<ScoredCandidate> score_batch(std::string_view q, std::span<const ScoringInput> c) const override {
        if (q == poison_) throw TransportError(TransportError::Kind::timeout, "scorer timed out");
        return inner_->score_batch(q, c);
    }

private:
    const Scorer* inner_;
    std::string poison_;
};

struct Synthetic {
    mrs::testing::SyntheticCorpus fx = mrs::testing::make_synthetic_corpus();
    TermIndex index = TermIndex::build(fx.corpus, Granularity::document);
    TermRetriever retriever{fx.corpus, index};
    LexicalScorer scorer{model(), FeatureExtractor(&index)};
    BaselineReader reader{FeatureExtractor(&index)};
    BaselineVerifier verifier;

    static LexicalScorerModel model() {
        LexicalScorerModel m;
        m.weights = {4.0, 2.0, 2.0, 0.0, 2.0, 4.0};
        m.bias = -3.0;
        return m;
    }
    PipelineModules modules() const { return {&fx.corpus, &retriever, &scorer, &scorer, &reader, &verifier}; }
};

std::string dump(const std::vector<RunOutcome>& outcomes) {
    std::vector<PipelineRun> runs;
    for (const auto& o : outcomes) runs.push_back(*o.run);
    std::ostringstream out;
    write_runs(runs, out);
    return out.str();
}

}  // namespace

TEST(RunBatch, FailureIsIsolatedPerQuery) {
    const PanthersFixture fx;
    const FailingScorer failing(fx.paragraph_scores, "boom");
    auto modules = fx.modules();
    modules.paragraph_scorer = &failing;
    std::vector<Query> queries(3, fx.query);
    queries[0].id = "q1";
    queries[1].id = "q2";
    queries[1].text = "boom";
    queries[2].id = "q3";
    for (std::size_t threads : {1u, 3u}) {
        const auto out = run_batch(queries, fx.config(), modules, threads);
        ASSERT_EQ(out.size(), 3u);
        EXPECT_TRUE(out[0].ok());
        EXPECT_FALSE(out[1].ok());
        EXPECT_TRUE(out[2].ok());
        EXPECT_EQ(failed_query_ids(out), std::vector<std::string>{"q2"});
        EXPECT_NE(out[1].error.find("paragraph"), std::string::npos);
        EXPECT_NE(out[1].error.find("q2"), std::string::npos);
        try {
            std::rethrow_exception(out[1].cause);
        } catch (const TransportError& e) {
            EXPECT_EQ(e.kind(), TransportError::Kind::timeout);
        } catch (...) {
            ADD_FAILURE() << "cause is not the transport error";
        }
        EXPECT_EQ(selected(*out[2].run), selected(*out[0].run));
        EXPECT_EQ(selected(*out[2].run).size(), 2u);
    }
}

TEST(RunBatch, BadScorerOutputBecomesStageError) {
    const PanthersFixture fx;
    const TableScorer out_of_range({}, 1.7);
    auto modules = fx.modules();
    modules.sentence_scorer = &out_of_range;
    try {
        run_pipeline(fx.query, fx.config(), modules);
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "sentence");
        EXPECT_EQ(e.query_id(), "wolski");
    }
}

TEST(RunBatch, ByteIdenticalAcrossRunsAndThreads) {
    const Synthetic s;
    auto config = PipelineConfig::defaults(Task::hotpot);
    const auto a = dump(run_batch(s.fx.hotpot_queries, config, s.modules(), 1));
    const auto b = dump(run_batch(s.fx.hotpot_queries, config, s.modules(), 1));
    const auto c = dump(run_batch(s.fx.hotpot_queries, config, s.modules(), 4));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);

    config = PipelineConfig::defaults(Task::fever);
    EXPECT_EQ(dump(run_batch(s.fx.fever_queries, config, s.modules(), 1)),
              dump(run_batch(s.fx.fever_queries, config, s.modules(), 3)));
}

TEST(RunBatch, SetSizesRespectCaps) {
    const Synthetic s;
    auto config = PipelineConfig::defaults(Task::hotpot);
    config.h_p = 0.0;
    config.h_s = 0.0;
    for (const auto& o : run_batch(s.fx.hotpot_queries, config, s.modules(), 2)) {
        ASSERT_TRUE(o.ok()) << o.error;
        const auto& run = *o.run;
        EXPECT_LE(run.p_neural->size(), 2u);
        EXPECT_LE(run.s_selected->size(), 5u);
        std::set<ParagraphId> pn;
        for (const auto& p : *run.p_neural) {
            EXPECT_TRUE(run.p_initial.contains(p.id));
            pn.insert(p.id);
        }
        for (const auto& sid : selected(run)) EXPECT_TRUE(pn.count(ParagraphId{sid.title, s.fx.corpus.paragraph_of(sid).para_index}));
    }
}

TEST(RunBatch, FeverEvidenceCappedAtFive) {
    const Synthetic s;
    auto config = PipelineConfig::defaults(Task::fever);
    config.k_p = 5;
    config.h_p = 0.0;
    config.stages.sentence_level = false;
    for (const auto& o : run_batch(s.fx.fever_queries, config, s.modules())) {
        ASSERT_TRUE(o.ok());
        EXPECT_LE(o.run->prediction.predicted_evidence.size(), 5u);
        EXPECT_TRUE(o.run->prediction.label);
    }
}

TEST(Trace, JsonRoundTrip) {
    const PanthersFixture fx;
    const auto run = run_pipeline(fx.query, fx.config(), fx.modules());
    const auto back = run_from_json(to_json(run));
    EXPECT_EQ(to_json(back).dump(), to_json(run).dump());
    EXPECT_FALSE(to_json(run).contains("timings_us"));
    EXPECT_TRUE(to_json(run, {true}).contains("timings_us"));
}
