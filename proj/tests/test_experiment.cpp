#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "mrs/experiment.hpp"
#include "support/fixtures.hpp"

using namespace mrs;
using mrs::testing::DistractorFixture;

namespace {

// Built-in scorers trained on the synthetic corpus's own gold, one per level.
struct SweepFixture {
    mrs::testing::SyntheticCorpus fx = mrs::testing::make_synthetic_corpus(200, 11, 80);
    TermIndex index = TermIndex::build(fx.corpus, Granularity::document);
    TermRetriever retriever{fx.corpus, index};
    std::optional<LexicalScorer> paragraph_scorer;
    std::optional<LexicalScorer> sentence_scorer;
    BaselineReader reader{FeatureExtractor(&index)};

    SweepFixture() {
        std::vector<LabeledPair> para_pairs, sent_pairs;
        for (const auto& q : fx.hotpot_queries) {
            std::vector<ParagraphId> upstream;
            for (const auto& c : retriever.initial_candidates(q.id, q.text, Task::hotpot).paragraphs)
                upstream.push_back(c.id);
            const auto gold = gold_paragraphs(fx.corpus, q.gold_sentences());
            auto p = sample_retrieval_pairs(q, gold, upstream, SamplingSpec::defaults(SamplingLevel::paragraph, 3),
                                            fx.corpus);
            para_pairs.insert(para_pairs.end(), p.pairs.begin(), p.pairs.end());
            auto s = sample_retrieval_pairs(q, q.gold_sentences(), sentences_of(fx.corpus, gold),
                                            SamplingSpec::defaults(SamplingLevel::sentence, 3), fx.corpus);
            sent_pairs.insert(sent_pairs.end(), s.pairs.begin(), s.pairs.end());
        }
        const FeatureExtractor features(&index);
        paragraph_scorer.emplace(train_logistic_scorer(std::span<const LabeledPair>(para_pairs), features, {}), features);
        sentence_scorer.emplace(train_logistic_scorer(std::span<const LabeledPair>(sent_pairs), features, {}), features);
    }

    PipelineModules modules() const {
        return {&fx.corpus, &retriever, &*paragraph_scorer, &*sentence_scorer, &reader, nullptr};
    }
};

const SweepFixture& sweep_fixture() {
    static const SweepFixture fx;
    return fx;
}

}  // namespace

TEST(SweepValues, Parsing) {
    EXPECT_EQ(parse_sweep_values("0:0.9:0.1"), (std::vector<double>{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}));
    EXPECT_EQ(parse_sweep_values("1,3,2"), (std::vector<double>{1, 3, 2}));
    EXPECT_EQ(parse_sweep_values("0.25"), std::vector<double>{0.25});
    EXPECT_THROW(parse_sweep_values("0:1"), PreconditionError);
    EXPECT_THROW(parse_sweep_values("1:0:0.1"), PreconditionError);
    EXPECT_THROW(parse_sweep_values("a,b"), PreconditionError);
    EXPECT_THROW(parse_sweep_parameter("k"), PreconditionError);

    SweepSpec spec{SweepParameter::k_p, {0}, PipelineConfig::defaults(Task::hotpot)};
    EXPECT_THROW(spec.validate(), PreconditionError);
    spec = {SweepParameter::h_s, {1.2}, PipelineConfig::defaults(Task::hotpot)};
    EXPECT_THROW(spec.validate(), PreconditionError);
}

TEST(Sweep, SentenceThresholdShape) {
    const auto start = std::chrono::steady_clock::now();
    const auto& fx = sweep_fixture();
    const SweepSpec spec{SweepParameter::h_s, parse_sweep_values("0:0.9:0.1"), PipelineConfig::defaults(Task::hotpot)};
    const auto rows = run_sweep(spec, fx.fx.hotpot_queries, fx.modules());
    ASSERT_EQ(rows.size(), 10u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ASSERT_TRUE(rows[i].report.support) << i;
        EXPECT_TRUE(rows[i].failed.empty());
        if (i > 0) {
            EXPECT_LE(rows[i].report.support->r, rows[i - 1].report.support->r) << rows[i].value;
            EXPECT_LE(*rows[i].report.mean_sentences, *rows[i - 1].report.mean_sentences) << rows[i].value;
        }
    }
    EXPECT_GT(rows.front().report.support->r, rows.back().report.support->r);
    EXPECT_GT(rows.front().report.support->r, 0.5);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(30));
}

TEST(Sweep, ParagraphCapGrowsForwardedSet) {
    const auto& fx = sweep_fixture();
    auto base = PipelineConfig::defaults(Task::hotpot);
    base.h_p = 0.0;
    const SweepSpec spec{SweepParameter::k_p, parse_sweep_values("1:12:1"), base};
    const auto rows = run_sweep(spec, fx.fx.hotpot_queries, fx.modules());
    ASSERT_EQ(rows.size(), 12u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_GE(*rows[i].report.mean_paragraphs, *rows[i - 1].report.mean_paragraphs);
        EXPECT_GE(*rows[i].report.oracle_paragraph, *rows[i - 1].report.oracle_paragraph);
    }
    EXPECT_LE(*rows.front().report.mean_paragraphs, 1.0);
}

TEST(Sweep, SinglePointEqualsRunAndEvaluate) {
    const auto& fx = sweep_fixture();
    auto config = PipelineConfig::defaults(Task::hotpot);
    const SweepSpec spec{SweepParameter::h_s, {0.3}, config};
    const auto rows = run_sweep(spec, fx.fx.hotpot_queries, fx.modules(), 2);
    config.h_s = 0.3;
    auto direct = evaluate_runs(fx.fx.hotpot_queries, run_batch(fx.fx.hotpot_queries, config, fx.modules()), Task::hotpot,
                                fx.fx.corpus)
                      .report;
    direct.tag = "h_s=0.3";
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].report, direct);
}

TEST(Sweep, RetrainDownstreamRegeneratesContexts) {
    const auto& fx = sweep_fixture();
    const std::vector<Query> queries(fx.fx.hotpot_queries.begin(), fx.fx.hotpot_queries.begin() + 20);
    SweepSpec spec{SweepParameter::h_s, {0.0, 0.9}, PipelineConfig::defaults(Task::hotpot)};
    spec.retrain_downstream = true;
    const auto rows = run_sweep(spec, queries, fx.modules());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_GT(rows[0].downstream_contexts, 0u);
}

TEST(Ablation, ParagraphStageRemovesDistractors) {
    const DistractorFixture fx;
    const auto full = run_ablation(AblationMode::full, fx.config(), fx.queries, fx.modules());
    const auto no_para = run_ablation(AblationMode::no_paragraph, fx.config(), fx.queries, fx.modules());
    const auto no_sent = run_ablation(AblationMode::no_sentence, fx.config(), fx.queries, fx.modules());
    ASSERT_TRUE(full.report.support);
    ASSERT_TRUE(no_para.report.support);
    EXPECT_LT(no_para.report.support->p, full.report.support->p);
    EXPECT_DOUBLE_EQ(full.report.support->em, 1.0);

    EXPECT_FALSE(no_sent.report.support);
    EXPECT_FALSE(no_sent.report.joint);
    EXPECT_FALSE(no_sent.report.mean_sentences);
    EXPECT_TRUE(no_sent.report.answer);
    EXPECT_EQ(no_sent.report.tag, "no_sentence");

    std::ostringstream table;
    emit_report({{"full", full.report}, {"no_sentence", no_sent.report}}, ReportFormat::table, table, "mode");
    const auto text = table.str();
    const auto row = text.substr(text.find("no_sentence"));
    EXPECT_NE(row.find(" -"), std::string::npos);
    EXPECT_EQ(text.find("label_accuracy"), std::string::npos);

    EXPECT_EQ(run_ablation(AblationMode::no_paragraph, fx.config(), fx.queries, fx.modules(), 3).report,
              no_para.report);
    EXPECT_EQ(parse_ablation_mode("no-paragraph"), AblationMode::no_paragraph);
    EXPECT_THROW(parse_ablation_mode("none"), PreconditionError);
}

TEST(Ablation, SentenceRetrainingPerMode) {
    const auto& fx = sweep_fixture();
    const std::vector<Query> train(fx.fx.hotpot_queries.begin(), fx.fx.hotpot_queries.begin() + 40);
    const std::vector<Query> test(fx.fx.hotpot_queries.begin() + 40, fx.fx.hotpot_queries.end());
    const SentenceRetraining retraining{&train, FeatureExtractor(&fx.index), {}, 4};
    const auto config = PipelineConfig::defaults(Task::hotpot);
    const auto full = run_ablation(AblationMode::full, config, test, fx.modules(), 1, &retraining);
    const auto no_para = run_ablation(AblationMode::no_paragraph, config, test, fx.modules(), 1, &retraining);
    const auto no_sent = run_ablation(AblationMode::no_sentence, config, test, fx.modules(), 1, &retraining);
    ASSERT_TRUE(full.sentence_model);
    ASSERT_TRUE(no_para.sentence_model);
    EXPECT_FALSE(no_sent.sentence_model);
    EXPECT_NE(full.sentence_model->weights, no_para.sentence_model->weights);
    const auto again = run_ablation(AblationMode::full, config, test, fx.modules(), 2, &retraining).sentence_model;
    EXPECT_EQ(again->weights, full.sentence_model->weights);
    EXPECT_EQ(again->bias, full.sentence_model->bias);
}

TEST(Reports, CsvJsonAndTable) {
    const auto& fx = sweep_fixture();
    const SweepSpec spec{SweepParameter::h_s, parse_sweep_values("0:0.9:0.1"), PipelineConfig::defaults(Task::hotpot)};
    const auto rows = report_rows(run_sweep(spec, fx.fx.hotpot_queries, fx.modules()));

    std::ostringstream csv, js, table;
    emit_report(rows, ReportFormat::csv, csv, "h_s");
    emit_report(rows, ReportFormat::json, js, "h_s");
    emit_report(rows, ReportFormat::table, table, "h_s");

    std::istringstream lines(csv.str());
    std::vector<std::string> csv_lines;
    for (std::string l; std::getline(lines, l);) csv_lines.push_back(l);
    ASSERT_EQ(csv_lines.size(), 11u);
    EXPECT_EQ(csv_lines[0].rfind("h_s,sp_em,sp_prec,sp_recall,sp_f1,em,f1,", 0), 0u);

    // every CSV cell equals the JSON value, absent cells are null
    const auto doc = nlohmann::json::parse(js.str());
    ASSERT_EQ(doc.size(), 10u);
    std::vector<std::string> header;
    {
        std::istringstream h(csv_lines[0]);
        for (std::string c; std::getline(h, c, ',');) header.push_back(c);
    }
    for (std::size_t r = 0; r < 10; ++r) {
        std::vector<std::string> cells;
        std::istringstream row(csv_lines[r + 1] + ",");
        for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), header.size()) << r;
        EXPECT_EQ(cells[0], doc[r]["h_s"].get<std::string>());
        for (std::size_t c = 1; c < header.size(); ++c) {
            const auto& v = doc[r][header[c]];
            if (v.is_null()) EXPECT_TRUE(cells[c].empty()) << header[c];
            else EXPECT_EQ(std::stod(cells[c]), v.get<double>()) << header[c];
        }
    }

    std::istringstream t(table.str());
    std::vector<std::string> table_lines;
    for (std::string l; std::getline(t, l);) table_lines.push_back(l);
    ASSERT_EQ(table_lines.size(), 11u);
    for (const auto& l : table_lines) EXPECT_EQ(l.size(), table_lines[0].size());
    EXPECT_EQ(table_lines[0].find("fever_score"), std::string::npos);

    EXPECT_THROW(parse_report_format("xml"), PreconditionError);
}
