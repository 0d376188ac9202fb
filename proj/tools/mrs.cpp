// mrs: command-line front end for corpus/index builds, pipeline runs,
// sampling, evaluation, sweeps and ablations.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 remote component.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mrs/config.hpp"
#include "mrs/corpus.hpp"
#include "mrs/downstream.hpp"
#include "mrs/evaluation.hpp"
#include "mrs/experiment.hpp"
#include "mrs/io.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/remote.hpp"
#include "mrs/sampling.hpp"
#include "mrs/scoring.hpp"
#include "mrs/term_index.hpp"
#include "mrs/term_retrieval.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, remote = 3 };

int exit_code_for(std::exception_ptr e) {
    try {
        std::rethrow_exception(e);
    } catch (const mrs::StageError& s) {
        return s.cause() ? exit_code_for(s.cause()) : data;
    } catch (const mrs::TransportError&) {
        return remote;
    } catch (const mrs::ProtocolError&) {
        return remote;
    } catch (const mrs::PreconditionError&) {
        return usage;
    } catch (const CLI::Error&) {
        return usage;
    } catch (...) {
        return data;
    }
}

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    std::string log_level = "info";
};

mrs::AppConfig load_app_config(const Globals& g) {
    auto config = mrs::load_config(g.config_path);
    if (g.seed) config.pipeline.seed = *g.seed;
    return config;
}

/// Binary store when the file carries the store magic, plain JSONL otherwise.
mrs::Corpus load_corpus(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mrs::DataError("cannot open corpus " + path.string());
    std::string magic(mrs::kCorpusStoreMagic.size(), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (in.gcount() == static_cast<std::streamsize>(magic.size()) && magic == mrs::kCorpusStoreMagic)
        return mrs::open_corpus_store(path);
    return mrs::ingest_corpus(path, mrs::CorpusFormat::plain_jsonl);
}

std::vector<mrs::Query> load_queries(const fs::path& path, const std::string& format) {
    const auto f = format == "auto" ? mrs::io::sniff_query_format(path) : mrs::io::parse_query_format(format);
    return mrs::io::load_queries(path, f);
}

/// Corpus, index and every pipeline component built from the configuration.
struct Assembly {
    mrs::AppConfig config;
    mrs::Corpus corpus;
    mrs::TermIndex index;
    std::unique_ptr<mrs::TermRetriever> retriever;
    std::unique_ptr<mrs::Scorer> paragraph_scorer;
    std::unique_ptr<mrs::Scorer> sentence_scorer;
    std::unique_ptr<mrs::QAReader> reader;
    std::unique_ptr<mrs::Verifier> verifier;

    mrs::PipelineModules modules() const {
        return {&corpus, retriever.get(), paragraph_scorer.get(), sentence_scorer.get(), reader.get(), verifier.get()};
    }
};

std::unique_ptr<mrs::Scorer> make_scorer(const mrs::ScorerSettings& s, const mrs::AppConfig& config,
                                         const mrs::TermIndex& index, const char* level) {
    if (!s.endpoint.empty()) {
        spdlog::info("{} scorer: remote {}", level, s.endpoint);
        return mrs::connect_remote_scorer(
            s.endpoint, {config.remote.timeout, config.remote.batch_size, config.remote.max_in_flight});
    }
    mrs::LexicalScorerModel model;
    if (!s.model.empty()) {
        model = mrs::LexicalScorerModel::load(s.model);
        spdlog::info("{} scorer: lexical model {}", level, s.model);
    } else {
        spdlog::warn("{} scorer: no model configured, all scores are 0.5", level);
    }
    return std::make_unique<mrs::LexicalScorer>(model, mrs::FeatureExtractor(&index));
}

Assembly assemble(const Globals& g, const fs::path& corpus_path, const std::string& index_path,
                  const std::vector<mrs::Query>* oracle_source = nullptr) {
    Assembly a;
    a.config = load_app_config(g);
    a.corpus = load_corpus(corpus_path);
    if (!index_path.empty()) {
        a.index = mrs::TermIndex::load(index_path);
    } else {
        spdlog::info("building document index in memory");
        a.index = mrs::TermIndex::build(a.corpus, mrs::Granularity::document);
    }
    a.retriever = std::make_unique<mrs::TermRetriever>(a.corpus, a.index, a.config.term);
    a.paragraph_scorer = make_scorer(a.config.paragraph_scorer, a.config, a.index, "paragraph");
    a.sentence_scorer = make_scorer(a.config.sentence_scorer, a.config, a.index, "sentence");

    const auto& d = a.config.downstream;
    if (d.reader == "remote") {
        a.reader = std::make_unique<mrs::RemoteReader>(d.endpoint, a.config.remote.timeout);
    } else if (d.reader == "oracle") {
        std::unordered_map<std::string, std::string> answers;
        if (oracle_source)
            for (const auto& q : *oracle_source)
                if (q.answer) answers[q.id] = *q.answer;
        a.reader = std::make_unique<mrs::OracleReader>(std::move(answers));
    } else if (d.reader == "baseline") {
        a.reader = std::make_unique<mrs::BaselineReader>(mrs::FeatureExtractor(&a.index));
    } else {
        throw mrs::PreconditionError("unknown reader: " + d.reader);
    }
    if (d.verifier == "remote") {
        a.verifier = std::make_unique<mrs::RemoteVerifier>(d.endpoint, a.config.remote.timeout);
    } else if (d.verifier == "oracle") {
        std::unordered_map<std::string, mrs::Label> labels;
        if (oracle_source)
            for (const auto& q : *oracle_source)
                if (q.label) labels[q.id] = *q.label;
        a.verifier = std::make_unique<mrs::OracleVerifier>(std::move(labels));
    } else if (d.verifier == "baseline") {
        a.verifier = std::make_unique<mrs::BaselineVerifier>();
    } else {
        throw mrs::PreconditionError("unknown verifier: " + d.verifier);
    }
    return a;
}

/// Queries must match the configured task.
void check_task(const std::vector<mrs::Query>& queries, mrs::Task task) {
    for (const auto& q : queries)
        if (q.task != task)
            throw mrs::PreconditionError("query " + q.id + " is a " + std::string(mrs::to_string(q.task)) +
                                         " query but the configured task is " + std::string(mrs::to_string(task)));
}

int worst_failure(const std::vector<mrs::RunOutcome>& outcomes) {
    int code = ok;
    for (const auto& o : outcomes) {
        if (o.ok()) continue;
        spdlog::error("{}", o.error);
        code = std::max(code, exit_code_for(o.cause));
    }
    return code;
}

// ---------------------------------------------------------------------------

int cmd_build_corpus(const std::vector<std::string>& inputs, const std::string& format, const std::string& out,
                     const std::string& jsonl_out) {
    std::vector<fs::path> paths(inputs.begin(), inputs.end());
    const auto corpus = mrs::ingest_corpus(paths, mrs::parse_corpus_format(format));
    const auto& c = corpus.counts();
    spdlog::info("{} documents, {} paragraphs, {} sentences", c.documents, c.paragraphs, c.sentences);
    mrs::save_corpus_store(corpus, out);
    const fs::path plain = jsonl_out.empty() ? fs::path(out).replace_extension(".jsonl") : fs::path(jsonl_out);
    auto stream = mrs::io::open_out(plain);
    mrs::write_plain_jsonl(corpus, stream);
    spdlog::info("wrote {} and {}", out, plain.string());
    return ok;
}

int cmd_build_index(const std::string& corpus_path, const std::string& granularity, const std::string& out) {
    const auto corpus = load_corpus(corpus_path);
    if (granularity != "document" && granularity != "paragraph")
        throw mrs::PreconditionError("granularity must be document or paragraph");
    const auto index = mrs::TermIndex::build(
        corpus, granularity == "document" ? mrs::Granularity::document : mrs::Granularity::paragraph);
    index.save(out);
    spdlog::info("indexed {} units, {} terms", index.doc_count(), index.vocab_size());
    return ok;
}

struct RunArgs {
    std::string corpus, index, queries, query_format = "auto", out, predictions;
    bool timings = false, no_paragraph = false, no_sentence = false;
};

int cmd_run(const Globals& g, const RunArgs& args) {
    const auto queries = load_queries(args.queries, args.query_format);
    auto a = assemble(g, args.corpus, args.index, &queries);
    auto config = a.config.pipeline;
    if (args.no_paragraph) config.stages.paragraph_level = false;
    if (args.no_sentence) config.stages.sentence_level = false;
    check_task(queries, config.task);
    const auto outcomes = mrs::run_batch(queries, config, a.modules(), g.threads);

    std::vector<mrs::PipelineRun> runs;
    for (const auto& o : outcomes)
        if (o.run) runs.push_back(*o.run);
    auto out = mrs::io::open_out(args.out);
    mrs::io::write_runs(runs, out, {args.timings});
    spdlog::info("{} of {} queries ran", runs.size(), queries.size());

    if (!args.predictions.empty()) {
        std::vector<mrs::DownstreamPrediction> predictions;
        for (const auto& r : runs) predictions.push_back(r.prediction);
        auto p = mrs::io::open_out(args.predictions);
        if (config.task == mrs::Task::hotpot) {
            p << mrs::io::hotpot_prediction_json(predictions).dump() << '\n';
        } else {
            for (const auto& pred : predictions) p << mrs::io::fever_prediction_json(pred).dump() << '\n';
        }
    }
    return worst_failure(outcomes);
}

struct SampleArgs {
    std::string level, corpus, queries, query_format = "auto", runs, out;
    std::optional<std::size_t> neg_per_pos;
    std::optional<std::size_t> context_size;
};

int cmd_sample(const Globals& g, const SampleArgs& args) {
    const auto config = load_app_config(g);
    const auto corpus = load_corpus(args.corpus);
    const auto queries = load_queries(args.queries, args.query_format);
    const auto runs = mrs::io::load_runs(args.runs);
    std::map<std::string, const mrs::PipelineRun*> by_id;
    for (const auto& r : runs) by_id[r.query_id] = &r;
    const auto seed = config.pipeline.seed;
    auto out = mrs::io::open_out(args.out);
    std::vector<std::string> warnings;
    std::size_t emitted = 0;

    if (args.level == "paragraph" || args.level == "sentence") {
        const bool para = args.level == "paragraph";
        mrs::SamplingSpec spec{para ? mrs::SamplingLevel::paragraph : mrs::SamplingLevel::sentence,
                               args.neg_per_pos.value_or(para ? config.sampling.paragraph_neg_per_pos
                                                              : config.sampling.sentence_neg_per_pos),
                               seed, 0};
        for (const auto& q : queries) {
            auto it = by_id.find(q.id);
            if (it == by_id.end()) {
                warnings.push_back("no trace for query " + q.id);
                continue;
            }
            const auto& run = *it->second;
            mrs::RetrievalSample sample;
            if (para) {
                std::vector<mrs::ParagraphId> upstream;
                for (const auto& c : run.p_initial.paragraphs) upstream.push_back(c.id);
                if (upstream.empty()) {
                    warnings.push_back("query " + q.id + ": empty upstream set, skipped");
                    continue;
                }
                sample = mrs::sample_retrieval_pairs(q, mrs::gold_paragraphs(corpus, q.gold_sentences(), &warnings),
                                                     upstream, spec, corpus);
            } else {
                const auto upstream = mrs::sentences_of(corpus, run.forwarded_paragraphs());
                if (upstream.empty()) {
                    warnings.push_back("query " + q.id + ": empty upstream set, skipped");
                    continue;
                }
                sample = mrs::sample_retrieval_pairs(q, mrs::resolvable(corpus, q.gold_sentences()), upstream, spec,
                                                     corpus);
            }
            warnings.insert(warnings.end(), sample.warnings.begin(), sample.warnings.end());
            for (const auto& p : sample.pairs) out << mrs::io::to_json(p).dump() << '\n';
            emitted += sample.pairs.size();
        }
    } else if (args.level == "qa" || args.level == "nli") {
        std::vector<mrs::RunOutcome> outcomes;
        for (const auto& r : runs) outcomes.push_back({r.query_id, r, "", nullptr});
        const auto contexts = mrs::downstream_contexts(
            queries, outcomes, args.level == "qa" ? mrs::Task::hotpot : mrs::Task::fever, corpus,
            {seed, args.context_size.value_or(config.sampling.context_size)}, &warnings);
        for (const auto& c : contexts) out << mrs::io::to_json(c).dump() << '\n';
        emitted = contexts.size();
    } else {
        throw mrs::PreconditionError("level must be paragraph, sentence, qa or nli");
    }
    for (const auto& w : warnings) spdlog::warn("{}", w);
    spdlog::info("wrote {} records to {}", emitted, args.out);
    return ok;
}

struct TrainArgs {
    std::string pairs, corpus, index, out;
    std::optional<double> lr;
    std::optional<std::size_t> epochs, batch;
};

int cmd_train(const Globals& g, const TrainArgs& args) {
    const auto config = load_app_config(g);
    const auto pairs = mrs::io::load_pairs(args.pairs);
    std::optional<mrs::TermIndex> index;
    if (!args.index.empty()) {
        index = mrs::TermIndex::load(args.index);
    } else if (!args.corpus.empty()) {
        index = mrs::TermIndex::build(load_corpus(args.corpus), mrs::Granularity::document);
    } else {
        spdlog::warn("no corpus statistics given, features use uniform term weights");
    }
    mrs::TrainConfig train;
    if (args.lr) train.learning_rate = *args.lr;
    if (args.epochs) train.epochs = *args.epochs;
    if (args.batch) train.batch_size = *args.batch;
    train.seed = config.pipeline.seed;
    mrs::TrainReport report;
    const auto model = mrs::train_logistic_scorer(std::span<const mrs::LabeledPair>(pairs),
                                                  mrs::FeatureExtractor(index ? &*index : nullptr), train, &report);
    spdlog::info("loss {:.6f} -> {:.6f} over {} epochs", report.initial_loss,
                 report.epoch_losses.empty() ? report.initial_loss : report.epoch_losses.back(),
                 report.epoch_losses.size());
    model.save(args.out);
    return ok;
}

struct EvalArgs {
    std::string task, pred, gold, gold_format = "auto", runs, tags, corpus, format = "table", out;
};

int cmd_eval(const Globals& g, const EvalArgs& args) {
    const auto config = load_app_config(g);
    const auto task = mrs::parse_task(args.task);
    const auto gold = load_queries(args.gold, args.gold_format);
    std::optional<mrs::Corpus> corpus;
    if (!args.corpus.empty()) corpus = load_corpus(args.corpus);
    std::vector<mrs::PipelineRun> runs;
    mrs::RunTraces traces;
    if (!args.runs.empty()) {
        runs = mrs::io::load_runs(args.runs);
        traces.runs = &runs;
        if (corpus) traces.lookup = mrs::corpus_lookup(*corpus);
        else spdlog::warn("--runs without --corpus: paragraph metrics and oracles need the corpus");
    }
    mrs::EvaluationResult result;
    if (task == mrs::Task::hotpot) {
        result = mrs::evaluate_hotpot(gold, mrs::io::load_hotpot_predictions(args.pred), traces);
    } else {
        result = mrs::evaluate_fever(gold, mrs::io::load_fever_predictions(args.pred), traces,
                                     mrs::parse_evidence_semantics(config.evidence_semantics));
    }
    for (const auto& w : result.report.warnings) spdlog::warn("{}", w);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!args.out.empty()) {
        file = mrs::io::open_out(args.out);
        out = &file;
    }
    mrs::emit_report({{"eval", result.report}}, mrs::parse_report_format(args.format), *out, "run");
    if (!args.tags.empty()) {
        std::vector<std::string> warnings;
        const auto rows = mrs::breakdown_report(result.examples, mrs::io::load_tags(args.tags), &warnings);
        for (const auto& w : warnings) spdlog::warn("{}", w);
        if (args.format == "json") {
            *out << mrs::io::to_json(rows).dump(2) << '\n';
        } else {
            *out << "\ntag\tcount\tcorrect\taccuracy\n";
            for (const auto& r : rows)
                *out << r.tag << '\t' << r.count << '\t' << r.correct << '\t' << mrs::detail::format_percent(r.accuracy)
                     << '\n';
        }
    }
    return ok;
}

struct SweepArgs {
    std::string corpus, index, queries, query_format = "auto", parameter, values, format = "table", out;
    bool retrain = false;
};

int cmd_sweep(const Globals& g, const SweepArgs& args) {
    const auto queries = load_queries(args.queries, args.query_format);
    auto a = assemble(g, args.corpus, args.index, &queries);
    check_task(queries, a.config.pipeline.task);
    mrs::SweepSpec spec{mrs::parse_sweep_parameter(args.parameter), mrs::parse_sweep_values(args.values),
                        a.config.pipeline, args.retrain};
    const auto rows = mrs::run_sweep(spec, queries, a.modules(), g.threads,
                                     mrs::parse_evidence_semantics(a.config.evidence_semantics));
    int code = ok;
    for (const auto& r : rows)
        if (!r.failed.empty()) {
            spdlog::error("{}={}: {} queries failed", args.parameter, r.value, r.failed.size());
            code = data;
        }
    const auto format = mrs::parse_report_format(args.format);
    if (args.out.empty()) mrs::emit_report(mrs::report_rows(rows), format, std::cout, args.parameter);
    else mrs::emit_report(mrs::report_rows(rows), format, fs::path(args.out), args.parameter);
    return code;
}

struct AblateArgs {
    std::vector<std::string> modes;
    std::string corpus, index, queries, query_format = "auto", train_queries, format = "table", out;
};

int cmd_ablate(const Globals& g, const AblateArgs& args) {
    const auto queries = load_queries(args.queries, args.query_format);
    auto a = assemble(g, args.corpus, args.index, &queries);
    check_task(queries, a.config.pipeline.task);
    std::vector<mrs::Query> train_queries;
    std::optional<mrs::SentenceRetraining> retraining;
    if (!args.train_queries.empty()) {
        train_queries = load_queries(args.train_queries, args.query_format);
        retraining = mrs::SentenceRetraining{&train_queries, mrs::FeatureExtractor(&a.index), {},
                                             a.config.sampling.sentence_neg_per_pos};
    }
    mrs::ReportRows rows;
    int code = ok;
    for (const auto& m : args.modes) {
        const auto mode = mrs::parse_ablation_mode(m);
        auto result = mrs::run_ablation(mode, a.config.pipeline, queries, a.modules(), g.threads,
                                        retraining ? &*retraining : nullptr,
                                        mrs::parse_evidence_semantics(a.config.evidence_semantics));
        code = std::max(code, worst_failure(result.outcomes));
        rows.emplace_back(m, std::move(result.report));
    }
    const auto format = mrs::parse_report_format(args.format);
    if (args.out.empty()) mrs::emit_report(rows, format, std::cout, "mode");
    else mrs::emit_report(rows, format, fs::path(args.out), "mode");
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical retrieval pipeline for machine reading at scale"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for sampling and training (overrides [task] seed)");
    app.add_option("--threads", g.threads, "Worker threads for batch runs")->check(CLI::PositiveNumber);
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    std::vector<std::string> bc_inputs;
    std::string bc_format = "plain", bc_out, bc_jsonl;
    auto* bc = app.add_subcommand("build-corpus", "Ingest a corpus into the binary store (plus plain JSONL)");
    bc->add_option("inputs", bc_inputs, "Source files")->required()->check(CLI::ExistingFile);
    bc->add_option("--format", bc_format, "fever | hotpot | plain")->check(CLI::IsMember({"fever", "hotpot", "plain"}));
    bc->add_option("--out", bc_out, "Binary store path")->required();
    bc->add_option("--jsonl-out", bc_jsonl, "Plain JSONL path (default: store path with .jsonl)");

    std::string bi_corpus, bi_granularity = "document", bi_out;
    auto* bi = app.add_subcommand("build-index", "Build a TF-IDF index");
    bi->add_option("--corpus", bi_corpus)->required()->check(CLI::ExistingFile);
    bi->add_option("--granularity", bi_granularity)->check(CLI::IsMember({"document", "paragraph"}));
    bi->add_option("--out", bi_out)->required();

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Run the pipeline over a query set");
    run->add_option("--corpus", ra.corpus)->required()->check(CLI::ExistingFile);
    run->add_option("--index", ra.index, "Document index (built in memory when omitted)")->check(CLI::ExistingFile);
    run->add_option("--queries", ra.queries)->required()->check(CLI::ExistingFile);
    run->add_option("--query-format", ra.query_format)->check(CLI::IsMember({"auto", "hotpot", "fever", "native"}));
    run->add_option("--out", ra.out, "Trace output (one PipelineRun per line)")->required();
    run->add_option("--predictions", ra.predictions, "Official prediction file for the task");
    run->add_flag("--timings", ra.timings, "Include per-stage timings in the trace");
    run->add_flag("--no-paragraph", ra.no_paragraph, "Disable the paragraph stage");
    run->add_flag("--no-sentence", ra.no_sentence, "Disable the sentence stage");

    SampleArgs sa;
    auto* sample = app.add_subcommand("sample", "Emit upstream-conditioned training data from run traces");
    sample->add_option("--level", sa.level, "paragraph | sentence | qa | nli")
        ->required()
        ->check(CLI::IsMember({"paragraph", "sentence", "qa", "nli"}));
    sample->add_option("--corpus", sa.corpus)->required()->check(CLI::ExistingFile);
    sample->add_option("--queries", sa.queries, "Gold queries")->required()->check(CLI::ExistingFile);
    sample->add_option("--query-format", sa.query_format)->check(CLI::IsMember({"auto", "hotpot", "fever", "native"}));
    sample->add_option("--runs", sa.runs, "Pipeline trace")->required()->check(CLI::ExistingFile);
    sample->add_option("--out", sa.out)->required();
    sample->add_option("--neg-per-pos", sa.neg_per_pos)->check(CLI::PositiveNumber);
    sample->add_option("--context-size", sa.context_size)->check(CLI::PositiveNumber);

    TrainArgs ta;
    auto* train = app.add_subcommand("train-scorer", "Train the built-in lexical scorer on sampled pairs");
    train->add_option("--pairs", ta.pairs)->required()->check(CLI::ExistingFile);
    train->add_option("--corpus", ta.corpus, "Corpus for term statistics")->check(CLI::ExistingFile);
    train->add_option("--index", ta.index, "Index for term statistics")->check(CLI::ExistingFile);
    train->add_option("--out", ta.out, "Model JSON")->required();
    train->add_option("--lr", ta.lr)->check(CLI::PositiveNumber);
    train->add_option("--epochs", ta.epochs);
    train->add_option("--batch", ta.batch)->check(CLI::PositiveNumber);

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Score predictions against gold");
    eval->add_option("--task", ea.task)->required()->check(CLI::IsMember({"hotpot", "fever"}));
    eval->add_option("--pred", ea.pred, "Official prediction file")->required()->check(CLI::ExistingFile);
    eval->add_option("--gold", ea.gold)->required()->check(CLI::ExistingFile);
    eval->add_option("--gold-format", ea.gold_format)->check(CLI::IsMember({"auto", "hotpot", "fever", "native"}));
    eval->add_option("--runs", ea.runs, "Pipeline trace for retrieval metrics and oracles")->check(CLI::ExistingFile);
    eval->add_option("--corpus", ea.corpus, "Corpus (paragraph lookup for --runs)")->check(CLI::ExistingFile);
    eval->add_option("--tags", ea.tags, "query_id -> tag file for a per-tag breakdown")->check(CLI::ExistingFile);
    eval->add_option("--format", ea.format)->check(CLI::IsMember({"json", "csv", "table"}));
    eval->add_option("--out", ea.out);

    SweepArgs wa;
    auto* sweep = app.add_subcommand("sweep", "Sweep one filtering parameter");
    sweep->add_option("--corpus", wa.corpus)->required()->check(CLI::ExistingFile);
    sweep->add_option("--index", wa.index)->check(CLI::ExistingFile);
    sweep->add_option("--queries", wa.queries)->required()->check(CLI::ExistingFile);
    sweep->add_option("--query-format", wa.query_format)->check(CLI::IsMember({"auto", "hotpot", "fever", "native"}));
    sweep->add_option("--param", wa.parameter)->required()->check(CLI::IsMember({"k_p", "h_p", "k_s", "h_s"}));
    sweep->add_option("--values", wa.values, "start:stop:step or v1,v2,...")->required();
    sweep->add_flag("--retrain-downstream", wa.retrain, "Regenerate downstream contexts at every point");
    sweep->add_option("--format", wa.format)->check(CLI::IsMember({"json", "csv", "table"}));
    sweep->add_option("--out", wa.out);

    AblateArgs aa;
    auto* ablate = app.add_subcommand("ablate", "Run ablation modes");
    ablate->add_option("modes", aa.modes, "full | no_paragraph | no_sentence")
        ->required()
        ->check(CLI::IsMember({"full", "no_paragraph", "no_sentence"}));
    ablate->add_option("--corpus", aa.corpus)->required()->check(CLI::ExistingFile);
    ablate->add_option("--index", aa.index)->check(CLI::ExistingFile);
    ablate->add_option("--queries", aa.queries)->required()->check(CLI::ExistingFile);
    ablate->add_option("--query-format", aa.query_format)->check(CLI::IsMember({"auto", "hotpot", "fever", "native"}));
    ablate->add_option("--train-queries", aa.train_queries, "Re-train the sentence scorer per mode on these")
        ->check(CLI::ExistingFile);
    ablate->add_option("--format", aa.format)->check(CLI::IsMember({"json", "csv", "table"}));
    ablate->add_option("--out", aa.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    auto logger = spdlog::stderr_color_mt("mrs");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        if (*bc) return cmd_build_corpus(bc_inputs, bc_format == "plain" ? "plain_jsonl" : bc_format + "_wiki", bc_out, bc_jsonl);
        if (*bi) return cmd_build_index(bi_corpus, bi_granularity, bi_out);
        if (*run) return cmd_run(g, ra);
        if (*sample) return cmd_sample(g, sa);
        if (*train) return cmd_train(g, ta);
        if (*eval) return cmd_eval(g, ea);
        if (*sweep) return cmd_sweep(g, wa);
        if (*ablate) return cmd_ablate(g, aa);
    } catch (...) {
        try {
            throw;
        } catch (const std::exception& e) {
            spdlog::error("{}", e.what());
        }
        return exit_code_for(std::current_exception());
    }
    return usage;
}
