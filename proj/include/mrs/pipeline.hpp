#pragma once

// The retrieval-then-read pipeline: term-based candidates P_I, paragraph
// filtering to P_N, sentence filtering to S, then the downstream adapter.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mrs/corpus.hpp"
#include "mrs/downstream.hpp"
#include "mrs/error.hpp"
#include "mrs/query.hpp"
#include "mrs/scoring.hpp"
#include "mrs/term_retrieval.hpp"

namespace mrs {

template <class Id>
struct Scored {
    Id id;
    double score = 0.0;

    bool operator==(const Scored&) const = default;
};

using ScoredParagraph = Scored<ParagraphId>;
using ScoredSentence = Scored<SentenceId>;

/// Keeps candidates with score strictly above `h`, orders them by score
/// descending (ties by id ascending) and truncates to `k`. Threshold first,
/// then the cap.
template <class Id>
std::vector<Scored<Id>> filter_by_score(std::vector<Scored<Id>> candidates, std::size_t k, double h) {
    if (k < 1) throw PreconditionError("k must be >= 1");
    if (!(h >= 0.0 && h <= 1.0)) throw PreconditionError("threshold must lie in [0, 1]");
    std::erase_if(candidates, [h](const Scored<Id>& c) { return !(c.score > h); });
    std::sort(candidates.begin(), candidates.end(), [](const Scored<Id>& a, const Scored<Id>& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

struct StageMask {
    bool paragraph_level = true;
    bool sentence_level = true;

    bool operator==(const StageMask&) const = default;
};

struct PipelineConfig {
    Task task = Task::hotpot;
    std::size_t k_p = 2;
    double h_p = 5e-3;
    std::size_t k_s = 5;
    double h_s = 0.5;
    StageMask stages;
    std::uint64_t seed = 0;

    /// Defaults taken from the tuned grid: k in {2, 5}, paragraph h from
    /// {5e-3, 0.01, 0.1, 0.5}, sentence h in [0.1, 0.5].
    static PipelineConfig defaults(Task task) {
        PipelineConfig c;
        c.task = task;
        c.h_s = task == Task::fever ? 0.2 : 0.5;
        return c;
    }

    void validate() const {
        if (k_p < 1 || k_s < 1) throw PreconditionError("k_p and k_s must be >= 1");
        if (!(h_p >= 0.0 && h_p <= 1.0) || !(h_s >= 0.0 && h_s <= 1.0))
            throw PreconditionError("h_p and h_s must lie in [0, 1]");
    }

    bool operator==(const PipelineConfig&) const = default;
};

/// Non-owning view of the assembled components. Everything is read-only during a run.
struct PipelineModules {
    const Corpus* corpus = nullptr;
    const TermRetriever* retriever = nullptr;
    const Scorer* paragraph_scorer = nullptr;
    const Scorer* sentence_scorer = nullptr;
    const QAReader* reader = nullptr;
    const Verifier* verifier = nullptr;
};

struct StageTimings {
    std::chrono::microseconds term{0};
    std::chrono::microseconds paragraph{0};
    std::chrono::microseconds sentence{0};
    std::chrono::microseconds downstream{0};
};

/// Full per-query trace. A disabled neural stage leaves its set unset.
struct PipelineRun {
    std::string query_id;
    Task task = Task::hotpot;
    InitialCandidateSet p_initial;
    std::optional<std::vector<ScoredParagraph>> p_neural;
    std::optional<std::vector<ScoredSentence>> s_selected;
    DownstreamPrediction prediction;
    StageTimings timings;

    /// Paragraphs handed to the sentence stage: P_N, or P_I when the paragraph stage is off.
    std::vector<ParagraphId> forwarded_paragraphs() const {
        std::vector<ParagraphId> out;
        if (p_neural) {
            for (const auto& p : *p_neural) out.push_back(p.id);
        } else {
            for (const auto& p : p_initial.paragraphs) out.push_back(p.id);
        }
        return out;
    }
};

/// Non-blank sentences of the given paragraphs, in (title, index) order.
inline std::vector<SentenceId> sentences_of(const Corpus& corpus, const std::vector<ParagraphId>& paragraphs) {
    std::vector<SentenceId> out;
    for (const auto& pid : paragraphs) {
        const auto& p = corpus.get_paragraph(pid);
        for (const auto& s : p.sentences)
            if (!s.text.empty()) out.push_back({p.title, s.index});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace detail {

template <class Id>
std::vector<Scored<Id>> score_stage(const Scorer& scorer, const std::string& query,
                                    const std::vector<Id>& ids, const std::vector<ScoringInput>& inputs) {
    const auto scored = scorer.score_batch(query, inputs);
    if (scored.size() != inputs.size())
        throw ProtocolError("scorer returned " + std::to_string(scored.size()) + " scores for " +
                            std::to_string(inputs.size()) + " inputs");
    std::vector<Scored<Id>> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double s = scored[i].score;
        if (!std::isfinite(s) || s < 0.0 || s > 1.0)
            throw ProtocolError("score out of [0, 1]: " + std::to_string(s));
        out.push_back({ids[i], s});
    }
    return out;
}

template <class Fn>
auto timed(std::chrono::microseconds& slot, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Stop {
        std::chrono::microseconds& slot;
        std::chrono::steady_clock::time_point start;
        ~Stop() {
            slot = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
        }
    } stop{slot, start};
    return fn();
}

}  // namespace detail

/// Runs the enabled stages for one query. Scorer failures raise StageError;
/// downstream failures are recorded in the prediction and the trace is still
/// returned. An empty filtered set is passed on as is.
inline PipelineRun run_pipeline(const Query& query, const PipelineConfig& config, const PipelineModules& modules) {
    config.validate();
    if (!modules.corpus || !modules.retriever) throw PreconditionError("pipeline needs a corpus and a retriever");
    const auto& corpus = *modules.corpus;
    PipelineRun run;
    run.query_id = query.id;
    run.task = config.task;

    run.p_initial = detail::timed(run.timings.term, [&] { return modules.retriever->initial_candidates(query.id, query.text, config.task); });

    if (config.stages.paragraph_level) {
        if (!modules.paragraph_scorer) throw PreconditionError("paragraph stage enabled without a scorer");
        run.p_neural = detail::timed(run.timings.paragraph, [&] {
            std::vector<ParagraphId> ids;
            std::vector<ScoringInput> inputs;
            for (const auto& c : run.p_initial.paragraphs) {
                const auto& p = corpus.get_paragraph(c.id);
                ids.push_back(c.id);
                inputs.push_back({to_string(c.id), p.text(), p.title.str()});
            }
            try {
                return filter_by_score(detail::score_stage(*modules.paragraph_scorer, query.text, ids, inputs),
                                       config.k_p, config.h_p);
            } catch (const Error& e) {
                throw StageError(query.id, "paragraph", e.what(), std::current_exception());
            }
        });
    }

    const auto forwarded = sentences_of(corpus, run.forwarded_paragraphs());
    if (config.stages.sentence_level) {
        if (!modules.sentence_scorer) throw PreconditionError("sentence stage enabled without a scorer");
        run.s_selected = detail::timed(run.timings.sentence, [&] {
            std::vector<ScoringInput> inputs;
            for (const auto& sid : forwarded) inputs.push_back({to_string(sid), corpus.resolve_sentence(sid), ""});
            try {
                return filter_by_score(detail::score_stage(*modules.sentence_scorer, query.text, forwarded, inputs),
                                       config.k_s, config.h_s);
            } catch (const Error& e) {
                throw StageError(query.id, "sentence", e.what(), std::current_exception());
            }
        });
    }

    // Downstream context: S (or every forwarded sentence) in document order.
    DownstreamInput input{query.id, query.text, {}};
    std::vector<SentenceId> context_ids;
    if (run.s_selected) {
        for (const auto& s : *run.s_selected) context_ids.push_back(s.id);
        std::sort(context_ids.begin(), context_ids.end());
    } else {
        context_ids = forwarded;
    }
    for (const auto& sid : context_ids) input.sentences.push_back({sid, corpus.resolve_sentence(sid)});

    auto& prediction = run.prediction;
    prediction.query_id = query.id;
    prediction.kind = config.task == Task::fever ? PredictionKind::verification : PredictionKind::qa;
    if (run.s_selected) {
        for (const auto& s : *run.s_selected) prediction.predicted_evidence.push_back(s.id);
    } else {
        prediction.predicted_evidence = context_ids;
    }
    if (config.task == Task::fever && prediction.predicted_evidence.size() > 5)
        prediction.predicted_evidence.resize(5);

    detail::timed(run.timings.downstream, [&] {
        try {
            if (config.task == Task::fever) {
                if (!modules.verifier) throw PreconditionError("no verifier configured");
                prediction.label = modules.verifier->verify(input);
            } else {
                if (!modules.reader) throw PreconditionError("no reader configured");
                prediction.answer = modules.reader->answer(input);
            }
        } catch (const std::exception& e) {
            prediction.error = e.what();
        }
        return 0;
    });
    return run;
}

struct RunOutcome {
    std::string query_id;
    std::optional<PipelineRun> run;
    std::string error;
    std::exception_ptr cause;

    bool ok() const noexcept { return run.has_value(); }
};

/// Runs every query; one failure never aborts the others. Output order
/// matches input order regardless of `threads`.
inline std::vector<RunOutcome> run_batch(const std::vector<Query>& queries, const PipelineConfig& config,
                                         const PipelineModules& modules, std::size_t threads = 1) {
    config.validate();
    std::vector<RunOutcome> outcomes(queries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            auto& out = outcomes[i];
            out.query_id = queries[i].id;
            try {
                out.run = run_pipeline(queries[i], config, modules);
            } catch (const StageError& e) {
                out.error = e.what();
                out.cause = e.cause() ? e.cause() : std::current_exception();
            } catch (const std::exception& e) {
                out.error = e.what();
                out.cause = std::current_exception();
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, queries.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return outcomes;
}

inline std::vector<std::string> failed_query_ids(const std::vector<RunOutcome>& outcomes) {
    std::vector<std::string> out;
    for (const auto& o : outcomes)
        if (!o.ok()) out.push_back(o.query_id);
    return out;
}

}  // namespace mrs
