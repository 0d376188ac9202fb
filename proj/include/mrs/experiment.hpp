#pragma once

// Sweep and ablation harness plus report emission (JSON, CSV, aligned table).

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrs/error.hpp"
#include "mrs/evaluation.hpp"
#include "mrs/io.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/sampling.hpp"
#include "mrs/scoring.hpp"

namespace mrs {

/// Evaluates pipeline outcomes against gold. Failed queries count as
/// missing predictions (hotpot) or as unlabeled claims with no evidence (fever).
inline EvaluationResult evaluate_runs(const std::vector<Query>& gold, const std::vector<RunOutcome>& outcomes,
                                      Task task, const Corpus& corpus,
                                      EvidenceSemantics semantics = EvidenceSemantics::official) {
    std::vector<PipelineRun> runs;
    for (const auto& o : outcomes)
        if (o.run) runs.push_back(*o.run);
    const RunTraces traces{&runs, corpus_lookup(corpus)};
    EvaluationResult result;
    if (task == Task::hotpot) {
        HotpotPredictions predictions;
        for (const auto& r : runs) {
            predictions.answer[r.query_id] = r.prediction.answer;
            predictions.sp[r.query_id] = r.prediction.predicted_evidence;
        }
        result = evaluate_hotpot(gold, predictions, traces);
    } else {
        std::map<std::string, DownstreamPrediction> predictions;
        for (const auto& q : gold) predictions[q.id] = DownstreamPrediction{q.id, PredictionKind::verification};
        for (const auto& r : runs) predictions[r.query_id] = r.prediction;
        result = evaluate_fever(gold, predictions, traces, semantics);
    }
    for (const auto& id : failed_query_ids(outcomes)) result.report.warnings.push_back("query failed: " + id);
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { k_p, h_p, k_s, h_s };

inline std::string_view to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::k_p: return "k_p";
        case SweepParameter::h_p: return "h_p";
        case SweepParameter::k_s: return "k_s";
        case SweepParameter::h_s: return "h_s";
    }
    return "";
}

inline SweepParameter parse_sweep_parameter(std::string_view s) {
    if (s == "k_p") return SweepParameter::k_p;
    if (s == "h_p") return SweepParameter::h_p;
    if (s == "k_s") return SweepParameter::k_s;
    if (s == "h_s") return SweepParameter::h_s;
    throw PreconditionError("unknown sweep parameter: " + std::string(s));
}

inline bool is_count_parameter(SweepParameter p) { return p == SweepParameter::k_p || p == SweepParameter::k_s; }

/// "start:stop:step" (inclusive, rounded to 1e-9) or a comma-separated list.
inline std::vector<double> parse_sweep_values(std::string_view spec) {
    auto number = [&](std::string_view s) {
        std::size_t used = 0;
        const std::string str(s);
        double v = 0;
        try {
            v = std::stod(str, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used == 0 || used != str.size()) throw PreconditionError("bad sweep value: " + str);
        return v;
    };
    std::vector<double> out;
    if (spec.find(':') != std::string_view::npos) {
        const auto a = spec.find(':');
        const auto b = spec.find(':', a + 1);
        if (b == std::string_view::npos) throw PreconditionError("range must be start:stop:step");
        const double start = number(spec.substr(0, a));
        const double stop = number(spec.substr(a + 1, b - a - 1));
        const double step = number(spec.substr(b + 1));
        if (!(step > 0) || stop < start) throw PreconditionError("range needs step > 0 and stop >= start");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) out.push_back(std::round((start + step * static_cast<double>(i)) * 1e9) / 1e9);
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            const auto comma = spec.find(',', pos);
            const auto end = comma == std::string_view::npos ? spec.size() : comma;
            out.push_back(number(spec.substr(pos, end - pos)));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
    }
    if (out.empty()) throw PreconditionError("empty sweep");
    return out;
}

struct SweepSpec {
    SweepParameter parameter = SweepParameter::h_s;
    std::vector<double> values;
    PipelineConfig base;
    bool retrain_downstream = false;

    void validate() const {
        if (values.empty()) throw PreconditionError("sweep needs at least one value");
        base.validate();
        for (double v : values) {
            if (is_count_parameter(parameter)) {
                if (v < 1 || v != std::floor(v)) throw PreconditionError(std::string(to_string(parameter)) + " values must be integers >= 1");
            } else if (!(v >= 0.0 && v <= 1.0)) {
                throw PreconditionError(std::string(to_string(parameter)) + " values must lie in [0, 1]");
            }
        }
    }

    PipelineConfig config_for(double value) const {
        auto c = base;
        switch (parameter) {
            case SweepParameter::k_p: c.k_p = static_cast<std::size_t>(value); break;
            case SweepParameter::h_p: c.h_p = value; break;
            case SweepParameter::k_s: c.k_s = static_cast<std::size_t>(value); break;
            case SweepParameter::h_s: c.h_s = value; break;
        }
        return c;
    }
};

struct SweepRow {
    double value = 0.0;
    MetricsReport report;
    std::vector<std::string> failed;
    std::size_t downstream_contexts = 0;  ///< regenerated per point when retraining is requested
};

/// Downstream contexts regenerated from one point's upstream output, the
/// desk-scale stand-in for re-training the reader/verifier at that point.
inline std::vector<DownstreamContext> downstream_contexts(const std::vector<Query>& queries,
                                                          const std::vector<RunOutcome>& outcomes, Task task,
                                                          const Corpus& corpus, const ContextSpec& spec,
                                                          std::vector<std::string>* warnings = nullptr) {
    std::map<std::string, const PipelineRun*> runs;
    for (const auto& o : outcomes)
        if (o.run) runs[o.query_id] = &*o.run;
    std::vector<DownstreamContext> out;
    std::vector<NliItem> nli;
    for (const auto& q : queries) {
        auto it = runs.find(q.id);
        if (it == runs.end()) continue;
        const auto& run = *it->second;
        std::vector<SentenceId> upstream;
        if (run.s_selected) {
            for (const auto& s : *run.s_selected) upstream.push_back(s.id);
        } else {
            upstream = sentences_of(corpus, run.forwarded_paragraphs());
        }
        const auto gold = resolvable(corpus, q.gold_sentences());
        try {
            if (task == Task::hotpot) {
                if (q.answer) out.push_back(build_qa_context(q, gold, upstream, *q.answer, spec, corpus));
            } else if (q.label) {
                nli.push_back({q, *q.label, *q.label == Label::nei ? std::vector<SentenceId>{} : gold, upstream});
            }
        } catch (const DataError& e) {
            if (warnings) warnings->push_back(e.what());
        }
    }
    if (!nli.empty()) {
        std::erase_if(nli, [&](const NliItem& item) {
            const bool bad = item.label != Label::nei && item.gold.empty();
            if (bad && warnings) warnings->push_back("claim " + item.query.id + ": no resolvable evidence");
            return bad;
        });
        auto built = build_nli_contexts(nli, spec, corpus);
        out.insert(out.end(), built.begin(), built.end());
    }
    return out;
}

/// One row per value, ordered by value. Scorers are wrapped in a shared cache
/// so every point reuses the scores of the first.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::vector<Query>& queries,
                                       const PipelineModules& modules, std::size_t threads = 1,
                                       EvidenceSemantics semantics = EvidenceSemantics::official) {
    spec.validate();
    std::optional<CachingScorer> paragraph_cache, sentence_cache;
    auto cached = modules;
    if (modules.paragraph_scorer) cached.paragraph_scorer = &paragraph_cache.emplace(*modules.paragraph_scorer);
    if (modules.sentence_scorer) cached.sentence_scorer = &sentence_cache.emplace(*modules.sentence_scorer);

    auto values = spec.values;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<SweepRow> rows;
    for (double v : values) {
        const auto config = spec.config_for(v);
        const auto outcomes = run_batch(queries, config, cached, threads);
        SweepRow row;
        row.value = v;
        row.report = evaluate_runs(queries, outcomes, config.task, *modules.corpus, semantics).report;
        row.report.tag = std::string(to_string(spec.parameter)) + "=" + io::json(v).dump();
        row.failed = failed_query_ids(outcomes);
        if (spec.retrain_downstream)
            row.downstream_contexts =
                downstream_contexts(queries, outcomes, config.task, *modules.corpus, {config.seed}, &row.report.warnings).size();
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Ablations

enum class AblationMode { full, no_paragraph, no_sentence };

inline std::string_view to_string(AblationMode m) {
    switch (m) {
        case AblationMode::full: return "full";
        case AblationMode::no_paragraph: return "no_paragraph";
        case AblationMode::no_sentence: return "no_sentence";
    }
    return "";
}

inline AblationMode parse_ablation_mode(std::string_view s) {
    if (s == "full") return AblationMode::full;
    if (s == "no_paragraph" || s == "no-paragraph") return AblationMode::no_paragraph;
    if (s == "no_sentence" || s == "no-sentence") return AblationMode::no_sentence;
    throw PreconditionError("unknown ablation mode: " + std::string(s));
}

inline StageMask stage_mask(AblationMode m) {
    return {m != AblationMode::no_paragraph, m != AblationMode::no_sentence};
}

/// Optional re-training of the sentence scorer before evaluating a mode:
/// negatives come from the sentences of whatever the sentence stage would
/// receive in that mode (P_N, or P_I without the paragraph stage).
struct SentenceRetraining {
    const std::vector<Query>* train_queries = nullptr;
    FeatureExtractor features;
    TrainConfig train;
    std::size_t neg_per_pos = 4;
};

struct AblationResult {
    MetricsReport report;
    std::vector<RunOutcome> outcomes;
    std::optional<LexicalScorerModel> sentence_model;
};

inline LexicalScorerModel retrain_sentence_scorer(const SentenceRetraining& spec, const PipelineConfig& config,
                                                  const PipelineModules& modules, std::size_t threads) {
    auto upstream_config = config;
    upstream_config.stages.sentence_level = false;
    const auto outcomes = run_batch(*spec.train_queries, upstream_config, modules, threads);
    std::vector<LabeledPair> pairs;
    SamplingSpec sampling{SamplingLevel::sentence, spec.neg_per_pos, config.seed, 0};
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].run) continue;
        const auto& q = (*spec.train_queries)[i];
        const auto upstream = sentences_of(*modules.corpus, outcomes[i].run->forwarded_paragraphs());
        if (upstream.empty()) continue;
        auto sample = sample_retrieval_pairs(q, resolvable(*modules.corpus, q.gold_sentences()), upstream, sampling,
                                             *modules.corpus);
        pairs.insert(pairs.end(), sample.pairs.begin(), sample.pairs.end());
    }
    auto train = spec.train;
    train.seed = config.seed;
    return train_logistic_scorer(std::span<const LabeledPair>(pairs), spec.features, train);
}

inline AblationResult run_ablation(AblationMode mode, PipelineConfig config, const std::vector<Query>& queries,
                                   PipelineModules modules, std::size_t threads = 1,
                                   const SentenceRetraining* retraining = nullptr,
                                   EvidenceSemantics semantics = EvidenceSemantics::official) {
    config.stages = stage_mask(mode);
    AblationResult result;
    std::optional<LexicalScorer> retrained;
    if (retraining && retraining->train_queries && config.stages.sentence_level) {
        result.sentence_model = retrain_sentence_scorer(*retraining, config, modules, threads);
        modules.sentence_scorer = &retrained.emplace(*result.sentence_model, retraining->features);
    }
    result.outcomes = run_batch(queries, config, modules, threads);
    result.report = evaluate_runs(queries, result.outcomes, config.task, *modules.corpus, semantics).report;
    result.report.tag = std::string(to_string(mode));
    return result;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { json, csv, table };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "table") return ReportFormat::table;
    throw PreconditionError("unknown report format: " + std::string(s));
}

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_percent(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v * 100.0;
    return s.str();
}

}  // namespace detail

/// Labeled rows: (row label, report). The CSV and table share one column set.
using ReportRows = std::vector<std::pair<std::string, MetricsReport>>;

inline ReportRows report_rows(const std::vector<SweepRow>& rows) {
    ReportRows out;
    for (const auto& r : rows) out.emplace_back(detail::format_number(r.value), r.report);
    return out;
}

inline void emit_json(const ReportRows& rows, const std::string& key, std::ostream& out) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [label, report] : rows) {
        auto j = io::to_json(report);
        j[key] = label;
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

/// Header "<key>,sp_em,sp_prec,...", absent cells empty. Values round-trip
/// the JSON values exactly.
inline void emit_csv(const ReportRows& rows, const std::string& key, std::ostream& out) {
    if (rows.empty()) return;
    out << key;
    for (const auto& [name, v] : report_fields(rows.front().second)) out << ',' << name;
    out << ",count\n";
    for (const auto& [label, report] : rows) {
        out << label;
        for (const auto& [name, v] : report_fields(report)) {
            out << ',';
            if (v) out << detail::format_number(*v);
        }
        out << ',' << report.count << '\n';
    }
}

/// Aligned columns in percent, "-" for absent metrics. Columns absent in every
/// row are dropped.
inline void emit_table(const ReportRows& rows, const std::string& key, std::ostream& out) {
    if (rows.empty()) return;
    const auto names = report_fields(rows.front().second);
    std::vector<bool> keep(names.size(), false);
    for (const auto& [label, report] : rows) {
        const auto fields = report_fields(report);
        for (std::size_t i = 0; i < fields.size(); ++i) keep[i] = keep[i] || fields[i].second.has_value();
    }
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{key};
    for (std::size_t i = 0; i < names.size(); ++i)
        if (keep[i]) header.push_back(names[i].first);
    cells.push_back(header);
    for (const auto& [label, report] : rows) {
        std::vector<std::string> line{label};
        const auto fields = report_fields(report);
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (keep[i]) line.push_back(fields[i].second ? detail::format_percent(*fields[i].second) : "-");
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i > 0) out << "  ";
            if (i == 0) out << std::left << std::setw(static_cast<int>(width[i])) << line[i];
            else out << std::right << std::setw(static_cast<int>(width[i])) << line[i];
        }
        out << '\n';
    }
}

inline void emit_report(const ReportRows& rows, ReportFormat format, std::ostream& out, const std::string& key = "value") {
    switch (format) {
        case ReportFormat::json: emit_json(rows, key, out); break;
        case ReportFormat::csv: emit_csv(rows, key, out); break;
        case ReportFormat::table: emit_table(rows, key, out); break;
    }
}

inline void emit_report(const ReportRows& rows, ReportFormat format, const std::filesystem::path& path,
                        const std::string& key = "value") {
    auto out = io::open_out(path);
    emit_report(rows, format, out, key);
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace mrs
