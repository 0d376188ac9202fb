#pragma once

// File formats: query sets (official HotpotQA JSON, FEVER JSONL, native
// JSONL), pipeline traces, official prediction files, training pairs and
// downstream contexts.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrs/corpus.hpp"
#include "mrs/error.hpp"
#include "mrs/evaluation.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/query.hpp"
#include "mrs/sampling.hpp"

namespace mrs::io {

using nlohmann::json;

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

/// Calls `fn(record, line)` for every non-blank line.
template <class Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), number);
        }
        try {
            fn(record, number);
        } catch (const json::exception& e) {
            throw ParseError(e.what(), number);
        }
    }
}

inline json sentence_json(const SentenceId& id) { return json::array({id.title.str(), id.sent_index}); }

/// FEVER page ids use underscores where titles have spaces.
inline std::string fever_page(const DocumentTitle& title) {
    std::string out = title.str();
    for (auto& c : out)
        if (c == ' ') c = '_';
    return out;
}

inline SentenceId parse_sentence_pair(const json& j) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_string() || !j[1].is_number_integer())
        throw DataError("expected [title, sentence_index], got " + j.dump());
    return {DocumentTitle(j[0].get<std::string>()), j[1].get<std::int64_t>()};
}

// ---------------------------------------------------------------------------
// Queries

enum class QueryFormat { hotpot, fever, native };

inline QueryFormat parse_query_format(std::string_view s) {
    if (s == "hotpot") return QueryFormat::hotpot;
    if (s == "fever") return QueryFormat::fever;
    if (s == "native" || s == "jsonl") return QueryFormat::native;
    throw PreconditionError("unknown query format: " + std::string(s));
}

/// Official HotpotQA JSON array: _id, question, answer, supporting_facts.
inline std::vector<Query> parse_hotpot_queries(const json& doc) {
    if (!doc.is_array()) throw ParseError("hotpot query file must be a JSON array");
    std::vector<Query> out;
    for (const auto& item : doc) {
        Query q;
        q.task = Task::hotpot;
        q.id = item.at("_id").get<std::string>();
        q.text = item.at("question").get<std::string>();
        if (item.contains("answer")) q.answer = item["answer"].get<std::string>();
        if (item.contains("supporting_facts")) {
            std::vector<SentenceId> group;
            for (const auto& sf : item["supporting_facts"]) group.push_back(parse_sentence_pair(sf));
            q.evidence_groups.push_back(std::move(group));
        }
        out.push_back(std::move(q));
    }
    return out;
}

/// FEVER JSONL: id, claim, label, evidence groups of
/// [annotation_id, evidence_id, page, sentence] (page null for NEI).
inline Query parse_fever_query(const json& j) {
    Query q;
    q.task = Task::fever;
    q.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
    q.text = j.at("claim").get<std::string>();
    if (j.contains("label")) q.label = parse_label(j["label"].get<std::string>());
    if (j.contains("evidence") && q.label != Label::nei) {
        for (const auto& group : j["evidence"]) {
            std::vector<SentenceId> g;
            for (const auto& e : group) {
                if (!e.is_array() || e.size() < 4 || e[2].is_null() || e[3].is_null()) continue;
                g.push_back({DocumentTitle(e[2].get<std::string>()), e[3].get<std::int64_t>()});
            }
            if (!g.empty()) q.evidence_groups.push_back(std::move(g));
        }
    }
    return q;
}

/// Native JSONL: id, task, text, optional answer / label, evidence_groups.
inline Query parse_native_query(const json& j) {
    Query q;
    q.id = j.at("id").get<std::string>();
    q.task = parse_task(j.at("task").get<std::string>());
    q.text = j.at("text").get<std::string>();
    if (j.contains("answer") && !j["answer"].is_null()) q.answer = j["answer"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) q.label = parse_label(j["label"].get<std::string>());
    if (j.contains("evidence_groups"))
        for (const auto& group : j["evidence_groups"]) {
            std::vector<SentenceId> g;
            for (const auto& s : group) g.push_back(parse_sentence_pair(s));
            q.evidence_groups.push_back(std::move(g));
        }
    return q;
}

inline json to_json(const Query& q) {
    json j = {{"id", q.id}, {"task", to_string(q.task)}, {"text", q.text}};
    if (q.answer) j["answer"] = *q.answer;
    if (q.label) j["label"] = to_string(*q.label);
    json groups = json::array();
    for (const auto& g : q.evidence_groups) {
        json group = json::array();
        for (const auto& s : g) group.push_back(sentence_json(s));
        groups.push_back(std::move(group));
    }
    j["evidence_groups"] = std::move(groups);
    return j;
}

inline std::vector<Query> read_queries(std::istream& in, QueryFormat format) {
    std::vector<Query> out;
    if (format == QueryFormat::hotpot) {
        try {
            return parse_hotpot_queries(json::parse(in));
        } catch (const json::exception& e) {
            throw ParseError(e.what());
        }
    }
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        out.push_back(format == QueryFormat::fever ? parse_fever_query(j) : parse_native_query(j));
    });
    return out;
}

inline std::vector<Query> load_queries(const std::filesystem::path& path, QueryFormat format) {
    auto in = open_in(path);
    try {
        return read_queries(in, format);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Guesses the format: a leading '[' means official HotpotQA, a "claim"
/// field means FEVER, anything else native.
inline QueryFormat sniff_query_format(const std::filesystem::path& path) {
    auto in = open_in(path);
    char c = 0;
    while (in.get(c) && std::isspace(static_cast<unsigned char>(c))) {}
    if (c == '[') return QueryFormat::hotpot;
    std::string line;
    std::getline(in, line);
    return line.find("\"claim\"") != std::string::npos ? QueryFormat::fever : QueryFormat::native;
}

inline void write_queries(const std::vector<Query>& queries, std::ostream& out) {
    for (const auto& q : queries) out << to_json(q).dump() << '\n';
}

/// Documents carried by official HotpotQA "context" fields ([title, sentences]),
/// one paragraph each, merged across questions.
inline Corpus corpus_from_hotpot_contexts(const json& doc) {
    std::map<DocumentTitle, Document> docs;
    for (const auto& item : doc) {
        if (!item.contains("context")) continue;
        for (const auto& ctx : item["context"]) {
            DocumentTitle title(ctx.at(0).get<std::string>());
            if (docs.count(title)) continue;
            ParagraphRecord p{title, 0, {}, {}};
            std::uint32_t i = 0;
            for (const auto& s : ctx.at(1)) p.sentences.push_back({i++, s.get<std::string>()});
            docs.emplace(title, Document{title, {std::move(p)}});
        }
    }
    std::vector<Document> out;
    for (auto& [t, d] : docs) out.push_back(std::move(d));
    return Corpus::from_documents(std::move(out));
}

// ---------------------------------------------------------------------------
// Pipeline traces

struct TraceOptions {
    bool include_timings = false;  ///< timings make traces non-reproducible
};

inline json to_json(const DownstreamPrediction& p) {
    json j = {{"query_id", p.query_id}, {"kind", p.kind == PredictionKind::qa ? "qa" : "verification"}};
    if (p.kind == PredictionKind::qa) j["answer"] = p.answer;
    j["label"] = p.label ? json(to_string(*p.label)) : json(nullptr);
    json ev = json::array();
    for (const auto& s : p.predicted_evidence) ev.push_back(sentence_json(s));
    j["predicted_evidence"] = std::move(ev);
    if (p.error) j["error"] = *p.error;
    return j;
}

inline DownstreamPrediction prediction_from_json(const json& j) {
    DownstreamPrediction p;
    p.query_id = j.at("query_id").get<std::string>();
    p.kind = j.value("kind", "qa") == "qa" ? PredictionKind::qa : PredictionKind::verification;
    p.answer = j.value("answer", "");
    if (j.contains("label") && !j["label"].is_null()) p.label = parse_label(j["label"].get<std::string>());
    for (const auto& s : j.at("predicted_evidence")) p.predicted_evidence.push_back(parse_sentence_pair(s));
    if (j.contains("error")) p.error = j["error"].get<std::string>();
    return p;
}

inline json to_json(const PipelineRun& run, const TraceOptions& options = {}) {
    json j = {{"query_id", run.query_id}, {"task", to_string(run.task)}};
    json initial = json::array();
    for (const auto& c : run.p_initial.paragraphs)
        initial.push_back({{"title", c.id.title.str()}, {"para_index", c.id.para_index}, {"source", to_string(c.source)}});
    j["p_initial"] = std::move(initial);
    if (run.p_neural) {
        json pn = json::array();
        for (const auto& p : *run.p_neural)
            pn.push_back({{"title", p.id.title.str()}, {"para_index", p.id.para_index}, {"score", p.score}});
        j["p_neural"] = std::move(pn);
    } else {
        j["p_neural"] = nullptr;
    }
    if (run.s_selected) {
        json s = json::array();
        for (const auto& x : *run.s_selected)
            s.push_back({{"title", x.id.title.str()}, {"sent_index", x.id.sent_index}, {"score", x.score}});
        j["s_selected"] = std::move(s);
    } else {
        j["s_selected"] = nullptr;
    }
    j["prediction"] = to_json(run.prediction);
    if (options.include_timings)
        j["timings_us"] = {{"term", run.timings.term.count()},
                           {"paragraph", run.timings.paragraph.count()},
                           {"sentence", run.timings.sentence.count()},
                           {"downstream", run.timings.downstream.count()}};
    return j;
}

inline PipelineRun run_from_json(const json& j) {
    PipelineRun run;
    run.query_id = j.at("query_id").get<std::string>();
    run.task = parse_task(j.at("task").get<std::string>());
    run.p_initial.query_id = run.query_id;
    for (const auto& c : j.at("p_initial"))
        run.p_initial.paragraphs.push_back({{DocumentTitle(c.at("title").get<std::string>()), c.at("para_index").get<std::uint32_t>()},
                                            parse_candidate_source(c.at("source").get<std::string>())});
    if (!j.at("p_neural").is_null()) {
        run.p_neural.emplace();
        for (const auto& p : j["p_neural"])
            run.p_neural->push_back({{DocumentTitle(p.at("title").get<std::string>()), p.at("para_index").get<std::uint32_t>()},
                                     p.at("score").get<double>()});
    }
    if (!j.at("s_selected").is_null()) {
        run.s_selected.emplace();
        for (const auto& s : j["s_selected"])
            run.s_selected->push_back({{DocumentTitle(s.at("title").get<std::string>()), s.at("sent_index").get<std::int64_t>()},
                                       s.at("score").get<double>()});
    }
    run.prediction = prediction_from_json(j.at("prediction"));
    return run;
}

inline void write_runs(const std::vector<PipelineRun>& runs, std::ostream& out, const TraceOptions& options = {}) {
    for (const auto& r : runs) out << to_json(r, options).dump() << '\n';
}

inline std::vector<PipelineRun> load_runs(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<PipelineRun> out;
    for_each_jsonl(in, [&](const json& j, std::size_t) { out.push_back(run_from_json(j)); });
    return out;
}

// ---------------------------------------------------------------------------
// Official prediction files

/// {"answer": {qid: str}, "sp": {qid: [[title, sent_index]]}}
inline json hotpot_prediction_json(const std::vector<DownstreamPrediction>& predictions) {
    json answer = json::object();
    json sp = json::object();
    for (const auto& p : predictions) {
        answer[p.query_id] = p.answer;
        json facts = json::array();
        for (const auto& s : p.predicted_evidence) facts.push_back(sentence_json(s));
        sp[p.query_id] = std::move(facts);
    }
    return {{"answer", std::move(answer)}, {"sp", std::move(sp)}};
}

inline HotpotPredictions parse_hotpot_predictions(const json& j) {
    HotpotPredictions out;
    if (j.contains("answer"))
        for (const auto& [qid, a] : j["answer"].items()) out.answer[qid] = a.get<std::string>();
    if (j.contains("sp"))
        for (const auto& [qid, facts] : j["sp"].items()) {
            auto& v = out.sp[qid];
            for (const auto& f : facts) v.push_back(parse_sentence_pair(f));
        }
    return out;
}

inline HotpotPredictions load_hotpot_predictions(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return parse_hotpot_predictions(json::parse(in));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// One line per claim: {"id", "predicted_label", "predicted_evidence": [[page, sent_index]]}.
inline json fever_prediction_json(const DownstreamPrediction& p) {
    json ev = json::array();
    for (const auto& s : p.predicted_evidence) ev.push_back(json::array({fever_page(s.title), s.sent_index}));
    return {{"id", p.query_id},
            {"predicted_label", p.label ? json(to_string(*p.label)) : json(nullptr)},
            {"predicted_evidence", std::move(ev)}};
}

inline std::map<std::string, DownstreamPrediction> load_fever_predictions(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::map<std::string, DownstreamPrediction> out;
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        DownstreamPrediction p;
        p.kind = PredictionKind::verification;
        p.query_id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
        if (!j.at("predicted_label").is_null()) p.label = parse_label(j["predicted_label"].get<std::string>());
        for (const auto& s : j.at("predicted_evidence")) p.predicted_evidence.push_back(parse_sentence_pair(s));
        out[p.query_id] = std::move(p);
    });
    return out;
}

/// Tag file: JSON object {qid: tag} or TSV lines "qid<TAB>tag".
inline std::map<std::string, std::string> load_tags(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto text = buffer.str();
    std::map<std::string, std::string> out;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        const auto doc = json::parse(text);
        for (const auto& [k, v] : doc.items()) out[k] = v.get<std::string>();
        return out;
    }
    std::istringstream lines(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(lines, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected query_id<TAB>tag", number);
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training data

inline json to_json(const LabeledPair& p) {
    return {{"query_id", p.query_id},        {"query", p.query_text},  {"context_id", p.context_id},
            {"context_title", p.context_title}, {"context", p.context_text}, {"label", p.positive ? 1 : 0},
            {"provenance", to_string(p.provenance)}};
}

inline LabeledPair pair_from_json(const json& j) {
    return {j.at("query_id").get<std::string>(),      j.at("query").get<std::string>(),
            j.at("context_id").get<std::string>(),    j.at("context").get<std::string>(),
            j.value("context_title", std::string{}),  j.at("label").get<int>() == 1,
            parse_provenance(j.at("provenance").get<std::string>())};
}

inline std::vector<LabeledPair> load_pairs(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<LabeledPair> out;
    for_each_jsonl(in, [&](const json& j, std::size_t) { out.push_back(pair_from_json(j)); });
    return out;
}

inline json to_json(const DownstreamContext& c) {
    json sentences = json::array();
    bool has_gold = false;
    for (const auto& s : c.sentences) {
        sentences.push_back({{"id", sentence_json(s.id)},
                             {"text", s.text},
                             {"provenance", s.is_gold ? "ground_truth" : "upstream_sampled"}});
        has_gold |= s.is_gold;
    }
    json j = {{"query_id", c.query_id}, {"query", c.query}, {"context", std::move(sentences)}};
    if (const auto* a = std::get_if<std::string>(&c.target)) {
        j["answer"] = *a;
        j["answer_type"] = is_yes_no(*a) ? *a : "span";
    } else {
        j["label"] = to_string(std::get<Label>(c.target));
    }
    j["provenance"] = has_gold ? "ground_truth+upstream_sampled" : "upstream_sampled";
    return j;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const MetricsReport& r) {
    json j = {{"task", to_string(r.task)}, {"count", r.count}};
    if (!r.tag.empty()) j["tag"] = r.tag;
    for (const auto& [name, value] : report_fields(r)) j[name] = value ? json(*value) : json(nullptr);
    return j;
}

inline json to_json(const std::vector<BreakdownRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"tag", r.tag}, {"count", r.count}, {"correct", r.correct}, {"accuracy", r.accuracy}});
    return out;
}

}  // namespace mrs::io
