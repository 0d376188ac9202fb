#pragma once

// Metrics: answer EM/F1, supporting-fact and paragraph retrieval P/R/F1/EM,
// per-example joint scores, label accuracy, FEVER score, evidence P/R/F1,
// label-wise F1 and stage oracle scores. Answer, supporting-fact and FEVER
// numbers follow the official HotpotQA and FEVER evaluators.

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "mrs/corpus.hpp"
#include "mrs/error.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/query.hpp"
#include "mrs/text.hpp"

namespace mrs {

namespace detail {

// Python's str.isspace().
inline bool py_space(UChar32 c) {
    if (c == 0x1c || c == 0x1d || c == 0x1e || c == 0x1f) return true;
    const auto dir = u_charDirection(c);
    return dir == U_WHITE_SPACE_NEUTRAL || dir == U_BLOCK_SEPARATOR || dir == U_SEGMENT_SEPARATOR ||
           u_charType(c) == U_SPACE_SEPARATOR;
}

// Python's re \w for str patterns.
inline bool py_word(UChar32 c) {
    if (c == '_') return true;
    if (u_isalpha(c)) return true;
    return u_getIntPropertyValue(c, UCHAR_NUMERIC_TYPE) != U_NT_NONE;
}

inline bool ascii_punct(UChar32 c) {
    return c < 0x80 && std::string_view(R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)").find(static_cast<char>(c)) !=
                           std::string_view::npos;
}

}  // namespace detail

/// Official answer normalization: lowercase, strip ASCII punctuation, drop
/// the words a/an/the, collapse whitespace.
inline std::string normalize_answer(std::string_view s) {
    auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.toLower(icu::Locale::getRoot());

    std::vector<UChar32> chars;
    for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
        const UChar32 c = u.char32At(i);
        if (!detail::ascii_punct(c)) chars.push_back(c);
    }

    std::vector<std::u32string> words;
    std::u32string current;
    auto flush = [&] {
        if (!current.empty()) words.push_back(std::move(current));
        current.clear();
    };
    for (std::size_t i = 0; i < chars.size();) {
        if (detail::py_space(chars[i])) {
            flush();
            ++i;
            continue;
        }
        if (!detail::py_word(chars[i])) {
            current.push_back(chars[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < chars.size() && detail::py_word(chars[j])) ++j;
        std::u32string run(chars.begin() + static_cast<std::ptrdiff_t>(i), chars.begin() + static_cast<std::ptrdiff_t>(j));
        if (run == U"a" || run == U"an" || run == U"the") {
            flush();
        } else {
            current += run;
        }
        i = j;
    }
    flush();

    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        for (char32_t c : w) text::detail::append_utf8(out, static_cast<UChar32>(c));
    }
    return out;
}

struct Prf {
    double em = 0.0;
    double p = 0.0;
    double r = 0.0;
    double f1 = 0.0;

    bool operator==(const Prf&) const = default;
};

inline double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        const auto j = s.find(' ', i);
        const auto end = j == std::string_view::npos ? s.size() : j;
        if (end > i) out.emplace_back(s.substr(i, end - i));
        i = end;
    }
    return out;
}

/// EM plus token-bag P/R/F1 over normalized answers. A yes/no/noanswer
/// prediction or gold scores zero F1 unless the two are identical.
inline Prf answer_em_f1(std::string_view prediction, std::string_view gold) {
    const auto np = normalize_answer(prediction);
    const auto ng = normalize_answer(gold);
    Prf out;
    out.em = np == ng ? 1.0 : 0.0;
    auto special = [](const std::string& s) { return s == "yes" || s == "no" || s == "noanswer"; };
    if ((special(np) || special(ng)) && np != ng) return out;
    const auto pt = split_ws(np);
    const auto gt = split_ws(ng);
    std::map<std::string, int> bag;
    for (const auto& t : gt) ++bag[t];
    int same = 0;
    for (const auto& t : pt) {
        auto it = bag.find(t);
        if (it != bag.end() && it->second > 0) {
            --it->second;
            ++same;
        }
    }
    if (same == 0) return out;
    out.p = static_cast<double>(same) / static_cast<double>(pt.size());
    out.r = static_cast<double>(same) / static_cast<double>(gt.size());
    out.f1 = harmonic(out.p, out.r);
    return out;
}

/// Set metrics. Empty prediction: precision 1 when gold is empty too, else 0.
/// Empty gold: recall 1 when the prediction is empty too, else 0.
template <class Id>
Prf set_retrieval_metrics(const std::vector<Id>& prediction, const std::vector<Id>& gold) {
    const std::set<Id> p(prediction.begin(), prediction.end());
    const std::set<Id> g(gold.begin(), gold.end());
    std::size_t hit = 0;
    for (const auto& x : p) hit += g.count(x);
    Prf out;
    out.em = p == g ? 1.0 : 0.0;
    out.p = p.empty() ? (g.empty() ? 1.0 : 0.0) : static_cast<double>(hit) / static_cast<double>(p.size());
    out.r = g.empty() ? (p.empty() ? 1.0 : 0.0) : static_cast<double>(hit) / static_cast<double>(g.size());
    out.f1 = harmonic(out.p, out.r);
    return out;
}

/// Supporting-fact metrics exactly as the official HotpotQA evaluator
/// computes them (tp/fp/fn; precision and recall 0 when undefined).
inline Prf supporting_fact_metrics(const std::vector<SentenceId>& prediction, const std::vector<SentenceId>& gold) {
    const std::set<SentenceId> p(prediction.begin(), prediction.end());
    const std::set<SentenceId> g(gold.begin(), gold.end());
    double tp = 0, fp = 0, fn = 0;
    for (const auto& x : p) (g.count(x) ? tp : fp) += 1;
    for (const auto& x : g) fn += p.count(x) ? 0 : 1;
    Prf out;
    out.p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    out.r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    out.f1 = harmonic(out.p, out.r);
    out.em = fp + fn == 0 ? 1.0 : 0.0;
    return out;
}

/// Per-example joint scores: products of answer and support P/R/EM.
inline Prf joint_metrics(const Prf& answer, const Prf& support) {
    Prf out;
    out.p = answer.p * support.p;
    out.r = answer.r * support.r;
    out.em = answer.em * support.em;
    out.f1 = harmonic(out.p, out.r);
    return out;
}

/// True when every sentence of at least one group is in `retrieved`.
template <class Id>
bool any_group_contained(const std::vector<std::vector<Id>>& groups, const std::vector<Id>& retrieved) {
    const std::set<Id> r(retrieved.begin(), retrieved.end());
    for (const auto& g : groups)
        if (std::all_of(g.begin(), g.end(), [&](const Id& id) { return r.count(id) > 0; })) return true;
    return false;
}

/// How a FEVER claim's evidence counts as complete: any one annotated group
/// (official scorer) or the union of all groups.
enum class EvidenceSemantics { official, all_facts };

inline std::string_view to_string(EvidenceSemantics s) { return s == EvidenceSemantics::official ? "official" : "all_facts"; }

inline EvidenceSemantics parse_evidence_semantics(std::string_view s) {
    if (s == "official" || s == "any_group") return EvidenceSemantics::official;
    if (s == "all_facts") return EvidenceSemantics::all_facts;
    throw DataError("unknown evidence semantics: " + std::string(s));
}

struct FeverRecord {
    std::string id;
    Label gold_label = Label::nei;
    std::vector<std::vector<SentenceId>> gold_groups;
    std::optional<Label> predicted_label;  ///< unset when the verifier failed
    std::vector<SentenceId> predicted_evidence;
};

inline bool evidence_complete(const FeverRecord& r, EvidenceSemantics semantics,
                              std::size_t max_evidence = 5) {
    if (r.gold_label == Label::nei) return true;
    std::vector<SentenceId> pred(r.predicted_evidence.begin(),
                                 r.predicted_evidence.begin() +
                                     static_cast<std::ptrdiff_t>(std::min(max_evidence, r.predicted_evidence.size())));
    if (semantics == EvidenceSemantics::official) return any_group_contained(r.gold_groups, pred);
    if (r.gold_groups.empty()) return false;
    std::vector<SentenceId> all;
    for (const auto& g : r.gold_groups) all.insert(all.end(), g.begin(), g.end());
    return any_group_contained(std::vector<std::vector<SentenceId>>{all}, pred);
}

struct PerExampleScores {
    std::string query_id;
    Prf answer;
    Prf support;
    Prf joint;
    std::optional<Prf> paragraph;
    bool answer_present = false;   ///< hotpot: prediction had an answer
    bool support_present = false;  ///< hotpot: prediction had supporting facts
    bool label_correct = false;
    bool evidence_complete = false;
    bool fever_point = false;
    /// FEVER macro evidence terms; unset for NEI gold, which the official
    /// scorer leaves out of both averages.
    std::optional<double> evidence_precision;
    std::optional<double> evidence_recall;
    std::map<std::string, bool> oracle;  ///< stage -> gold contained
};

struct MetricsReport {
    Task task = Task::hotpot;
    std::string tag;
    std::size_t count = 0;
    std::optional<Prf> answer;
    std::optional<Prf> support;  ///< sentence level
    std::optional<Prf> joint;
    std::optional<Prf> paragraph;
    std::optional<double> label_accuracy;
    std::optional<double> fever_score;
    std::optional<double> evidence_precision;
    std::optional<double> evidence_recall;
    std::optional<double> evidence_f1;
    std::optional<std::array<double, 3>> label_f1;  ///< SUPPORTS, REFUTES, NEI
    std::optional<double> oracle_term;
    std::optional<double> oracle_paragraph;
    std::optional<double> oracle_sentence;
    std::optional<double> mean_paragraphs;  ///< mean |P_N| (or |P_I| without the paragraph stage)
    std::optional<double> mean_sentences;   ///< mean |S|
    std::vector<std::string> warnings;

    bool operator==(const MetricsReport& o) const {
        return task == o.task && tag == o.tag && count == o.count && answer == o.answer && support == o.support &&
               joint == o.joint && paragraph == o.paragraph && label_accuracy == o.label_accuracy &&
               fever_score == o.fever_score && evidence_precision == o.evidence_precision &&
               evidence_recall == o.evidence_recall && evidence_f1 == o.evidence_f1 && label_f1 == o.label_f1 &&
               oracle_term == o.oracle_term && oracle_paragraph == o.oracle_paragraph &&
               oracle_sentence == o.oracle_sentence && mean_paragraphs == o.mean_paragraphs &&
               mean_sentences == o.mean_sentences;
    }
};

/// Report fields in emission order; absent metrics are nullopt.
inline std::vector<std::pair<std::string, std::optional<double>>> report_fields(const MetricsReport& r) {
    std::vector<std::pair<std::string, std::optional<double>>> out;
    auto prf = [&](const std::string& prefix, const std::optional<Prf>& v, std::initializer_list<char> which) {
        for (char w : which) {
            std::optional<double> x;
            if (v) x = w == 'e' ? v->em : w == 'p' ? v->p : w == 'r' ? v->r : v->f1;
            out.emplace_back(prefix + (w == 'e' ? "em" : w == 'p' ? "prec" : w == 'r' ? "recall" : "f1"), x);
        }
    };
    prf("sp_", r.support, {'e', 'p', 'r', 'f'});
    prf("", r.answer, {'e', 'f'});
    prf("joint_", r.joint, {'e', 'f', 'p', 'r'});
    prf("", r.answer, {'p', 'r'});
    prf("para_", r.paragraph, {'e', 'p', 'r', 'f'});
    out.emplace_back("label_accuracy", r.label_accuracy);
    out.emplace_back("fever_score", r.fever_score);
    out.emplace_back("evidence_prec", r.evidence_precision);
    out.emplace_back("evidence_recall", r.evidence_recall);
    out.emplace_back("evidence_f1", r.evidence_f1);
    const char* classes[] = {"lf1_supports", "lf1_refutes", "lf1_nei"};
    for (int i = 0; i < 3; ++i)
        out.emplace_back(classes[i], r.label_f1 ? std::optional<double>((*r.label_f1)[static_cast<std::size_t>(i)])
                                                : std::nullopt);
    out.emplace_back("oracle_term", r.oracle_term);
    out.emplace_back("oracle_paragraph", r.oracle_paragraph);
    out.emplace_back("oracle_sentence", r.oracle_sentence);
    out.emplace_back("mean_paragraphs", r.mean_paragraphs);
    out.emplace_back("mean_sentences", r.mean_sentences);
    return out;
}

/// The twelve-key summary printed by the official HotpotQA evaluator.
inline std::vector<std::pair<std::string, double>> official_hotpot_summary(const MetricsReport& r) {
    const Prf zero;
    const auto& a = r.answer ? *r.answer : zero;
    const auto& s = r.support ? *r.support : zero;
    const auto& j = r.joint ? *r.joint : zero;
    return {{"em", a.em},        {"f1", a.f1},         {"prec", a.p},          {"recall", a.r},
            {"sp_em", s.em},     {"sp_f1", s.f1},      {"sp_prec", s.p},       {"sp_recall", s.r},
            {"joint_em", j.em},  {"joint_f1", j.f1},   {"joint_prec", j.p},    {"joint_recall", j.r}};
}

struct HotpotPredictions {
    std::map<std::string, std::string> answer;
    std::map<std::string, std::vector<SentenceId>> sp;
};

/// Maps a gold sentence to its paragraph; nullopt when unknown.
using ParagraphLookup = std::function<std::optional<ParagraphId>(const SentenceId&)>;

inline ParagraphLookup corpus_lookup(const Corpus& corpus) {
    return [&corpus](const SentenceId& s) -> std::optional<ParagraphId> {
        if (!corpus.has_sentence(s)) return std::nullopt;
        return corpus.paragraph_of(s).id();
    };
}

inline std::vector<std::vector<ParagraphId>> paragraph_groups(const std::vector<std::vector<SentenceId>>& groups,
                                                              const ParagraphLookup& lookup) {
    std::vector<std::vector<ParagraphId>> out;
    for (const auto& g : groups) {
        std::vector<ParagraphId> pg;
        bool complete = true;
        for (const auto& s : g) {
            auto p = lookup(s);
            if (!p) {
                complete = false;
                break;
            }
            pg.push_back(*p);
        }
        if (complete) out.push_back(std::move(pg));
    }
    return out;
}

struct EvaluationResult {
    std::vector<PerExampleScores> examples;
    MetricsReport report;
};

/// Traces to attach to an evaluation: retrieval metrics and stage oracles
/// are computed from them. Runs whose query id is not evaluated are ignored.
struct RunTraces {
    const std::vector<PipelineRun>* runs = nullptr;
    ParagraphLookup lookup;
};

namespace detail {

inline std::unordered_map<std::string, const PipelineRun*> index_runs(const RunTraces& traces) {
    std::unordered_map<std::string, const PipelineRun*> out;
    if (traces.runs)
        for (const auto& r : *traces.runs) out[r.query_id] = &r;
    return out;
}

inline std::vector<ParagraphId> ids_of(const InitialCandidateSet& s) {
    std::vector<ParagraphId> out;
    for (const auto& c : s.paragraphs) out.push_back(c.id);
    return out;
}

template <class Id>
std::vector<Id> ids_of(const std::vector<Scored<Id>>& s) {
    std::vector<Id> out;
    for (const auto& c : s) out.push_back(c.id);
    return out;
}

struct Mean {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    double value(std::size_t denominator) const { return denominator == 0 ? 0.0 : sum / static_cast<double>(denominator); }
    double value() const { return value(n); }
};

struct PrfMean {
    Mean em, p, r, f1;
    void add(const Prf& x) {
        em.add(x.em);
        p.add(x.p);
        r.add(x.r);
        f1.add(x.f1);
    }
    Prf value(std::size_t denominator) const {
        return {em.value(denominator), p.value(denominator), r.value(denominator), f1.value(denominator)};
    }
    Prf value() const { return value(em.n); }
};

/// Stage oracles and retrieval metrics shared by both tasks. `retrieval_gold`
/// decides whether an example enters the paragraph/sentence averages.
inline void attach_runs(const RunTraces& traces, const std::vector<Query>& gold, std::vector<PerExampleScores>& examples,
                        MetricsReport& report, bool nei_aware) {
    if (!traces.runs) return;
    const auto runs = index_runs(traces);
    Mean o_term, o_para, o_sent, n_para, n_sent;
    PrfMean para;
    PrfMean sent;
    bool any_sentence_stage = false;
    bool all_sentence_stage = true;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto& q = gold[i];
        auto it = runs.find(q.id);
        if (it == runs.end()) {
            report.warnings.push_back("no run trace for query " + q.id);
            all_sentence_stage = false;
            continue;
        }
        const auto& run = *it->second;
        const bool nei = nei_aware && q.label == Label::nei;
        const auto forwarded = run.forwarded_paragraphs();
        n_para.add(static_cast<double>(forwarded.size()));

        std::vector<std::vector<ParagraphId>> pgroups;
        if (traces.lookup) pgroups = paragraph_groups(q.evidence_groups, traces.lookup);
        if (traces.lookup) {
            const bool term_hit = nei || any_group_contained(pgroups, ids_of(run.p_initial));
            const bool para_hit = nei || any_group_contained(pgroups, forwarded);
            o_term.add(term_hit ? 1.0 : 0.0);
            o_para.add(para_hit ? 1.0 : 0.0);
            examples[i].oracle["term"] = term_hit;
            examples[i].oracle["paragraph"] = para_hit;
            if (!nei) {
                std::vector<ParagraphId> gp;
                for (const auto& s : q.gold_sentences())
                    if (auto p = traces.lookup(s)) gp.push_back(*p);
                const auto m = set_retrieval_metrics(forwarded, gp);
                examples[i].paragraph = m;
                para.add(m);
            }
        }
        if (run.s_selected) {
            any_sentence_stage = true;
            const auto s_ids = ids_of(*run.s_selected);
            n_sent.add(static_cast<double>(s_ids.size()));
            const bool hit = nei || any_group_contained(q.evidence_groups, s_ids);
            o_sent.add(hit ? 1.0 : 0.0);
            examples[i].oracle["sentence"] = hit;
            if (nei_aware && !nei) sent.add(set_retrieval_metrics(s_ids, q.gold_sentences()));
        } else {
            all_sentence_stage = false;
        }
    }
    if (traces.lookup) {
        report.oracle_term = o_term.value();
        report.oracle_paragraph = o_para.value();
        report.paragraph = para.value();
    }
    report.mean_paragraphs = n_para.value();
    if (any_sentence_stage && all_sentence_stage) {
        report.oracle_sentence = o_sent.value();
        report.mean_sentences = n_sent.value();
        if (nei_aware) report.support = sent.value();
    }
}

}  // namespace detail

/// HotpotQA evaluation. Queries without a prediction entry score zero,
/// and every aggregate divides by the number of gold queries. With traces
/// and no sentence stage, supporting-fact and joint metrics are absent.
inline EvaluationResult evaluate_hotpot(const std::vector<Query>& gold, const HotpotPredictions& predictions,
                                        const RunTraces& traces = {}) {
    EvaluationResult result;
    auto& report = result.report;
    report.task = Task::hotpot;
    report.count = gold.size();
    detail::PrfMean answer, support, joint;
    for (const auto& q : gold) {
        if (!q.answer) throw DataError("hotpot query " + q.id + " has no gold answer");
        PerExampleScores e;
        e.query_id = q.id;
        auto a = predictions.answer.find(q.id);
        auto s = predictions.sp.find(q.id);
        if (a == predictions.answer.end()) report.warnings.push_back("missing answer " + q.id);
        if (s == predictions.sp.end()) report.warnings.push_back("missing sp " + q.id);
        if (a != predictions.answer.end()) {
            e.answer_present = true;
            e.answer = answer_em_f1(a->second, *q.answer);
            answer.add(e.answer);
        }
        if (s != predictions.sp.end()) {
            e.support_present = true;
            e.support = supporting_fact_metrics(s->second, q.gold_sentences());
            support.add(e.support);
        }
        if (e.answer_present && e.support_present) {
            e.joint = joint_metrics(e.answer, e.support);
            joint.add(e.joint);
        }
        e.label_correct = e.answer.em == 1.0;
        result.examples.push_back(std::move(e));
    }
    report.answer = answer.value(gold.size());
    report.support = support.value(gold.size());
    report.joint = joint.value(gold.size());
    detail::attach_runs(traces, gold, result.examples, report, false);
    if (traces.runs) {
        const auto runs = detail::index_runs(traces);
        const bool sentence_stage = std::all_of(gold.begin(), gold.end(), [&](const Query& q) {
            auto it = runs.find(q.id);
            return it != runs.end() && it->second->s_selected.has_value();
        });
        if (!sentence_stage) {
            report.support.reset();
            report.joint.reset();
        }
    }
    return result;
}

/// Official FEVER scoring: label accuracy, strict (FEVER) score with the
/// first five predicted sentences, macro evidence precision/recall over
/// verifiable claims, and per-class label F1.
inline EvaluationResult evaluate_fever(const std::vector<FeverRecord>& records,
                                       EvidenceSemantics semantics = EvidenceSemantics::official,
                                       std::size_t max_evidence = 5) {
    EvaluationResult result;
    auto& report = result.report;
    report.task = Task::fever;
    report.count = records.size();
    double correct = 0, strict = 0, prec = 0, prec_hits = 0, rec = 0, rec_hits = 0;
    std::array<double, 3> tp{}, fp{}, fn{};
    for (const auto& r : records) {
        PerExampleScores e;
        e.query_id = r.id;
        if (r.predicted_evidence.size() > max_evidence)
            report.warnings.push_back("query " + r.id + ": predicted evidence truncated to " +
                                      std::to_string(max_evidence));
        e.label_correct = r.predicted_label == r.gold_label;
        e.evidence_complete = evidence_complete(r, semantics, max_evidence);
        e.fever_point = e.label_correct && e.evidence_complete;
        correct += e.label_correct;
        strict += e.fever_point;

        if (r.gold_label != Label::nei) {
            const auto n = std::min(max_evidence, r.predicted_evidence.size());
            std::vector<SentenceId> all;
            for (const auto& g : r.gold_groups) all.insert(all.end(), g.begin(), g.end());
            double hits = 0;
            for (std::size_t i = 0; i < n; ++i)
                hits += std::find(all.begin(), all.end(), r.predicted_evidence[i]) != all.end();
            e.evidence_precision = n > 0 ? hits / static_cast<double>(n) : 1.0;
            prec += *e.evidence_precision;
            prec_hits += 1;
            std::vector<SentenceId> pred(r.predicted_evidence.begin(),
                                         r.predicted_evidence.begin() + static_cast<std::ptrdiff_t>(n));
            e.evidence_recall = r.gold_groups.empty() || any_group_contained(r.gold_groups, pred) ? 1.0 : 0.0;
            rec += *e.evidence_recall;
            rec_hits += 1;
        }

        const auto g = static_cast<std::size_t>(r.gold_label);
        if (r.predicted_label) {
            const auto p = static_cast<std::size_t>(*r.predicted_label);
            if (p == g) {
                tp[g] += 1;
            } else {
                fp[p] += 1;
                fn[g] += 1;
            }
        } else {
            fn[g] += 1;
        }
        result.examples.push_back(std::move(e));
    }
    const double n = static_cast<double>(records.size());
    report.label_accuracy = n > 0 ? correct / n : 0.0;
    report.fever_score = n > 0 ? strict / n : 0.0;
    report.evidence_precision = prec_hits > 0 ? prec / prec_hits : 1.0;
    report.evidence_recall = rec_hits > 0 ? rec / rec_hits : 0.0;
    report.evidence_f1 = harmonic(*report.evidence_precision, *report.evidence_recall);
    std::array<double, 3> f1{};
    for (std::size_t c = 0; c < 3; ++c) {
        const double p = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
        const double r = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
        f1[c] = harmonic(p, r);
    }
    report.label_f1 = f1;
    return result;
}

/// FEVER records from gold queries and pipeline predictions. A query with no
/// prediction is an error, as in the official scorer.
inline std::vector<FeverRecord> fever_records(const std::vector<Query>& gold,
                                              const std::map<std::string, DownstreamPrediction>& predictions) {
    std::vector<FeverRecord> out;
    for (const auto& q : gold) {
        if (!q.label) throw DataError("fever query " + q.id + " has no gold label");
        auto it = predictions.find(q.id);
        if (it == predictions.end()) throw DataError("no prediction for claim " + q.id);
        out.push_back({q.id, *q.label, q.evidence_groups, it->second.label, it->second.predicted_evidence});
    }
    return out;
}

inline EvaluationResult evaluate_fever(const std::vector<Query>& gold,
                                       const std::map<std::string, DownstreamPrediction>& predictions,
                                       const RunTraces& traces, EvidenceSemantics semantics = EvidenceSemantics::official) {
    auto result = evaluate_fever(fever_records(gold, predictions), semantics);
    detail::attach_runs(traces, gold, result.examples, result.report, true);
    return result;
}

/// Fraction of cases whose gold is NEI or has a complete group inside the
/// stage's retrieved set.
template <class Id>
struct OracleCase {
    bool nei = false;
    std::vector<std::vector<Id>> groups;
    std::vector<Id> retrieved;
};

template <class Id>
double oracle_score(const std::vector<OracleCase<Id>>& cases) {
    if (cases.empty()) return 0.0;
    double hits = 0;
    for (const auto& c : cases) hits += c.nei || any_group_contained(c.groups, c.retrieved);
    return hits / static_cast<double>(cases.size());
}

struct BreakdownRow {
    std::string tag;
    std::size_t count = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

/// Per-tag accuracy, where an example is correct when `label_correct` is set
/// (answer EM for QA, label match for verification). Untagged examples form
/// an "untagged" row; tags naming unknown queries are reported and skipped.
inline std::vector<BreakdownRow> breakdown_report(const std::vector<PerExampleScores>& examples,
                                                  const std::map<std::string, std::string>& tags,
                                                  std::vector<std::string>* warnings = nullptr) {
    std::set<std::string> known;
    for (const auto& e : examples) known.insert(e.query_id);
    if (warnings)
        for (const auto& [qid, tag] : tags)
            if (!known.count(qid)) warnings->push_back("tag for unknown query " + qid);
    std::map<std::string, BreakdownRow> rows;
    BreakdownRow untagged{"untagged"};
    for (const auto& e : examples) {
        auto it = tags.find(e.query_id);
        auto& row = it == tags.end() ? untagged : rows[it->second];
        if (it != tags.end()) row.tag = it->second;
        ++row.count;
        row.correct += e.label_correct;
    }
    std::vector<BreakdownRow> out;
    for (auto& [tag, row] : rows) out.push_back(row);
    if (untagged.count > 0) out.push_back(untagged);
    for (auto& r : out) r.accuracy = r.count ? static_cast<double>(r.correct) / static_cast<double>(r.count) : 0.0;
    return out;
}

}  // namespace mrs
