#pragma once

// Training-data construction conditioned on the upstream stage: retrieval
// pairs (gold positives, negatives drawn from the directly preceding stage's
// output) and downstream QA / NLI contexts.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "mrs/corpus.hpp"
#include "mrs/detail/random.hpp"
#include "mrs/downstream.hpp"
#include "mrs/error.hpp"
#include "mrs/query.hpp"
#include "mrs/scoring.hpp"

namespace mrs {

enum class SamplingLevel { paragraph, sentence };

inline std::string_view to_string(SamplingLevel l) { return l == SamplingLevel::paragraph ? "paragraph" : "sentence"; }

struct SamplingSpec {
    SamplingLevel level = SamplingLevel::paragraph;
    std::size_t neg_per_pos = 2;
    std::uint64_t seed = 0;
    std::size_t max_neg_pool = 0;  ///< 0 = whole upstream set

    static SamplingSpec defaults(SamplingLevel level, std::uint64_t seed = 0) {
        return {level, level == SamplingLevel::paragraph ? std::size_t{2} : std::size_t{4}, seed, 0};
    }

    void validate() const {
        if (neg_per_pos < 1) throw PreconditionError("neg_per_pos must be >= 1");
    }
};

template <class Id>
struct IdSample {
    std::vector<Id> positives;  ///< sorted
    std::vector<Id> negatives;  ///< draw order
    std::vector<std::string> warnings;
};

/// Positives are all gold ids. Negatives are drawn uniformly without
/// replacement from upstream \ gold (first `max_neg_pool` upstream entries
/// when capped) with count min(neg_per_pos * max(|gold|, 1), available).
/// The generator is seeded with seed XOR fnv1a64(query_id).
template <class Id>
IdSample<Id> sample_ids(const std::string& query_id, std::vector<Id> gold, const std::vector<Id>& upstream,
                        const SamplingSpec& spec) {
    spec.validate();
    if (upstream.empty()) throw DataError("query " + query_id + ": empty upstream set");
    IdSample<Id> out;
    std::sort(gold.begin(), gold.end());
    gold.erase(std::unique(gold.begin(), gold.end()), gold.end());
    out.positives = gold;
    if (gold.empty()) out.warnings.push_back("query " + query_id + ": no gold items, negatives only");

    std::vector<Id> pool;
    const std::size_t limit = spec.max_neg_pool == 0 ? upstream.size() : std::min(spec.max_neg_pool, upstream.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (!std::binary_search(gold.begin(), gold.end(), upstream[i])) pool.push_back(upstream[i]);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    const std::size_t wanted = spec.neg_per_pos * std::max<std::size_t>(gold.size(), 1);
    if (pool.size() < wanted)
        out.warnings.push_back("query " + query_id + ": negative pool exhausted (" + std::to_string(pool.size()) +
                               " of " + std::to_string(wanted) + ")");
    std::mt19937_64 rng(detail::derive_seed(spec.seed, query_id));
    out.negatives = detail::sample_without_replacement(std::move(pool), wanted, rng);
    return out;
}

struct RetrievalSample {
    std::vector<LabeledPair> pairs;
    std::vector<std::string> warnings;
};

namespace detail {

inline ScoringInput scoring_input(const Corpus& corpus, const ParagraphId& id) {
    const auto& p = corpus.get_paragraph(id);
    return {to_string(id), p.text(), p.title.str()};
}

inline ScoringInput scoring_input(const Corpus& corpus, const SentenceId& id) {
    return {to_string(id), corpus.resolve_sentence(id), ""};
}

}  // namespace detail

/// Builds labeled pairs; text is resolved the same way the pipeline builds
/// scorer inputs at that level.
template <class Id>
RetrievalSample sample_retrieval_pairs(const Query& query, const std::vector<Id>& gold,
                                       const std::vector<Id>& upstream, const SamplingSpec& spec,
                                       const Corpus& corpus) {
    auto ids = sample_ids(query.id, gold, upstream, spec);
    RetrievalSample out;
    out.warnings = std::move(ids.warnings);
    auto emit = [&](const Id& id, bool positive) {
        const auto input = detail::scoring_input(corpus, id);
        out.pairs.push_back({query.id, query.text, input.id, input.text, input.title, positive,
                             positive ? Provenance::ground_truth : Provenance::upstream_sampled});
    };
    for (const auto& id : ids.positives) emit(id, true);
    for (const auto& id : ids.negatives) emit(id, false);
    return out;
}

/// Paragraphs holding any of the gold sentences. Sentences missing from the
/// corpus are skipped and reported.
inline std::vector<ParagraphId> gold_paragraphs(const Corpus& corpus, const std::vector<SentenceId>& gold,
                                                std::vector<std::string>* warnings = nullptr) {
    std::vector<ParagraphId> out;
    for (const auto& s : gold) {
        if (!corpus.has_sentence(s)) {
            if (warnings) warnings->push_back("gold sentence not in corpus: " + to_string(s));
            continue;
        }
        out.push_back(corpus.paragraph_of(s).id());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<SentenceId> resolvable(const Corpus& corpus, const std::vector<SentenceId>& ids) {
    std::vector<SentenceId> out;
    for (const auto& s : ids)
        if (corpus.has_sentence(s)) out.push_back(s);
    return out;
}

// ---------------------------------------------------------------------------
// Downstream contexts

struct DownstreamContextSentence {
    SentenceId id;
    std::string text;
    bool is_gold = false;

    bool operator==(const DownstreamContextSentence&) const = default;
};

struct DownstreamContext {
    std::string query_id;
    std::string query;
    std::vector<DownstreamContextSentence> sentences;  ///< (title, index) order
    std::variant<std::string, Label> target;           ///< QA answer or NLI label

    bool is_yes_no() const {
        const auto* a = std::get_if<std::string>(&target);
        return a && mrs::is_yes_no(*a);
    }

    std::string joined() const {
        std::string out;
        for (const auto& s : sentences) {
            if (s.text.empty()) continue;
            if (!out.empty()) out.push_back(' ');
            out += s.text;
        }
        return out;
    }

    bool operator==(const DownstreamContext&) const = default;
};

struct ContextSpec {
    std::uint64_t seed = 0;
    std::size_t context_size = 5;  ///< gold + distractors, when enough distractors exist
};

namespace detail {

inline DownstreamContext assemble_context(const Query& query, const std::vector<SentenceId>& gold,
                                          const std::vector<SentenceId>& upstream, std::size_t target_size,
                                          std::uint64_t seed, const Corpus& corpus) {
    std::vector<SentenceId> g = gold;
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    std::vector<SentenceId> pool;
    for (const auto& s : upstream)
        if (!std::binary_search(g.begin(), g.end(), s)) pool.push_back(s);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    const std::size_t distractors = target_size > g.size() ? target_size - g.size() : 0;
    std::mt19937_64 rng(derive_seed(seed, query.id));
    const auto sampled = sample_without_replacement(std::move(pool), distractors, rng);

    DownstreamContext ctx{query.id, query.text, {}, std::string{}};
    for (const auto& s : g) ctx.sentences.push_back({s, corpus.resolve_sentence(s), true});
    for (const auto& s : sampled) ctx.sentences.push_back({s, corpus.resolve_sentence(s), false});
    std::sort(ctx.sentences.begin(), ctx.sentences.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    return ctx;
}

}  // namespace detail

/// Gold sentences plus sampled upstream distractors. Extractive answers must
/// be locatable in the assembled context; "yes"/"no" are kept as token classes.
inline DownstreamContext build_qa_context(const Query& query, const std::vector<SentenceId>& gold,
                                          const std::vector<SentenceId>& upstream, const std::string& answer,
                                          const ContextSpec& spec, const Corpus& corpus) {
    auto ctx = detail::assemble_context(query, gold, upstream, spec.context_size, spec.seed, corpus);
    ctx.target = answer;
    if (!is_yes_no(answer) && ctx.joined().find(answer) == std::string::npos)
        throw DataError("query " + query.id + ": answer \"" + answer + "\" not found in assembled context");
    return ctx;
}

/// Verifiable claims: gold plus sampled distractors. NEI claims: sampled
/// upstream sentences only, `nei_size` of them (defaults to `spec.context_size`).
inline DownstreamContext build_nli_context(const Query& query, Label label, const std::vector<SentenceId>& gold,
                                           const std::vector<SentenceId>& upstream, const ContextSpec& spec,
                                           const Corpus& corpus, std::optional<std::size_t> nei_size = std::nullopt) {
    if (label == Label::nei && !gold.empty())
        throw DataError("query " + query.id + ": NOT ENOUGH INFO claim with gold evidence");
    if (label != Label::nei && gold.empty())
        throw DataError("query " + query.id + ": verifiable claim without gold evidence");
    const auto size = label == Label::nei ? nei_size.value_or(spec.context_size) : spec.context_size;
    auto ctx = detail::assemble_context(query, gold, upstream, size, spec.seed, corpus);
    ctx.target = label;
    return ctx;
}

struct NliItem {
    Query query;
    Label label = Label::nei;
    std::vector<SentenceId> gold;
    std::vector<SentenceId> upstream;
};

/// Batch form: NEI context sizes are drawn from the empirical sizes of the
/// verifiable contexts built in the same batch, so the two classes do not
/// differ in context length.
inline std::vector<DownstreamContext> build_nli_contexts(const std::vector<NliItem>& items, const ContextSpec& spec,
                                                         const Corpus& corpus) {
    std::vector<std::optional<DownstreamContext>> built(items.size());
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].label == Label::nei) continue;
        built[i] = build_nli_context(items[i].query, items[i].label, items[i].gold, items[i].upstream, spec, corpus);
        sizes.push_back(built[i]->sentences.size());
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].label != Label::nei) continue;
        std::optional<std::size_t> size;
        if (!sizes.empty()) {
            std::mt19937_64 rng(detail::derive_seed(spec.seed, items[i].query.id + "#size"));
            size = sizes[detail::uniform_below(rng, sizes.size())];
        }
        built[i] = build_nli_context(items[i].query, Label::nei, {}, items[i].upstream, spec, corpus, size);
    }
    std::vector<DownstreamContext> out;
    for (auto& b : built) out.push_back(std::move(*b));
    return out;
}

}  // namespace mrs
