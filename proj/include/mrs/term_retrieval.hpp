#pragma once

// Initial candidate generation: title keyword matching, document-level
// TF-IDF top-n, and (multi-hop) one round of hyperlink expansion.

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mrs/corpus.hpp"
#include "mrs/query.hpp"
#include "mrs/term_index.hpp"
#include "mrs/text.hpp"

namespace mrs {

enum class CandidateSource { keyword, tfidf, hyperlink };

inline std::string_view to_string(CandidateSource s) {
    switch (s) {
        case CandidateSource::keyword: return "keyword";
        case CandidateSource::tfidf: return "tfidf";
        case CandidateSource::hyperlink: return "hyperlink";
    }
    return "";
}

inline CandidateSource parse_candidate_source(std::string_view s) {
    if (s == "keyword") return CandidateSource::keyword;
    if (s == "tfidf") return CandidateSource::tfidf;
    if (s == "hyperlink") return CandidateSource::hyperlink;
    throw ParseError("unknown candidate source: " + std::string(s));
}

struct InitialCandidate {
    ParagraphId id;
    CandidateSource source = CandidateSource::tfidf;

    bool operator==(const InitialCandidate&) const = default;
};

/// P_I: duplicate-free on (title, para_index), in insertion order.
struct InitialCandidateSet {
    std::string query_id;
    std::vector<InitialCandidate> paragraphs;

    std::size_t size() const noexcept { return paragraphs.size(); }

    bool contains(const ParagraphId& id) const {
        return std::any_of(paragraphs.begin(), paragraphs.end(),
                           [&](const InitialCandidate& c) { return c.id == id; });
    }

    std::vector<DocumentTitle> titles() const {
        std::vector<DocumentTitle> out;
        for (const auto& c : paragraphs)
            if (std::find(out.begin(), out.end(), c.id.title) == out.end()) out.push_back(c.id.title);
        return out;
    }

    bool operator==(const InitialCandidateSet&) const = default;
};

/// Exact title-in-query matcher over token sequences.
///
/// A title matches when its full token sequence occurs contiguously in the
/// query tokens (case-insensitive, punctuation ignored). Longest-match
/// filtering drops a title whose every occurrence lies strictly inside an
/// occurrence of a longer matched title. Survivors are ranked by title token
/// length descending, then title ascending, and capped.
class TitleMatcher {
public:
    TitleMatcher() = default;

    explicit TitleMatcher(const Corpus& corpus) {
        for (const auto& doc : corpus.documents()) add(doc.title);
    }

    void add(const DocumentTitle& title) {
        const auto tokens = text::tokenize(title.str());
        if (tokens.empty()) return;
        max_len_ = std::max(max_len_, tokens.size());
        by_key_[text::join(tokens, " ")].push_back(title);
    }

    std::vector<DocumentTitle> match(std::string_view query, std::size_t cap = 10) const {
        const auto tokens = text::tokenize(query);
        struct Occurrence {
            std::size_t begin, end;
            const std::string* key;
        };
        std::vector<Occurrence> occurrences;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::string key;
            for (std::size_t len = 1; len <= max_len_ && i + len <= tokens.size(); ++len) {
                if (len > 1) key.push_back(' ');
                key += tokens[i + len - 1];
                auto it = by_key_.find(key);
                if (it != by_key_.end()) occurrences.push_back({i, i + len, &it->first});
            }
        }
        std::set<const std::string*> survivors;
        std::set<const std::string*> keys;
        for (const auto& o : occurrences) keys.insert(o.key);
        for (const auto* key : keys) {
            bool kept = false;
            for (const auto& o : occurrences) {
                if (o.key != key) continue;
                const bool covered = std::any_of(occurrences.begin(), occurrences.end(), [&](const Occurrence& other) {
                    return other.key != key && other.begin <= o.begin && o.end <= other.end &&
                           (other.end - other.begin) > (o.end - o.begin);
                });
                if (!covered) {
                    kept = true;
                    break;
                }
            }
            if (kept) survivors.insert(key);
        }
        struct Ranked {
            std::size_t length;
            DocumentTitle title;
        };
        std::vector<Ranked> ranked;
        for (const auto* key : survivors) {
            const auto length = static_cast<std::size_t>(std::count(key->begin(), key->end(), ' ') + 1);
            for (const auto& t : by_key_.at(*key)) ranked.push_back({length, t});
        }
        std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            if (a.length != b.length) return a.length > b.length;
            return a.title < b.title;
        });
        std::vector<DocumentTitle> out;
        for (auto& r : ranked) {
            if (out.size() >= cap) break;
            out.push_back(std::move(r.title));
        }
        return out;
    }

private:
    std::unordered_map<std::string, std::vector<DocumentTitle>> by_key_;
    std::size_t max_len_ = 0;
};

inline std::vector<DocumentTitle> keyword_match(const Corpus& corpus, std::string_view query, std::size_t cap = 10) {
    return TitleMatcher(corpus).match(query, cap);
}

struct ScoredTitle {
    DocumentTitle title;
    double score = 0.0;
};

/// Document-level TF-IDF: top `top_n` distinct documents with positive score.
/// With a paragraph-granularity index a document takes its best paragraph's score.
inline std::vector<ScoredTitle> tfidf_documents(const TermIndex& index, std::string_view query, std::size_t top_n) {
    std::vector<ScoredTitle> out;
    const std::size_t depth = index.granularity() == Granularity::document ? top_n : index.doc_count();
    for (const auto& r : index.rank(query, std::max<std::size_t>(depth, 1))) {
        const auto& title = index.unit(r.unit).title;
        if (std::none_of(out.begin(), out.end(), [&](const ScoredTitle& s) { return s.title == title; }))
            out.push_back({title, r.score});
        if (out.size() >= top_n) break;
    }
    return out;
}

inline std::vector<ParagraphId> paragraphs_of(const Corpus& corpus, const DocumentTitle& title) {
    std::vector<ParagraphId> out;
    if (const auto* doc = corpus.find(title))
        for (const auto& p : doc->paragraphs) out.push_back(p.id());
    return out;
}

/// Ranks every document linked from a seed paragraph (excluding documents
/// already in the seed) by TF-IDF against the query and returns the
/// paragraphs of the top `top_n`. Linked documents with zero score are ranked
/// after positive ones by title. Link targets absent from the corpus are ignored.
inline std::vector<ParagraphId> hyperlink_expand(const Corpus& corpus, const InitialCandidateSet& seed,
                                                 const TermIndex& index, std::string_view query,
                                                 std::size_t top_n) {
    std::unordered_set<DocumentTitle> seed_titles;
    for (const auto& c : seed.paragraphs) seed_titles.insert(c.id.title);
    std::set<DocumentTitle> linked;
    for (const auto& c : seed.paragraphs) {
        const auto* doc = corpus.find(c.id.title);
        if (doc == nullptr) continue;
        for (const auto& p : doc->paragraphs) {
            if (p.para_index != c.id.para_index) continue;
            for (const auto& l : p.hyperlinks)
                if (!seed_titles.count(l) && corpus.contains(l)) linked.insert(l);
        }
    }
    std::vector<ScoredTitle> ranked;
    for (const auto& title : linked) {
        const auto units = index.units_of(title);
        double best = 0.0;
        for (const auto& s : index.score_units(query, units)) best = std::max(best, s.score);
        ranked.push_back({title, best});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScoredTitle& a, const ScoredTitle& b) { return a.score > b.score; });
    std::vector<ParagraphId> out;
    for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i)
        for (auto& p : paragraphs_of(corpus, ranked[i].title)) out.push_back(std::move(p));
    return out;
}

struct TermRetrievalOptions {
    std::size_t keyword_cap = 10;
    std::size_t tfidf_top = 5;
    std::size_t hyperlink_top = 5;
};

/// Bundles the corpus, index and title matcher for per-query candidate generation.
/// Read-only after construction; safe to share across threads.
class TermRetriever {
public:
    TermRetriever(const Corpus& corpus, const TermIndex& index, TermRetrievalOptions options = {})
        : corpus_(&corpus), index_(&index), matcher_(corpus), options_(options) {}

    const Corpus& corpus() const noexcept { return *corpus_; }
    const TermIndex& index() const noexcept { return *index_; }
    const TermRetrievalOptions& options() const noexcept { return options_; }

    std::vector<DocumentTitle> keyword_match(std::string_view query) const {
        return matcher_.match(query, options_.keyword_cap);
    }

    /// fever: keyword matches + TF-IDF top documents, expanded to all paragraphs.
    /// hotpot: the same, then one hop of hyperlink expansion merged in.
    InitialCandidateSet initial_candidates(std::string_view query_id, std::string_view query, Task task) const {
        InitialCandidateSet set{std::string(query_id), {}};
        std::unordered_set<ParagraphId> seen;
        auto add_document = [&](const DocumentTitle& title, CandidateSource source) {
            for (auto& id : paragraphs_of(*corpus_, title))
                if (seen.insert(id).second) set.paragraphs.push_back({std::move(id), source});
        };
        for (const auto& t : keyword_match(query)) add_document(t, CandidateSource::keyword);
        for (const auto& s : tfidf_documents(*index_, query, options_.tfidf_top))
            add_document(s.title, CandidateSource::tfidf);
        if (task == Task::hotpot) {
            for (auto& id : hyperlink_expand(*corpus_, set, *index_, query, options_.hyperlink_top))
                if (seen.insert(id).second) set.paragraphs.push_back({std::move(id), CandidateSource::hyperlink});
        }
        return set;
    }

    InitialCandidateSet initial_candidates(const Query& q) const { return initial_candidates(q.id, q.text, q.task); }

private:
    const Corpus* corpus_;
    const TermIndex* index_;
    TitleMatcher matcher_;
    TermRetrievalOptions options_;
};

}  // namespace mrs
