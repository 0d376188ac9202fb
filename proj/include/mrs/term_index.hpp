#pragma once

// Inverted index with ltn TF-IDF ranking:
//   tf' = 1 + ln(tf),  idf = ln(N / df),  score(d, q) = sum over distinct
//   query terms t of tf'(t, d) * idf(t), with no length normalization.
// Ties are broken by unit order, which is (title, para_index) ascending.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrs/corpus.hpp"
#include "mrs/detail/binary.hpp"
#include "mrs/error.hpp"
#include "mrs/text.hpp"

namespace mrs {

enum class Granularity { document, paragraph };

inline std::string_view to_string(Granularity g) {
    return g == Granularity::document ? "document" : "paragraph";
}

inline Granularity parse_granularity(std::string_view name) {
    if (name == "document") return Granularity::document;
    if (name == "paragraph") return Granularity::paragraph;
    throw PreconditionError("unknown granularity: " + std::string(name));
}

/// One indexed unit: a whole document, or one paragraph of it.
struct IndexUnit {
    DocumentTitle title;
    std::optional<std::uint32_t> para_index;

    bool operator==(const IndexUnit&) const = default;
};

struct Posting {
    std::uint32_t unit = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

struct ScoredUnit {
    std::uint32_t unit = 0;
    double score = 0.0;
};

/// Text indexed for a unit: its non-empty sentences joined by spaces.
inline std::string unit_text(const Corpus& corpus, const IndexUnit& unit) {
    const auto& doc = corpus.document(unit.title);
    if (!unit.para_index) return doc.text();
    return corpus.get_paragraph(unit.title, *unit.para_index).text();
}

class TermIndex {
public:
    TermIndex() = default;

    static TermIndex build(const Corpus& corpus, Granularity granularity) {
        if (corpus.empty()) throw DataError("cannot index an empty corpus");
        TermIndex index;
        index.granularity_ = granularity;
        for (const auto& doc : corpus.documents()) {
            if (granularity == Granularity::document) {
                index.add_unit({doc.title, std::nullopt}, doc.text());
            } else {
                for (const auto& p : doc.paragraphs) index.add_unit({doc.title, p.para_index}, p.text());
            }
        }
        index.finalize();
        return index;
    }

    Granularity granularity() const noexcept { return granularity_; }
    std::size_t doc_count() const noexcept { return units_.size(); }
    std::size_t vocab_size() const noexcept { return postings_.size(); }
    const IndexUnit& unit(std::uint32_t id) const { return units_.at(id); }
    std::span<const IndexUnit> units() const noexcept { return units_; }
    std::uint32_t unit_length(std::uint32_t id) const { return unit_lengths_.at(id); }

    std::optional<std::uint32_t> term_id(std::string_view term) const {
        auto it = vocab_.find(std::string(term));
        if (it == vocab_.end()) return std::nullopt;
        return it->second;
    }

    /// Postings for an already-normalized term; empty when unknown.
    std::span<const Posting> postings(std::string_view term) const {
        auto id = term_id(term);
        if (!id) return {};
        return postings_[*id];
    }

    std::size_t df(std::string_view term) const { return postings(term).size(); }

    /// ln(N / df); 0 for unknown terms.
    double idf(std::string_view term) const {
        auto id = term_id(term);
        return id ? idf_[*id] : 0.0;
    }

    /// Unit ids of a title (one for document granularity, one per paragraph otherwise).
    std::span<const std::uint32_t> units_of(const DocumentTitle& title) const {
        auto it = by_title_.find(title);
        if (it == by_title_.end()) return {};
        return it->second;
    }

    /// Top `top_n` units with strictly positive score, score descending, ties by unit id.
    std::vector<ScoredUnit> rank(std::string_view query, std::size_t top_n) const {
        if (top_n < 1) throw PreconditionError("top_n must be >= 1");
        std::vector<double> acc(units_.size(), 0.0);
        std::vector<std::uint32_t> touched;
        for (const auto& term : distinct_terms(query)) {
            auto id = term_id(term);
            if (!id) continue;
            const double w = idf_[*id];
            if (w <= 0.0) continue;
            for (const auto& p : postings_[*id]) {
                if (acc[p.unit] == 0.0) touched.push_back(p.unit);
                acc[p.unit] += tf_weight(p.tf) * w;
            }
        }
        std::vector<ScoredUnit> out;
        out.reserve(touched.size());
        for (auto u : touched)
            if (acc[u] > 0.0) out.push_back({u, acc[u]});
        sort_ranked(out);
        if (out.size() > top_n) out.resize(top_n);
        return out;
    }

    /// Scores an explicit set of units (zero scores included), ranked.
    std::vector<ScoredUnit> score_units(std::string_view query, std::span<const std::uint32_t> ids) const {
        const auto terms = distinct_terms(query);
        std::vector<ScoredUnit> out;
        for (auto u : ids) {
            double s = 0.0;
            for (const auto& term : terms) {
                auto id = term_id(term);
                if (!id) continue;
                const auto& list = postings_[*id];
                auto it = std::lower_bound(list.begin(), list.end(), u,
                                           [](const Posting& p, std::uint32_t v) { return p.unit < v; });
                if (it != list.end() && it->unit == u) s += tf_weight(it->tf) * idf_[*id];
            }
            out.push_back({u, s});
        }
        sort_ranked(out);
        return out;
    }

    static double tf_weight(std::uint32_t tf) { return tf == 0 ? 0.0 : 1.0 + std::log(static_cast<double>(tf)); }

    static std::vector<std::string> distinct_terms(std::string_view query) {
        std::vector<std::string> terms;
        std::unordered_set<std::string> seen;
        for (auto& t : text::tokenize(query))
            if (seen.insert(t).second) terms.push_back(std::move(t));
        return terms;
    }

    nlohmann::json manifest() const {
        return {{"granularity", std::string(to_string(granularity_))},
                {"doc_count", doc_count()},
                {"vocab_size", vocab_size()},
                {"weighting", "ltn"}};
    }

    /// Writes the binary index to `path` and the manifest to `path` + ".manifest.json".
    void save(const std::filesystem::path& path) const {
        detail::BinaryWriter w;
        w.put(static_cast<std::uint8_t>(granularity_ == Granularity::document ? 0 : 1));
        w.put(static_cast<std::uint32_t>(units_.size()));
        for (std::size_t i = 0; i < units_.size(); ++i) {
            w.put_string(units_[i].title.str());
            w.put(static_cast<std::uint8_t>(units_[i].para_index.has_value()));
            w.put(units_[i].para_index.value_or(0));
            w.put(unit_lengths_[i]);
        }
        std::vector<std::pair<std::string_view, std::uint32_t>> terms(vocab_.begin(), vocab_.end());
        std::sort(terms.begin(), terms.end(), [](auto& a, auto& b) { return a.second < b.second; });
        w.put(static_cast<std::uint32_t>(terms.size()));
        for (const auto& [term, id] : terms) {
            w.put_string(term);
            w.put(static_cast<std::uint32_t>(postings_[id].size()));
            for (const auto& p : postings_[id]) {
                w.put(p.unit);
                w.put(p.tf);
            }
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write index " + path.string());
        out.write(kMagic.data(), kMagic.size());
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        std::ofstream manifest_out(manifest_path(path));
        if (!manifest_out) throw DataError("cannot write index manifest for " + path.string());
        manifest_out << manifest().dump(2) << '\n';
    }

    static TermIndex load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open index " + path.string());
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (std::string_view(bytes).substr(0, kMagic.size()) != kMagic)
            throw ParseError("not an index file: " + path.string());
        detail::BinaryReader r(std::string_view(bytes).substr(kMagic.size()));
        TermIndex index;
        index.granularity_ = r.get<std::uint8_t>() == 0 ? Granularity::document : Granularity::paragraph;
        const auto n_units = r.get<std::uint32_t>();
        for (std::uint32_t i = 0; i < n_units; ++i) {
            IndexUnit u{DocumentTitle(r.get_string()), std::nullopt};
            const bool has_para = r.get<std::uint8_t>() != 0;
            const auto para = r.get<std::uint32_t>();
            if (has_para) u.para_index = para;
            index.by_title_[u.title].push_back(i);
            index.units_.push_back(std::move(u));
            index.unit_lengths_.push_back(r.get<std::uint32_t>());
        }
        const auto n_terms = r.get<std::uint32_t>();
        index.postings_.resize(n_terms);
        for (std::uint32_t t = 0; t < n_terms; ++t) {
            index.vocab_.emplace(r.get_string(), t);
            const auto n = r.get<std::uint32_t>();
            auto& list = index.postings_[t];
            list.reserve(n);
            for (std::uint32_t k = 0; k < n; ++k) {
                const auto unit = r.get<std::uint32_t>();
                list.push_back({unit, r.get<std::uint32_t>()});
            }
        }
        if (!r.done()) throw ParseError("trailing bytes in index " + path.string());
        index.compute_idf();
        return index;
    }

    static std::filesystem::path manifest_path(const std::filesystem::path& path) {
        return std::filesystem::path(path.string() + ".manifest.json");
    }

private:
    static constexpr std::string_view kMagic{"MRSINDX\x01", 8};

    void add_unit(IndexUnit unit, std::string_view body) {
        const auto id = static_cast<std::uint32_t>(units_.size());
        by_title_[unit.title].push_back(id);
        units_.push_back(std::move(unit));
        const auto tokens = text::tokenize(body);
        unit_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        std::unordered_map<std::string, std::uint32_t> counts;
        for (const auto& t : tokens) ++counts[t];
        for (auto& [term, tf] : counts) {
            auto [it, inserted] = vocab_.emplace(term, static_cast<std::uint32_t>(postings_.size()));
            if (inserted) postings_.emplace_back();
            // Units are added in id order, so each list stays sorted and duplicate-free.
            postings_[it->second].push_back({id, tf});
        }
    }

    void finalize() { compute_idf(); }

    void compute_idf() {
        idf_.assign(postings_.size(), 0.0);
        const double n = static_cast<double>(units_.size());
        for (std::size_t t = 0; t < postings_.size(); ++t) {
            const auto df = postings_[t].size();
            idf_[t] = df == 0 ? 0.0 : std::log(n / static_cast<double>(df));
        }
    }

    static void sort_ranked(std::vector<ScoredUnit>& v) {
        std::sort(v.begin(), v.end(), [](const ScoredUnit& a, const ScoredUnit& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.unit < b.unit;
        });
    }

    Granularity granularity_ = Granularity::document;
    std::vector<IndexUnit> units_;
    std::vector<std::uint32_t> unit_lengths_;
    std::unordered_map<std::string, std::uint32_t> vocab_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<double> idf_;
    std::unordered_map<DocumentTitle, std::vector<std::uint32_t>> by_title_;
};

}  // namespace mrs
