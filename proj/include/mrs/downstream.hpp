#pragma once

// Downstream adapters: span / yes-no QA and 3-way claim verification, with
// deterministic lexical baselines, oracle test doubles, and remote clients.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrs/corpus.hpp"
#include "mrs/error.hpp"
#include "mrs/query.hpp"
#include "mrs/remote.hpp"
#include "mrs/scoring.hpp"
#include "mrs/text.hpp"

namespace mrs {

struct ContextSentence {
    SentenceId id;
    std::string text;

    bool operator==(const ContextSentence&) const = default;
};

/// Query plus the ordered evidence sentences handed to a reader or verifier.
struct DownstreamInput {
    std::string query_id;
    std::string query;
    std::vector<ContextSentence> sentences;

    /// Sentences joined with single spaces (blank sentinels skipped).
    std::string joined_context() const {
        std::string out;
        for (const auto& s : sentences) {
            if (s.text.empty()) continue;
            if (!out.empty()) out.push_back(' ');
            out += s.text;
        }
        return out;
    }
};

class QAReader {
public:
    virtual ~QAReader() = default;
    /// "yes", "no", or a contiguous substring of the joined context ("" for empty context).
    virtual std::string answer(const DownstreamInput& input) const = 0;
};

class Verifier {
public:
    virtual ~Verifier() = default;
    virtual Label verify(const DownstreamInput& input) const = 0;
};

enum class PredictionKind { qa, verification };

struct DownstreamPrediction {
    std::string query_id;
    PredictionKind kind = PredictionKind::qa;
    std::string answer;
    std::optional<Label> label;
    std::vector<SentenceId> predicted_evidence;
    std::optional<std::string> error;  ///< set when the adapter failed

    bool operator==(const DownstreamPrediction&) const = default;
};

inline bool is_yes_no(std::string_view answer) { return answer == "yes" || answer == "no"; }

/// Span contract: yes/no, empty, or a substring of the joined context.
inline bool is_valid_answer(std::string_view answer, std::string_view context) {
    return answer.empty() || is_yes_no(answer) || context.find(answer) != std::string_view::npos;
}

namespace detail {

inline const std::unordered_set<std::string>& wh_words() {
    static const std::unordered_set<std::string> words = {"what", "which", "who",  "whom", "whose",
                                                          "when", "where", "why", "how"};
    return words;
}

inline const std::unordered_set<std::string>& auxiliary_words() {
    static const std::unordered_set<std::string> words = {
        "is", "are", "was", "were", "am", "do", "does", "did", "can", "could", "has", "have",
        "had", "will", "would", "should", "shall", "may", "might", "must"};
    return words;
}

inline const std::unordered_set<std::string>& boundary_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a", "an", "the", "of", "in", "on", "at", "to", "for", "and", "or", "by", "with", "from",
        "as", "is", "are", "was", "were", "be", "been", "it", "its", "he", "she", "they", "his",
        "her", "their", "this", "that", "which", "who", "also", "has", "have", "had", "not", "s"};
    return words;
}

}  // namespace detail

/// Lexical reader.
///
/// Yes/no questions (first token an auxiliary or copula) are answered "yes"
/// when the negation counts of question and context have even parity, "no"
/// otherwise. Other questions pick a context window of 1..8 tokens that
/// shares no token with the question and neither starts nor ends with a
/// stopword; a window scores the sum, over every sentence containing it, of
/// that sentence's idf-weighted overlap with the non-wh question terms.
/// Ties prefer longer windows, then earlier occurrence.
class BaselineReader final : public QAReader {
public:
    BaselineReader() = default;
    explicit BaselineReader(FeatureExtractor idf_source) : idf_(idf_source) {}

    static constexpr std::size_t kMaxWindow = 8;

    std::string answer(const DownstreamInput& input) const override {
        if (input.joined_context().empty()) return "";
        const auto q = text::tokenize(input.query);
        if (!q.empty() && detail::auxiliary_words().count(q.front())) {
            std::vector<std::string> context_tokens;
            for (const auto& s : input.sentences)
                for (auto& t : text::tokenize(s.text)) context_tokens.push_back(std::move(t));
            const auto parity = text::count_negations(q) + text::count_negations(context_tokens);
            return parity % 2 == 0 ? "yes" : "no";
        }

        const std::unordered_set<std::string> q_all(q.begin(), q.end());
        std::unordered_set<std::string> q_content;
        for (const auto& t : q_all)
            if (!detail::wh_words().count(t)) q_content.insert(t);

        struct Candidate {
            std::vector<std::size_t> sentences;
            std::size_t length = 0;
            std::size_t order = 0;  ///< first occurrence, in context order
            std::size_t sentence = 0;
            std::size_t begin = 0, end = 0;
        };
        std::map<std::string, Candidate> candidates;
        std::vector<double> relevance(input.sentences.size(), 0.0);
        std::size_t order = 0;
        for (std::size_t si = 0; si < input.sentences.size(); ++si) {
            const auto tokens = text::tokenize_with_offsets(input.sentences[si].text);
            std::unordered_set<std::string> seen;
            for (const auto& t : tokens)
                if (q_content.count(t.text) && seen.insert(t.text).second) relevance[si] += idf_.idf(t.text);
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                std::string key;
                for (std::size_t len = 1; len <= kMaxWindow && i + len <= tokens.size(); ++len) {
                    const auto& last = tokens[i + len - 1];
                    if (q_all.count(last.text)) break;
                    if (len > 1) key.push_back(' ');
                    key += last.text;
                    if (detail::boundary_stopwords().count(tokens[i].text) ||
                        detail::boundary_stopwords().count(last.text))
                        continue;
                    auto [it, inserted] = candidates.try_emplace(key);
                    auto& c = it->second;
                    if (inserted) c = {{}, len, order++, si, tokens[i].begin, last.end};
                    if (c.sentences.empty() || c.sentences.back() != si) c.sentences.push_back(si);
                }
            }
        }
        const Candidate* best = nullptr;
        double best_score = -1.0;
        for (const auto& [key, c] : candidates) {
            double score = 0.0;
            for (auto si : c.sentences) score += relevance[si];
            const bool better = best == nullptr || score > best_score ||
                                (score == best_score && (c.length > best->length ||
                                                         (c.length == best->length && c.order < best->order)));
            if (better) {
                best = &c;
                best_score = score;
            }
        }
        if (best == nullptr) return "";
        return input.sentences[best->sentence].text.substr(best->begin, best->end - best->begin);
    }

private:
    FeatureExtractor idf_;
};

/// Lexical verifier: with o = max over sentences of the fraction of distinct
/// claim tokens present in the sentence, SUPPORTS if o >= 0.5 and the
/// negation counts of claim and best sentence have even parity, REFUTES if
/// o >= 0.5 and odd, NEI otherwise (including empty context).
class BaselineVerifier final : public Verifier {
public:
    static constexpr double kOverlapThreshold = 0.5;

    Label verify(const DownstreamInput& input) const override {
        const auto claim = text::tokenize(input.query);
        const std::unordered_set<std::string> claim_set(claim.begin(), claim.end());
        if (claim_set.empty()) return Label::nei;
        double best = -1.0;
        std::vector<std::string> best_tokens;
        for (const auto& s : input.sentences) {
            if (s.text.empty()) continue;
            auto tokens = text::tokenize(s.text);
            const std::unordered_set<std::string> present(tokens.begin(), tokens.end());
            std::size_t shared = 0;
            for (const auto& t : claim_set) shared += present.count(t);
            const double overlap = static_cast<double>(shared) / static_cast<double>(claim_set.size());
            if (overlap > best) {
                best = overlap;
                best_tokens = std::move(tokens);
            }
        }
        if (best < kOverlapThreshold) return Label::nei;
        const auto parity = text::count_negations(claim) + text::count_negations(best_tokens);
        return parity % 2 == 0 ? Label::supports : Label::refutes;
    }
};

/// Test double returning the gold answer for each query id.
class OracleReader final : public QAReader {
public:
    explicit OracleReader(std::unordered_map<std::string, std::string> answers) : answers_(std::move(answers)) {}

    std::string answer(const DownstreamInput& input) const override {
        auto it = answers_.find(input.query_id);
        if (it == answers_.end()) throw DataError("oracle reader has no answer for " + input.query_id);
        return it->second;
    }

private:
    std::unordered_map<std::string, std::string> answers_;
};

class OracleVerifier final : public Verifier {
public:
    explicit OracleVerifier(std::unordered_map<std::string, Label> labels) : labels_(std::move(labels)) {}

    Label verify(const DownstreamInput& input) const override {
        auto it = labels_.find(input.query_id);
        if (it == labels_.end()) throw DataError("oracle verifier has no label for " + input.query_id);
        return it->second;
    }

private:
    std::unordered_map<std::string, Label> labels_;
};

/// POST /qa {"query", "context"} -> {"answer"}
class RemoteReader final : public QAReader {
public:
    RemoteReader(std::string_view endpoint, std::chrono::milliseconds timeout) : endpoint_(endpoint, timeout) {}

    std::string answer(const DownstreamInput& input) const override {
        const auto body = endpoint_.post("/qa", {{"query", input.query}, {"context", input.joined_context()}});
        if (!body.is_object() || !body.contains("answer") || !body["answer"].is_string())
            throw ProtocolError("/qa response lacks a string \"answer\"");
        return body["answer"].get<std::string>();
    }

private:
    HttpEndpoint endpoint_;
};

/// POST /verify {"claim", "context"} -> {"label"}
class RemoteVerifier final : public Verifier {
public:
    RemoteVerifier(std::string_view endpoint, std::chrono::milliseconds timeout) : endpoint_(endpoint, timeout) {}

    Label verify(const DownstreamInput& input) const override {
        const auto body = endpoint_.post("/verify", {{"claim", input.query}, {"context", input.joined_context()}});
        if (!body.is_object() || !body.contains("label") || !body["label"].is_string())
            throw ProtocolError("/verify response lacks a string \"label\"");
        try {
            return parse_label(body["label"].get<std::string>());
        } catch (const DataError& e) {
            throw ProtocolError(std::string("/verify: ") + e.what());
        }
    }

private:
    HttpEndpoint endpoint_;
};

}  // namespace mrs
