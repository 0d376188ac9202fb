#pragma once

// Relevance scoring shared by the paragraph and sentence stages: the Scorer
// interface, the built-in lexical logistic scorer, and its trainer for
//   J = -sum_{pos} log p - sum_{neg} log(1 - p).

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrs/detail/random.hpp"
#include "mrs/error.hpp"
#include "mrs/term_index.hpp"
#include "mrs/text.hpp"

namespace mrs {

struct ScoringInput {
    std::string id;
    std::string text;
    std::string title;  ///< empty when the unit carries no title (sentences)
};

struct ScoredCandidate {
    std::string id;
    double score = 0.0;

    bool operator==(const ScoredCandidate&) const = default;
};

/// Query/context relatedness in [0, 1]. score_batch returns one score per
/// input, in input order.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::vector<ScoredCandidate> score_batch(std::string_view query,
                                                     std::span<const ScoringInput> contexts) const = 0;
};

// ---------------------------------------------------------------------------
// Features

inline constexpr std::string_view kFeatureSpecVersion = "lexical-v1";
inline constexpr std::size_t kFeatureCount = 6;

/// [unigram overlap ratio, bigram overlap ratio, idf-weighted overlap,
///  ln(1 + context tokens), title-match indicator, tf-idf cosine]
using FeatureVector = std::array<double, kFeatureCount>;

inline const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names = {
        "unigram_overlap", "bigram_overlap", "idf_overlap", "log_length", "title_match", "tfidf_cosine"};
    return names;
}

/// Extracts lexical features. Overlap ratios are relative to the query's
/// distinct unigrams/bigrams. Term weights use the smoothed
/// idf(t) = ln(1 + (N + 1) / (df(t) + 1)) against optional corpus statistics
/// (N = df = 0 without statistics, i.e. uniform weights).
class FeatureExtractor {
public:
    FeatureExtractor() = default;
    explicit FeatureExtractor(const TermIndex* statistics) : stats_(statistics) {}

    double idf(std::string_view term) const {
        const double n = stats_ ? static_cast<double>(stats_->doc_count()) : 0.0;
        const double df = stats_ ? static_cast<double>(stats_->df(term)) : 0.0;
        return std::log(1.0 + (n + 1.0) / (df + 1.0));
    }

    FeatureVector extract(std::string_view query, std::string_view context, std::string_view title = {}) const {
        const auto q = text::tokenize(query);
        const auto c = text::tokenize(context);
        FeatureVector f{};

        const std::unordered_set<std::string> q_set(q.begin(), q.end());
        const std::unordered_set<std::string> c_set(c.begin(), c.end());
        if (!q_set.empty()) {
            std::size_t shared = 0;
            double idf_shared = 0.0;
            double idf_total = 0.0;
            for (const auto& t : q_set) {
                const double w = idf(t);
                idf_total += w;
                if (c_set.count(t)) {
                    ++shared;
                    idf_shared += w;
                }
            }
            f[0] = static_cast<double>(shared) / static_cast<double>(q_set.size());
            f[2] = idf_total > 0.0 ? idf_shared / idf_total : 0.0;
        }

        const auto q_bigrams = bigrams(q);
        if (!q_bigrams.empty()) {
            const auto c_bigrams = bigrams(c);
            std::size_t shared = 0;
            for (const auto& b : q_bigrams) shared += c_bigrams.count(b);
            f[1] = static_cast<double>(shared) / static_cast<double>(q_bigrams.size());
        }

        f[3] = std::log(1.0 + static_cast<double>(c.size()));
        f[4] = title_in_query(q, title) ? 1.0 : 0.0;
        f[5] = cosine(q, c);
        return f;
    }

private:
    static std::unordered_set<std::string> bigrams(const std::vector<std::string>& tokens) {
        std::unordered_set<std::string> out;
        for (std::size_t i = 1; i < tokens.size(); ++i) out.insert(tokens[i - 1] + ' ' + tokens[i]);
        return out;
    }

    static bool title_in_query(const std::vector<std::string>& q, std::string_view title) {
        const auto t = text::tokenize(title);
        if (t.empty() || t.size() > q.size()) return false;
        return std::search(q.begin(), q.end(), t.begin(), t.end()) != q.end();
    }

    double cosine(const std::vector<std::string>& q, const std::vector<std::string>& c) const {
        auto weights = [&](const std::vector<std::string>& tokens) {
            std::map<std::string, double> counts;
            for (const auto& t : tokens) counts[t] += 1.0;
            for (auto& [term, tf] : counts) tf = (1.0 + std::log(tf)) * idf(term);
            return counts;
        };
        const auto wq = weights(q);
        const auto wc = weights(c);
        double dot = 0.0, nq = 0.0, nc = 0.0;
        for (const auto& [t, w] : wq) {
            nq += w * w;
            if (auto it = wc.find(t); it != wc.end()) dot += w * it->second;
        }
        for (const auto& [t, w] : wc) nc += w * w;
        if (nq == 0.0 || nc == 0.0) return 0.0;
        return dot / (std::sqrt(nq) * std::sqrt(nc));
    }

    const TermIndex* stats_ = nullptr;
};

// ---------------------------------------------------------------------------
// Model

struct LexicalScorerModel {
    std::string feature_spec_version{kFeatureSpecVersion};
    std::vector<double> weights = std::vector<double>(kFeatureCount, 0.0);
    double bias = 0.0;

    void validate() const {
        if (feature_spec_version != kFeatureSpecVersion)
            throw DataError("unsupported feature spec version: " + feature_spec_version);
        if (weights.size() != kFeatureCount)
            throw DataError("model has " + std::to_string(weights.size()) + " weights, expected " +
                            std::to_string(kFeatureCount));
    }

    double logit(const FeatureVector& x) const {
        double z = bias;
        for (std::size_t i = 0; i < kFeatureCount; ++i) z += weights[i] * x[i];
        return z;
    }

    double probability(const FeatureVector& x) const { return sigmoid(logit(x)); }

    static double sigmoid(double z) {
        if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    nlohmann::json to_json() const {
        return {{"feature_spec_version", feature_spec_version}, {"weights", weights}, {"bias", bias}};
    }

    static LexicalScorerModel from_json(const nlohmann::json& j) {
        LexicalScorerModel m;
        try {
            m.feature_spec_version = j.at("feature_spec_version").get<std::string>();
            m.weights = j.at("weights").get<std::vector<double>>();
            m.bias = j.at("bias").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid scorer model: ") + e.what());
        }
        m.validate();
        return m;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write model " + path.string());
        out << to_json().dump(2) << '\n';
    }

    static LexicalScorerModel load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open model " + path.string());
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }
};

/// Built-in scorer: sigmoid of a linear model over lexical features. Pure.
class LexicalScorer final : public Scorer {
public:
    LexicalScorer(LexicalScorerModel model, FeatureExtractor features = {})
        : model_(std::move(model)), features_(features) {
        model_.validate();
    }

    std::vector<ScoredCandidate> score_batch(std::string_view query,
                                             std::span<const ScoringInput> contexts) const override {
        std::vector<ScoredCandidate> out;
        out.reserve(contexts.size());
        for (const auto& c : contexts)
            out.push_back({c.id, model_.probability(features_.extract(query, c.text, c.title))});
        return out;
    }

    const LexicalScorerModel& model() const noexcept { return model_; }
    const FeatureExtractor& features() const noexcept { return features_; }

private:
    LexicalScorerModel model_;
    FeatureExtractor features_;
};

/// Memoizes another scorer by (query, context id, context text). Scores do not
/// depend on thresholds or caps, so sweeps over those reuse one cache.
class CachingScorer final : public Scorer {
public:
    explicit CachingScorer(const Scorer& inner) : inner_(&inner) {}

    std::vector<ScoredCandidate> score_batch(std::string_view query,
                                             std::span<const ScoringInput> contexts) const override {
        std::vector<ScoredCandidate> out(contexts.size());
        std::vector<ScoringInput> missing;
        std::vector<std::size_t> missing_pos;
        {
            std::lock_guard lock(mutex_);
            for (std::size_t i = 0; i < contexts.size(); ++i) {
                auto it = cache_.find(key(query, contexts[i]));
                if (it != cache_.end()) {
                    out[i] = {contexts[i].id, it->second};
                } else {
                    missing.push_back(contexts[i]);
                    missing_pos.push_back(i);
                }
            }
        }
        if (!missing.empty()) {
            const auto fresh = inner_->score_batch(query, missing);
            std::lock_guard lock(mutex_);
            for (std::size_t k = 0; k < fresh.size(); ++k) {
                out[missing_pos[k]] = {missing[k].id, fresh[k].score};
                cache_.emplace(key(query, missing[k]), fresh[k].score);
            }
        }
        return out;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return cache_.size();
    }

private:
    static std::string key(std::string_view query, const ScoringInput& c) {
        std::string k(query);
        k.push_back('\x1f');
        k += c.id;
        k.push_back('\x1f');
        k += c.title;
        k.push_back('\x1f');
        k += c.text;
        return k;
    }

    const Scorer* inner_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, double> cache_;
};

// ---------------------------------------------------------------------------
// Training

enum class Provenance { ground_truth, upstream_sampled };

inline std::string_view to_string(Provenance p) {
    return p == Provenance::ground_truth ? "ground_truth" : "upstream_sampled";
}

inline Provenance parse_provenance(std::string_view s) {
    if (s == "ground_truth") return Provenance::ground_truth;
    if (s == "upstream_sampled") return Provenance::upstream_sampled;
    throw ParseError("unknown provenance: " + std::string(s));
}

/// One retrieval training pair. Positives always come from ground truth.
struct LabeledPair {
    std::string query_id;
    std::string query_text;
    std::string context_id;
    std::string context_text;
    std::string context_title;
    bool positive = false;
    Provenance provenance = Provenance::upstream_sampled;

    bool operator==(const LabeledPair&) const = default;
};

struct TrainingExample {
    FeatureVector x{};
    bool positive = false;
};

/// J summed over examples.
inline double retrieval_loss(const LexicalScorerModel& model, std::span<const TrainingExample> data) {
    auto softplus = [](double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); };
    double loss = 0.0;
    for (const auto& e : data) {
        const double z = model.logit(e.x);
        // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
        loss += e.positive ? softplus(-z) : softplus(z);
    }
    return loss;
}

/// dJ/d(weights..., bias): sum over examples of (p - y) * [x, 1].
inline std::vector<double> retrieval_loss_gradient(const LexicalScorerModel& model,
                                                   std::span<const TrainingExample> data) {
    std::vector<double> grad(kFeatureCount + 1, 0.0);
    for (const auto& e : data) {
        const double residual = model.probability(e.x) - (e.positive ? 1.0 : 0.0);
        for (std::size_t i = 0; i < kFeatureCount; ++i) grad[i] += residual * e.x[i];
        grad[kFeatureCount] += residual;
    }
    return grad;
}

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainReport {
    double initial_loss = 0.0;
    std::vector<double> epoch_losses;  ///< full-data J after each epoch
};

inline std::vector<TrainingExample> featurize(std::span<const LabeledPair> pairs, const FeatureExtractor& features) {
    std::vector<TrainingExample> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.positive && p.provenance != Provenance::ground_truth)
            throw DataError("positive pair for query " + p.query_id + " is not ground truth");
        out.push_back({features.extract(p.query_text, p.context_text, p.context_title), p.positive});
    }
    return out;
}

/// Mini-batch gradient descent from zero weights. Each step moves along the
/// batch-mean gradient. Examples are reshuffled each epoch under `config.seed`.
inline LexicalScorerModel train_logistic_scorer(std::span<const TrainingExample> data, const TrainConfig& config,
                                                TrainReport* report = nullptr) {
    const auto positives = std::count_if(data.begin(), data.end(), [](const TrainingExample& e) { return e.positive; });
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size()))
        throw DataError("training data must contain both positive and negative pairs");
    if (config.batch_size == 0) throw PreconditionError("batch_size must be >= 1");

    LexicalScorerModel model;
    std::vector<TrainingExample> shuffled(data.begin(), data.end());
    std::mt19937_64 rng(config.seed);
    const double initial = retrieval_loss(model, data);
    if (report) {
        report->initial_loss = initial;
        report->epoch_losses.clear();
    }
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        detail::shuffle(shuffled, rng);
        for (std::size_t start = 0; start < shuffled.size(); start += config.batch_size) {
            const auto n = std::min(config.batch_size, shuffled.size() - start);
            const auto grad = retrieval_loss_gradient(model, std::span(shuffled).subspan(start, n));
            const double step = config.learning_rate / static_cast<double>(n);
            for (std::size_t i = 0; i < kFeatureCount; ++i) model.weights[i] -= step * grad[i];
            model.bias -= step * grad[kFeatureCount];
        }
        const double loss = retrieval_loss(model, data);
        const bool finite_weights = std::isfinite(model.bias) &&
                                    std::all_of(model.weights.begin(), model.weights.end(),
                                                [](double w) { return std::isfinite(w); });
        if (!std::isfinite(loss) || !finite_weights) {
            std::ostringstream msg;
            msg << "training diverged: non-finite loss or weights at epoch " << epoch + 1 << " (bias " << model.bias << ", weights";
            for (double w : model.weights) msg << ' ' << w;
            msg << ")";
            throw DataError(msg.str());
        }
        if (report) report->epoch_losses.push_back(loss);
    }
    return model;
}

inline LexicalScorerModel train_logistic_scorer(std::span<const LabeledPair> pairs, const FeatureExtractor& features,
                                                const TrainConfig& config, TrainReport* report = nullptr) {
    const auto examples = featurize(pairs, features);
    return train_logistic_scorer(std::span<const TrainingExample>(examples), config, report);
}

/// Scores looked up by context id; unknown ids get `fallback`. Used for
/// injecting externally computed scores.
class TableScorer final : public Scorer {
public:
    explicit TableScorer(std::unordered_map<std::string, double> scores, double fallback = 0.0)
        : scores_(std::move(scores)), fallback_(fallback) {}

    std::vector<ScoredCandidate> score_batch(std::string_view,
                                             std::span<const ScoringInput> contexts) const override {
        std::vector<ScoredCandidate> out;
        for (const auto& c : contexts) {
            auto it = scores_.find(c.id);
            out.push_back({c.id, it == scores_.end() ? fallback_ : it->second});
        }
        return out;
    }

private:
    std::unordered_map<std::string, double> scores_;
    double fallback_;
};

}  // namespace mrs
