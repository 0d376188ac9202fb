#pragma once

// INI configuration with environment overrides. Every key may be overridden
// by MRS_<SECTION>_<KEY> (upper case), e.g. MRS_SENTENCE_LEVEL_H=0.3.

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mrs/error.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/query.hpp"
#include "mrs/term_retrieval.hpp"

namespace mrs {

struct ScorerSettings {
    std::string model;     ///< lexical model JSON; empty = untrained built-in weights
    std::string endpoint;  ///< remote scorer URL; takes precedence over `model`
};

struct RemoteSettings {
    std::chrono::milliseconds timeout{10000};
    std::size_t batch_size = 128;
    std::size_t max_in_flight = 4;
};

struct DownstreamSettings {
    std::string reader = "baseline";    ///< baseline | remote | oracle
    std::string verifier = "baseline";  ///< baseline | remote | oracle
    std::string endpoint;
};

struct SamplingSettings {
    std::size_t paragraph_neg_per_pos = 2;
    std::size_t sentence_neg_per_pos = 4;
    std::size_t context_size = 5;
};

struct AppConfig {
    PipelineConfig pipeline = PipelineConfig::defaults(Task::hotpot);
    TermRetrievalOptions term;
    ScorerSettings paragraph_scorer;
    ScorerSettings sentence_scorer;
    RemoteSettings remote;
    DownstreamSettings downstream;
    SamplingSettings sampling;
    std::string evidence_semantics = "official";
};

namespace detail {

inline std::string env_name(const std::string& section, const std::string& key) {
    std::string out = "MRS_";
    for (char c : section + "_" + key) out.push_back(c == '.' || c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
}

class ConfigReader {
public:
    explicit ConfigReader(boost::property_tree::ptree tree) : tree_(std::move(tree)) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        if (const char* env = std::getenv(env_name(section, key).c_str())) return std::string(env);
        if (auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(section + "/" + key, '/')))
            return *v;
        return std::nullopt;
    }

    template <class T>
    void read(const std::string& section, const std::string& key, T& out) const {
        auto v = raw(section, key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, std::string>) {
                out = *v;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") out = true;
                else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") out = false;
                else throw std::invalid_argument(*v);
            } else if constexpr (std::is_floating_point_v<T>) {
                std::size_t used = 0;
                out = static_cast<T>(std::stod(*v, &used));
                if (used != v->size()) throw std::invalid_argument(*v);
            } else {
                std::size_t used = 0;
                const auto n = std::stoll(*v, &used);
                if (used != v->size() || n < 0) throw std::invalid_argument(*v);
                out = static_cast<T>(n);
            }
        } catch (const std::logic_error&) {
            throw PreconditionError("config " + section + "." + key + ": invalid value \"" + *v + "\"");
        }
    }

private:
    boost::property_tree::ptree tree_;
};

}  // namespace detail

/// Reads `path` (may be empty: defaults plus environment). Task-dependent
/// defaults are applied before explicit keys.
inline AppConfig load_config(const std::filesystem::path& path = {}) {
    boost::property_tree::ptree tree;
    if (!path.empty()) {
        try {
            boost::property_tree::read_ini(path.string(), tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ParseError(e.message() + " in " + path.string(), e.line());
        }
    }
    const detail::ConfigReader r(std::move(tree));
    AppConfig c;
    std::string task = "hotpot";
    r.read("task", "name", task);
    c.pipeline = PipelineConfig::defaults(parse_task(task));
    r.read("task", "seed", c.pipeline.seed);
    r.read("term", "keyword_cap", c.term.keyword_cap);
    r.read("term", "tfidf_top", c.term.tfidf_top);
    r.read("term", "hyperlink_top", c.term.hyperlink_top);
    r.read("paragraph_level", "enabled", c.pipeline.stages.paragraph_level);
    r.read("paragraph_level", "k", c.pipeline.k_p);
    r.read("paragraph_level", "h", c.pipeline.h_p);
    r.read("sentence_level", "enabled", c.pipeline.stages.sentence_level);
    r.read("sentence_level", "k", c.pipeline.k_s);
    r.read("sentence_level", "h", c.pipeline.h_s);
    r.read("scorers", "paragraph_model", c.paragraph_scorer.model);
    r.read("scorers", "paragraph_endpoint", c.paragraph_scorer.endpoint);
    r.read("scorers", "sentence_model", c.sentence_scorer.model);
    r.read("scorers", "sentence_endpoint", c.sentence_scorer.endpoint);
    std::size_t timeout_ms = static_cast<std::size_t>(c.remote.timeout.count());
    r.read("scorers", "timeout_ms", timeout_ms);
    c.remote.timeout = std::chrono::milliseconds(timeout_ms);
    r.read("scorers", "batch_size", c.remote.batch_size);
    r.read("scorers", "max_in_flight", c.remote.max_in_flight);
    r.read("downstream", "reader", c.downstream.reader);
    r.read("downstream", "verifier", c.downstream.verifier);
    r.read("downstream", "endpoint", c.downstream.endpoint);
    r.read("sampling", "paragraph_neg_per_pos", c.sampling.paragraph_neg_per_pos);
    r.read("sampling", "sentence_neg_per_pos", c.sampling.sentence_neg_per_pos);
    r.read("sampling", "context_size", c.sampling.context_size);
    r.read("evaluation", "evidence_semantics", c.evidence_semantics);
    c.pipeline.validate();
    return c;
}

}  // namespace mrs
