#pragma once

// JSON-over-HTTP client side of the scorer wire protocol:
//   POST /score  {"query": str, "contexts": [{"id": str, "text": str}]}
//                -> {"scores": [float]}, one per context, each in [0, 1]
//   GET  /health -> {"status": "ok", "model": str}

#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mrs/error.hpp"
#include "mrs/scoring.hpp"

namespace mrs {

/// "http://host:port[/prefix]" split into what httplib needs.
class HttpEndpoint {
public:
    HttpEndpoint(std::string_view url, std::chrono::milliseconds timeout) : timeout_(timeout) {
        const auto scheme = url.find("://");
        if (scheme == std::string_view::npos || url.substr(0, scheme) != "http")
            throw PreconditionError("endpoint must be an http:// URL: " + std::string(url));
        const auto path_start = url.find('/', scheme + 3);
        origin_ = std::string(url.substr(0, path_start));
        if (path_start != std::string_view::npos) prefix_ = std::string(url.substr(path_start));
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        if (origin_.size() <= scheme + 3) throw PreconditionError("endpoint has no host: " + std::string(url));
    }

    const std::string& origin() const noexcept { return origin_; }
    std::chrono::milliseconds timeout() const noexcept { return timeout_; }

    nlohmann::json get(const std::string& path) const {
        auto client = make_client();
        const auto started = std::chrono::steady_clock::now();
        auto res = client.Get(prefix_ + path);
        return handle(res, path, started);
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        auto client = make_client();
        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(prefix_ + path, body.dump(), "application/json");
        return handle(res, path, started);
    }

private:
    httplib::Client make_client() const {
        httplib::Client client(origin_);
        const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - sec);
        client.set_connection_timeout(sec.count(), usec.count());
        client.set_read_timeout(sec.count(), usec.count());
        client.set_write_timeout(sec.count(), usec.count());
        return client;
    }

    nlohmann::json handle(const httplib::Result& res, const std::string& path,
                          std::chrono::steady_clock::time_point started) const {
        if (!res) {
            const auto err = res.error();
            const auto elapsed = std::chrono::steady_clock::now() - started;
            const std::string what = origin_ + prefix_ + path + ": " + httplib::to_string(err);
            if (err == httplib::Error::ConnectionTimeout)
                throw TransportError(TransportError::Kind::timeout, "timeout connecting to " + what);
            if ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed + std::chrono::milliseconds(5) >= timeout_)
                throw TransportError(TransportError::Kind::timeout, "timeout waiting for " + what);
            throw TransportError(TransportError::Kind::connect, "cannot reach " + what);
        }
        if (res->status != 200)
            throw TransportError(TransportError::Kind::http_status,
                                 origin_ + prefix_ + path + " returned HTTP " + std::to_string(res->status));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ProtocolError(origin_ + prefix_ + path + " returned invalid JSON: " + e.what());
        }
    }

    std::string origin_;
    std::string prefix_;
    std::chrono::milliseconds timeout_;
};

struct RemoteScorerOptions {
    std::chrono::milliseconds timeout{10000};
    std::size_t batch_size = 128;
    std::size_t max_in_flight = 4;
};

/// Scorer backed by a remote service. Inputs are split into batches of at
/// most `batch_size`, up to `max_in_flight` of which are outstanding at once;
/// results are reassembled in input order. Any failed batch fails the whole
/// call and no partial scores are returned. The service health is checked on
/// first use.
class RemoteScorer final : public Scorer {
public:
    RemoteScorer(std::string_view endpoint, RemoteScorerOptions options)
        : endpoint_(endpoint, options.timeout), options_(options) {
        if (options_.batch_size == 0) throw PreconditionError("batch_size must be >= 1");
        if (options_.max_in_flight == 0) options_.max_in_flight = 1;
    }

    std::vector<ScoredCandidate> score_batch(std::string_view query,
                                             std::span<const ScoringInput> contexts) const override {
        if (contexts.empty()) return {};
        ensure_healthy();
        const std::size_t n_batches = (contexts.size() + options_.batch_size - 1) / options_.batch_size;
        std::vector<std::vector<double>> results(n_batches);
        for (std::size_t wave = 0; wave < n_batches; wave += options_.max_in_flight) {
            std::vector<std::future<std::vector<double>>> inflight;
            const auto wave_end = std::min(n_batches, wave + options_.max_in_flight);
            for (std::size_t b = wave; b < wave_end; ++b) {
                const auto begin = b * options_.batch_size;
                const auto n = std::min(options_.batch_size, contexts.size() - begin);
                inflight.push_back(std::async(std::launch::async, [this, query, part = contexts.subspan(begin, n)] {
                    return request(query, part);
                }));
            }
            std::exception_ptr failure;
            for (std::size_t k = 0; k < inflight.size(); ++k) {
                try {
                    results[wave + k] = inflight[k].get();
                } catch (...) {
                    if (!failure) failure = std::current_exception();
                }
            }
            if (failure) std::rethrow_exception(failure);
        }
        std::vector<ScoredCandidate> out;
        out.reserve(contexts.size());
        std::size_t i = 0;
        for (const auto& batch : results)
            for (double s : batch) out.push_back({contexts[i++].id, s});
        return out;
    }

    /// GET /health; throws TransportError(connect) unless status is "ok".
    nlohmann::json health() const {
        nlohmann::json body;
        try {
            body = endpoint_.get("/health");
        } catch (const TransportError& e) {
            throw TransportError(TransportError::Kind::connect, std::string("health check failed: ") + e.what());
        } catch (const ProtocolError& e) {
            throw TransportError(TransportError::Kind::connect, std::string("health check failed: ") + e.what());
        }
        if (!body.is_object() || body.value("status", "") != "ok")
            throw TransportError(TransportError::Kind::connect, "health check failed: " + body.dump());
        return body;
    }

    std::size_t requests_issued() const noexcept { return requests_.load(); }

private:
    void ensure_healthy() const {
        std::lock_guard lock(health_mutex_);
        if (healthy_) return;
        health();
        healthy_ = true;
    }

    std::vector<double> request(std::string_view query, std::span<const ScoringInput> part) const {
        nlohmann::json contexts = nlohmann::json::array();
        for (const auto& c : part) contexts.push_back({{"id", c.id}, {"text", c.text}});
        ++requests_;
        const auto body = endpoint_.post("/score", {{"query", query}, {"contexts", std::move(contexts)}});
        const auto scores = body.find("scores");
        if (!body.is_object() || scores == body.end() || !scores->is_array())
            throw ProtocolError("/score response lacks a \"scores\" array");
        if (scores->size() != part.size())
            throw ProtocolError("/score returned " + std::to_string(scores->size()) + " scores for " +
                                std::to_string(part.size()) + " contexts");
        std::vector<double> out;
        out.reserve(part.size());
        for (const auto& s : *scores) {
            if (!s.is_number()) throw ProtocolError("/score returned a non-numeric score");
            const double v = s.get<double>();
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw ProtocolError("/score returned out-of-range score " + s.dump());
            out.push_back(v);
        }
        return out;
    }

    HttpEndpoint endpoint_;
    RemoteScorerOptions options_;
    mutable std::mutex health_mutex_;
    mutable bool healthy_ = false;
    mutable std::atomic<std::size_t> requests_{0};
};

inline std::unique_ptr<Scorer> connect_remote_scorer(std::string_view endpoint, RemoteScorerOptions options) {
    return std::make_unique<RemoteScorer>(endpoint, options);
}

}  // namespace mrs
