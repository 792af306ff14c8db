#pragma once

#include "medprompt/embedding.hpp"
#include "medprompt/genome.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace medprompt {

/// Scoring request sent to the remote endpoint. `kind` names a quality
/// dimension or a verification sub-check.
struct ScorerRequest {
    std::string prompt_text;
    std::string kind;
    ScenarioKind scenario = ScenarioKind::diagnosis;

    std::string to_json() const;
    /// Content hash used as the cache key.
    std::uint64_t content_hash() const;
};

struct ScorerResponse {
    double score = 0.0; // clamped-checked into [0, 1] on ingestion
    std::string model_id;
    double latency_ms = 0.0;

    static ScorerResponse from_json(std::string_view bytes); // throws BackendError
    std::string to_json() const;
};

/// Minimal HTTP transport surface; the real implementation wraps cpp-httplib,
/// tests inject fakes.
class Transport {
  public:
    struct Reply {
        int status = 0;
        std::string body;
    };

    virtual ~Transport() = default;
    /// POST a JSON body. Network-level failures (unreachable, timeout) throw
    /// BackendError; HTTP-level errors return their status.
    virtual Reply post(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<Transport> make_http_transport();

struct RemoteClientConfig {
    std::string endpoint;
    std::chrono::milliseconds timeout{5000};
    std::size_t max_retries = 3;
    std::string cache_dir; // empty disables the disk cache
    std::string bearer_token; // from EMPOWER_REMOTE_TOKEN; never logged
    std::uint64_t jitter_seed = 0;
};

/// Remote scorer with disk caching and retry. Retries timeouts and 5xx with
/// exponential backoff (base 0.5 s, factor 2, jitter); 4xx is permanent.
/// Cache hits perform no network call. Safe for concurrent score() calls.
class RemoteScorer {
  public:
    RemoteScorer(RemoteClientConfig cfg, std::unique_ptr<Transport> transport,
                 std::function<void(std::chrono::milliseconds)> sleeper = {});

    /// Score a request, consulting the cache first. Throws BackendError when
    /// retries are exhausted or the response does not conform.
    ScorerResponse score(const ScorerRequest& request);

    std::size_t network_calls() const { return network_calls_; }

  private:
    std::optional<ScorerResponse> cache_lookup(std::uint64_t key) const;
    void cache_store(std::uint64_t key, const std::string& body) const;

    RemoteClientConfig cfg_;
    std::unique_ptr<Transport> transport_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
    std::uint64_t jitter_state_;
    std::size_t network_calls_ = 0;
    mutable std::mutex mutex_;
};

} // namespace medprompt
