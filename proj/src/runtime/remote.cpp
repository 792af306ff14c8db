#include "medprompt/runtime/remote.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"
#include "medprompt/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <thread>

namespace medprompt {

using nlohmann::json;

std::string ScorerRequest::to_json() const {
    json doc;
    doc["prompt_text"] = prompt_text;
    doc["kind"] = kind;
    doc["scenario"] = std::string(scenario_name(scenario));
    return doc.dump();
}

std::uint64_t ScorerRequest::content_hash() const { return fnv1a64(to_json()); }

ScorerResponse ScorerResponse::from_json(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error&) {
        throw BackendError("remote response is not valid JSON");
    }
    if (!doc.is_object() || !doc.contains("score") || !doc["score"].is_number())
        throw BackendError("remote response missing numeric \"score\"");
    ScorerResponse r;
    r.score = doc["score"].get<double>();
    if (r.score < 0.0 || r.score > 1.0)
        throw BackendError("remote response score outside [0, 1]: " +
                           std::to_string(r.score));
    if (doc.contains("model_id") && doc["model_id"].is_string())
        r.model_id = doc["model_id"].get<std::string>();
    if (doc.contains("latency_ms") && doc["latency_ms"].is_number())
        r.latency_ms = doc["latency_ms"].get<double>();
    return r;
}

std::string ScorerResponse::to_json() const {
    json doc;
    doc["score"] = score;
    doc["model_id"] = model_id;
    doc["latency_ms"] = latency_ms;
    return doc.dump();
}

namespace {

class HttpTransport final : public Transport {
  public:
    Reply post(const std::string& url, const std::string& body,
               const std::map<std::string, std::string>& headers,
               std::chrono::milliseconds timeout) override {
        // Split scheme://host[:port]/path
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw BackendError("malformed endpoint URL: " + url);
        auto path_start = url.find('/', scheme_end + 3);
        const std::string base =
            path_start == std::string::npos ? url : url.substr(0, path_start);
        const std::string path =
            path_start == std::string::npos ? "/" : url.substr(path_start);
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
        httplib::Headers h;
        for (const auto& [k, v] : headers)
            h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res)
            throw BackendError("endpoint unreachable: " + url);
        return {res->status, res->body};
    }
};

} // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttpTransport>(); }

RemoteScorer::RemoteScorer(RemoteClientConfig cfg, std::unique_ptr<Transport> transport,
                           std::function<void(std::chrono::milliseconds)> sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)),
      jitter_state_(cfg_.jitter_seed ^ 0x9e3779b97f4a7c15ull) {
    if (!sleeper_)
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::optional<ScorerResponse> RemoteScorer::cache_lookup(std::uint64_t key) const {
    if (cfg_.cache_dir.empty())
        return std::nullopt;
    const auto path =
        std::filesystem::path(cfg_.cache_dir) / (std::to_string(key) + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ScorerResponse::from_json(body);
}

void RemoteScorer::cache_store(std::uint64_t key, const std::string& body) const {
    if (cfg_.cache_dir.empty())
        return;
    std::filesystem::create_directories(cfg_.cache_dir);
    const auto path =
        std::filesystem::path(cfg_.cache_dir) / (std::to_string(key) + ".json");
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

ScorerResponse RemoteScorer::score(const ScorerRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::uint64_t key = request.content_hash();
    if (auto cached = cache_lookup(key))
        return *cached;

    std::map<std::string, std::string> headers;
    if (!cfg_.bearer_token.empty())
        headers["Authorization"] = "Bearer " + cfg_.bearer_token;

    const std::string body = request.to_json();
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            // base 0.5 s, factor 2, plus up to 25% jitter
            const double base_ms = 500.0 * static_cast<double>(1ull << (attempt - 1));
            jitter_state_ = jitter_state_ * 6364136223846793005ull + 1442695040888963407ull;
            const double jitter =
                static_cast<double>(jitter_state_ >> 40) / static_cast<double>(1 << 24);
            sleeper_(std::chrono::milliseconds(
                static_cast<long>(base_ms * (1.0 + 0.25 * jitter))));
        }
        Transport::Reply reply;
        try {
            ++network_calls_;
            reply = transport_->post(cfg_.endpoint, body, headers, cfg_.timeout);
        } catch (const BackendError& e) {
            last_error = e.what(); // transport-level failure: retryable
            continue;
        }
        if (reply.status >= 200 && reply.status < 300) {
            ScorerResponse response = ScorerResponse::from_json(reply.body);
            cache_store(key, response.to_json());
            return response;
        }
        if (reply.status >= 400 && reply.status < 500)
            throw BackendError("remote scorer: permanent failure (HTTP " +
                               std::to_string(reply.status) + ")");
        last_error = "HTTP " + std::to_string(reply.status);
    }
    throw BackendError("remote scorer: retries exhausted; last error: " + last_error);
}

} // namespace medprompt
