#pragma once
// Uniform interface to text-generation providers: a live OpenAI-compatible
// HTTP backend, a deterministic scripted backend for tests and replays, and a
// persistent JSONL response cache that wraps either.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace uqdiag {

struct Message {
    std::string role;
    std::string content;

    bool operator==(const Message&) const = default;
};

// request_tag identifies the call site: "<question-id>#<stage>" plus
// "#<index>" for per-sample calls. Scripted fixtures key on it and the cache
// key includes it, so N sampling draws are cached as N distinct entries.
struct GenerationRequest {
    std::string model;
    std::vector<Message> messages;
    double temperature = 1.0;
    int max_tokens = 1024;
    bool want_logprobs = false;
    std::string request_tag;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct GenerationResponse {
    std::string text;
    // Per-token likelihoods in (0,1]; present only when the request asked for
    // them and the provider supports them.
    std::optional<std::vector<double>> token_likelihoods;
    std::string finish_reason = "stop";
    TokenUsage usage;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
    // Total generate() calls that reached this backend (not a cache layer).
    virtual std::uint64_t call_count() const = 0;
};

// Canonical serialization of a request; the cache key hashes this.
std::string request_cache_key(const GenerationRequest& request);

// --- scripted backend ------------------------------------------------------

// One canned response. Plain text is enough for most fixtures; likelihoods
// model providers that return token logprobs.
struct ScriptedResponse {
    std::string text;
    std::optional<std::vector<double>> token_likelihoods;
    std::string finish_reason = "stop";
};

// Deterministic fixture playback. The nth generate() call with a given tag
// returns the nth scripted response for that tag; exhaustion (or an unknown
// tag) is FixtureExhausted. Lookup falls back from the full request tag to
// shorter '#'-prefixes, so a fixture may script per-call entries
// ("q1#sample#3") or one ordered list per stage ("q1#sample") or question
// ("q1"). When an indexed tag ("...#3") resolves to a prefix list, the index
// selects the entry positionally, so sample k always receives entry k no
// matter the call order or process restarts.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::map<std::string, std::vector<ScriptedResponse>> fixtures,
                             bool logprobs_supported = false);

    // Loads the "generate" section of a fixture file (see load_fixture_file).
    static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& fixture);

    GenerationResponse generate(const GenerationRequest& request) override;
    std::uint64_t call_count() const override;

    // Tags of every generate() call, in call order.
    std::vector<std::string> call_log() const;

private:
    std::map<std::string, std::vector<ScriptedResponse>> fixtures_;
    std::map<std::string, std::size_t> cursor_;
    std::vector<std::string> calls_;
    bool logprobs_supported_ = false;
    mutable std::mutex mutex_;
};

// --- live backend ----------------------------------------------------------

struct RetryPolicy {
    int attempts = 3;
    // Delay before retry k (0-based) is base_delay_ms << k: 1s, 2s, 4s.
    int base_delay_ms = 1000;
};

struct HttpBackendConfig {
    std::string base_url;          // e.g. "https://api.example.com/v1"
    std::string api_key;           // from UQDIAG_API_KEY
    RetryPolicy retry;
    int max_in_flight = 8;
    int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions client. Retries transport failures and
// 429/5xx with exponential backoff; 401/403 is AuthError immediately; other
// 4xx are not retried. Log-probabilities are exponentiated at this boundary
// so the rest of the system only sees probabilities in (0,1].
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    GenerationResponse generate(const GenerationRequest& request) override;
    std::uint64_t call_count() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// --- cache -----------------------------------------------------------------

// Append-only JSONL response cache wrapped around another backend. A hit
// returns the stored response without touching the inner backend; a miss
// forwards and appends one record. Enabling the cache never changes returned
// text, only call counts. Lookups and writes serialize on one mutex.
class CachingBackend : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::string cache_path,
                   bool deterministic_timestamps = false);

    GenerationResponse generate(const GenerationRequest& request) override;
    std::uint64_t call_count() const override;   // calls that reached inner
    std::uint64_t hit_count() const;

private:
    std::shared_ptr<Backend> inner_;
    std::string path_;
    std::map<std::string, GenerationResponse> entries_;
    std::uint64_t hits_ = 0;
    bool deterministic_;
    mutable std::mutex mutex_;
};

// Cache-only playback of a previously recorded run. Any request not present
// in the cache file is ProviderUnavailable.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const std::string& cache_path);

    GenerationResponse generate(const GenerationRequest& request) override;
    std::uint64_t call_count() const override;

private:
    std::map<std::string, GenerationResponse> entries_;
    std::uint64_t calls_ = 0;
    mutable std::mutex mutex_;
};

// --- search ----------------------------------------------------------------

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    // Returns a short explanatory passage for the query.
    // Throws Precondition on empty query, SearchUnavailable when the backend
    // cannot serve it (callers may fall back to prompt synthesis).
    virtual std::string web_search(const std::string& query) = 0;
};

// Fixture search: a JSON object mapping query -> passage.
class FixtureSearchProvider : public SearchProvider {
public:
    explicit FixtureSearchProvider(std::map<std::string, std::string> passages);
    static FixtureSearchProvider from_json(const nlohmann::json& fixture);

    std::string web_search(const std::string& query) override;

private:
    std::map<std::string, std::string> passages_;
};

// Live search against a configurable endpoint: POST {"query": ...} returning
// {"passage": ...}. Any transport or protocol failure is SearchUnavailable.
class HttpSearchProvider : public SearchProvider {
public:
    HttpSearchProvider(std::string endpoint, std::string api_key,
                       int timeout_seconds = 60);

    std::string web_search(const std::string& query) override;

private:
    std::string endpoint_;
    std::string api_key_;
    int timeout_seconds_;
};

// Always unavailable; used when no search backend is configured.
class NullSearchProvider : public SearchProvider {
public:
    std::string web_search(const std::string& query) override;
};

// Parses a fixture file holding both sections:
//   {"generate": {tag: [response, ...]}, "search": {query: passage},
//    "logprobs_supported": bool}
// Response entries are plain strings or {"text", "likelihoods", "finish_reason"}.
struct Fixture {
    std::shared_ptr<ScriptedBackend> backend;
    std::shared_ptr<SearchProvider> search;
};

Fixture load_fixture_file(const std::string& path);

} // namespace uqdiag
