#include <chrono>
#include <cmath>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "uqdiag/gateway.hpp"
#include "uqdiag/util.hpp"

namespace uqdiag {

namespace {

// Splits "https://host:port/v1" into client origin and path prefix.
struct UrlParts {
    std::string origin;
    std::string prefix;
};

UrlParts split_url(const std::string& base_url) {
    std::size_t scheme = base_url.find("://");
    std::size_t path_start =
        base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

} // namespace

struct HttpBackend::Impl {
    HttpBackendConfig config;
    UrlParts url;
    std::counting_semaphore<256> in_flight;
    std::atomic<std::uint64_t> calls{0};

    explicit Impl(HttpBackendConfig cfg)
        : config(std::move(cfg)),
          url(split_url(config.base_url)),
          in_flight(std::max(1, config.max_in_flight)) {}

    GenerationResponse parse_response(const std::string& body, bool want_logprobs) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty()) {
            throw Error(ErrorCode::ProviderUnavailable, "malformed completion response");
        }
        const nlohmann::json& choice = j["choices"][0];
        GenerationResponse out;
        if (choice.contains("message") && choice["message"].contains("content") &&
            !choice["message"]["content"].is_null()) {
            out.text = choice["message"]["content"].get<std::string>();
        }
        out.finish_reason = choice.value("finish_reason", "stop");
        if (j.contains("usage")) {
            out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            out.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        if (want_logprobs) {
            // providers report log-probabilities; exponentiate here so callers
            // only ever see probabilities in (0,1]
            if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
                !choice["logprobs"].contains("content")) {
                throw Error(ErrorCode::LogprobsUnsupported,
                            "provider returned no token likelihoods");
            }
            std::vector<double> likelihoods;
            for (const auto& token : choice["logprobs"]["content"]) {
                likelihoods.push_back(std::exp(token.value("logprob", 0.0)));
            }
            out.token_likelihoods = std::move(likelihoods);
        }
        return out;
    }

    GenerationResponse generate(const GenerationRequest& request) {
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : request.messages) {
            messages.push_back({{"role", m.role}, {"content", m.content}});
        }
        nlohmann::json body{
            {"model", request.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        if (request.want_logprobs) body["logprobs"] = true;
        const std::string payload = body.dump();

        httplib::Headers headers{{"Authorization", "Bearer " + config.api_key}};
        std::string last_error;
        for (int attempt = 0; attempt < std::max(1, config.retry.attempts); ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(config.retry.base_delay_ms << (attempt - 1)));
            }
            in_flight.acquire();
            httplib::Client client(url.origin);
            client.set_connection_timeout(config.timeout_seconds, 0);
            client.set_read_timeout(config.timeout_seconds, 0);
            auto result = client.Post(url.prefix + "/chat/completions", headers, payload,
                                      "application/json");
            in_flight.release();
            ++calls;

            if (!result) {
                last_error = "transport error: " + httplib::to_string(result.error());
                continue;
            }
            if (result->status == 401 || result->status == 403) {
                throw Error(ErrorCode::AuthError,
                            "provider rejected credentials (HTTP " +
                                std::to_string(result->status) + ")");
            }
            if (retryable_status(result->status)) {
                last_error = "HTTP " + std::to_string(result->status);
                continue;
            }
            if (result->status < 200 || result->status >= 300) {
                throw Error(ErrorCode::ProviderUnavailable,
                            "HTTP " + std::to_string(result->status) + ": " + result->body);
            }
            return parse_response(result->body, request.want_logprobs);
        }
        throw Error(ErrorCode::ProviderUnavailable,
                    "request failed after " + std::to_string(config.retry.attempts) +
                        " attempts (" + last_error + ")");
    }
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

GenerationResponse HttpBackend::generate(const GenerationRequest& request) {
    return impl_->generate(request);
}

std::uint64_t HttpBackend::call_count() const { return impl_->calls.load(); }

// --- live search ---

HttpSearchProvider::HttpSearchProvider(std::string endpoint, std::string api_key,
                                       int timeout_seconds)
    : endpoint_(std::move(endpoint)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpSearchProvider::web_search(const std::string& query) {
    if (util::trim(query).empty()) {
        throw Error(ErrorCode::Precondition, "empty search query");
    }
    if (endpoint_.empty()) {
        throw Error(ErrorCode::SearchUnavailable, "no search endpoint configured");
    }
    UrlParts url = split_url(endpoint_);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto result = client.Post(url.prefix.empty() ? "/" : url.prefix, headers,
                              nlohmann::json{{"query", query}}.dump(), "application/json");
    if (!result || result->status < 200 || result->status >= 300) {
        throw Error(ErrorCode::SearchUnavailable,
                    "search endpoint failed" +
                        (result ? " (HTTP " + std::to_string(result->status) + ")" : ""));
    }
    nlohmann::json j = nlohmann::json::parse(result->body, nullptr, false);
    if (j.is_discarded() || !j.contains("passage")) {
        throw Error(ErrorCode::SearchUnavailable, "search endpoint returned no passage");
    }
    return j["passage"].get<std::string>();
}

} // namespace uqdiag
