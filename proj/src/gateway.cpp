#include "uqdiag/gateway.hpp"

#include <utility>

#include "uqdiag/util.hpp"

namespace uqdiag {

namespace {

// Canonical JSON form of a request. Serialized once so the cache key and the
// stored cache record cannot drift apart.
nlohmann::json request_to_json(const GenerationRequest& r) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : r.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return nlohmann::json{
        {"model", r.model},
        {"messages", std::move(messages)},
        {"temperature", r.temperature},
        {"max_tokens", r.max_tokens},
        {"want_logprobs", r.want_logprobs},
        {"request_tag", r.request_tag},
    };
}

nlohmann::json response_to_json(const GenerationResponse& r) {
    nlohmann::json j{
        {"text", r.text},
        {"finish_reason", r.finish_reason},
        {"usage", {{"prompt_tokens", r.usage.prompt_tokens},
                   {"completion_tokens", r.usage.completion_tokens}}},
    };
    if (r.token_likelihoods) j["token_likelihoods"] = *r.token_likelihoods;
    return j;
}

GenerationResponse response_from_json(const nlohmann::json& j) {
    GenerationResponse r;
    r.text = j.value("text", "");
    r.finish_reason = j.value("finish_reason", "stop");
    if (j.contains("usage")) {
        r.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        r.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    if (j.contains("token_likelihoods")) {
        r.token_likelihoods = j["token_likelihoods"].get<std::vector<double>>();
    }
    return r;
}

std::map<std::string, GenerationResponse> load_cache_entries(const std::string& path) {
    std::map<std::string, GenerationResponse> entries;
    for (const auto& record : util::read_jsonl_repair(path)) {
        if (!record.contains("key") || !record.contains("response")) continue;
        entries[record["key"].get<std::string>()] = response_from_json(record["response"]);
    }
    return entries;
}

} // namespace

std::string request_cache_key(const GenerationRequest& request) {
    return util::fnv1a64_hex(request_to_json(request).dump());
}

// --- ScriptedBackend ---

ScriptedBackend::ScriptedBackend(std::map<std::string, std::vector<ScriptedResponse>> fixtures,
                                 bool logprobs_supported)
    : fixtures_(std::move(fixtures)), logprobs_supported_(logprobs_supported) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const nlohmann::json& fixture) {
    std::map<std::string, std::vector<ScriptedResponse>> fixtures;
    const nlohmann::json& generate =
        fixture.contains("generate") ? fixture.at("generate") : fixture;
    for (auto it = generate.begin(); it != generate.end(); ++it) {
        std::vector<ScriptedResponse> responses;
        const nlohmann::json& entry = it.value();
        auto parse_one = [](const nlohmann::json& e) {
            ScriptedResponse r;
            if (e.is_string()) {
                r.text = e.get<std::string>();
            } else {
                r.text = e.value("text", "");
                r.finish_reason = e.value("finish_reason", "stop");
                if (e.contains("likelihoods")) {
                    r.token_likelihoods = e["likelihoods"].get<std::vector<double>>();
                }
            }
            return r;
        };
        if (entry.is_array()) {
            for (const auto& e : entry) responses.push_back(parse_one(e));
        } else {
            responses.push_back(parse_one(entry));
        }
        fixtures[it.key()] = std::move(responses);
    }
    return std::make_shared<ScriptedBackend>(std::move(fixtures),
                                             fixture.value("logprobs_supported", false));
}

GenerationResponse ScriptedBackend::generate(const GenerationRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.push_back(request.request_tag);

    // exact tag first, then progressively shorter '#'-prefixes
    std::string tag = request.request_tag;
    const std::vector<ScriptedResponse>* scripted = nullptr;
    std::string matched;
    while (true) {
        auto it = fixtures_.find(tag);
        if (it != fixtures_.end()) {
            scripted = &it->second;
            matched = tag;
            break;
        }
        std::size_t cut = tag.rfind('#');
        if (cut == std::string::npos) break;
        tag.resize(cut);
    }
    if (!scripted) {
        throw Error(ErrorCode::FixtureExhausted,
                    "no scripted responses for tag '" + request.request_tag + "'");
    }

    // indexed tags resolved through a prefix select positionally; everything
    // else consumes the list in call order
    std::size_t pick;
    std::optional<std::size_t> positional;
    if (matched != request.request_tag) {
        std::size_t cut = request.request_tag.rfind('#');
        if (cut != std::string::npos) {
            std::string last = request.request_tag.substr(cut + 1);
            if (!last.empty() &&
                last.find_first_not_of("0123456789") == std::string::npos) {
                positional = static_cast<std::size_t>(std::stoul(last));
            }
        }
    }
    if (positional) {
        pick = *positional;
        if (pick >= scripted->size()) {
            throw Error(ErrorCode::FixtureExhausted,
                        "scripted list '" + matched + "' has no entry " +
                            std::to_string(pick));
        }
    } else {
        std::size_t& cursor = cursor_[matched];
        if (cursor >= scripted->size()) {
            throw Error(ErrorCode::FixtureExhausted,
                        "scripted responses for tag '" + matched + "' exhausted after " +
                            std::to_string(scripted->size()) + " calls");
        }
        pick = cursor++;
    }
    const ScriptedResponse& s = (*scripted)[pick];

    GenerationResponse response;
    response.text = s.text;
    response.finish_reason = s.finish_reason;
    if (request.want_logprobs) {
        if (s.token_likelihoods) {
            response.token_likelihoods = s.token_likelihoods;
        } else if (logprobs_supported_) {
            response.token_likelihoods = std::vector<double>{};
        } else {
            throw Error(ErrorCode::LogprobsUnsupported,
                        "fixture provides no token likelihoods for tag '" + matched + "'");
        }
    }
    return response;
}

std::uint64_t ScriptedBackend::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_.size();
}

std::vector<std::string> ScriptedBackend::call_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

// --- CachingBackend ---

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::string cache_path,
                               bool deterministic_timestamps)
    : inner_(std::move(inner)),
      path_(std::move(cache_path)),
      deterministic_(deterministic_timestamps) {
    entries_ = load_cache_entries(path_);
}

GenerationResponse CachingBackend::generate(const GenerationRequest& request) {
    std::string key = request_cache_key(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            ++hits_;
            return it->second;
        }
    }
    GenerationResponse response = inner_->generate(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto [it, inserted] = entries_.emplace(key, response);
        if (inserted) {
            nlohmann::json record{
                {"key", key},
                {"request", request_to_json(request)},
                {"response", response_to_json(response)},
                {"ts", deterministic_ ? 0 : static_cast<std::int64_t>(::time(nullptr))},
            };
            util::append_jsonl(path_, record);
        }
    }
    return response;
}

std::uint64_t CachingBackend::call_count() const { return inner_->call_count(); }

std::uint64_t CachingBackend::hit_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return hits_;
}

// --- ReplayBackend ---

ReplayBackend::ReplayBackend(const std::string& cache_path)
    : entries_(load_cache_entries(cache_path)) {
    if (!util::file_exists(cache_path)) {
        throw Error(ErrorCode::IoError, "replay cache not found: " + cache_path);
    }
}

GenerationResponse ReplayBackend::generate(const GenerationRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    auto it = entries_.find(request_cache_key(request));
    if (it == entries_.end()) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "request '" + request.request_tag + "' not present in replay cache");
    }
    return it->second;
}

std::uint64_t ReplayBackend::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

// --- search providers ---

FixtureSearchProvider::FixtureSearchProvider(std::map<std::string, std::string> passages)
    : passages_(std::move(passages)) {}

FixtureSearchProvider FixtureSearchProvider::from_json(const nlohmann::json& fixture) {
    std::map<std::string, std::string> passages;
    if (fixture.contains("search")) {
        for (auto it = fixture["search"].begin(); it != fixture["search"].end(); ++it) {
            passages[it.key()] = it.value().get<std::string>();
        }
    }
    return FixtureSearchProvider(std::move(passages));
}

std::string FixtureSearchProvider::web_search(const std::string& query) {
    if (util::trim(query).empty()) {
        throw Error(ErrorCode::Precondition, "empty search query");
    }
    auto it = passages_.find(query);
    if (it == passages_.end()) {
        throw Error(ErrorCode::SearchUnavailable, "no fixture passage for query '" + query + "'");
    }
    return it->second;
}

std::string NullSearchProvider::web_search(const std::string& query) {
    if (util::trim(query).empty()) {
        throw Error(ErrorCode::Precondition, "empty search query");
    }
    throw Error(ErrorCode::SearchUnavailable, "no search backend configured");
}

Fixture load_fixture_file(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::ParseError, "fixture file is not valid JSON: " + path);
    }
    Fixture fixture;
    fixture.backend = ScriptedBackend::from_json(j);
    fixture.search =
        std::make_shared<FixtureSearchProvider>(FixtureSearchProvider::from_json(j));
    return fixture;
}

} // namespace uqdiag
