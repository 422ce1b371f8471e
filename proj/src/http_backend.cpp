#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "trails/error.hpp"
#include "trails/llm_gateway.hpp"

namespace trails {

using nlohmann::json;

namespace {

constexpr const char* kCompletionsPath = "/v1/chat/completions";

bool retryable_status(int status) { return status >= 500 && status <= 599; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(options_.endpoint, m, url))
        throw ConfigError("invalid LLM endpoint URL: " + options_.endpoint);
    scheme_host_port_ = m[1].str();
    std::string path = m[2].matched ? m[2].str() : std::string{};
    while (!path.empty() && path.back() == '/') path.pop_back();
    if (path.empty()) path = kCompletionsPath;
    else if (path.ends_with("/v1")) path += "/chat/completions";
    path_ = path;
    if (options_.attempts < 1) throw ConfigError("retry attempts must be >= 1");
}

LlmResponse HttpBackend::complete(const Messages& messages, const LlmParams& params,
                                  const CallContext&) {
    json body{{"model", params.model_name},
              {"temperature", params.temperature},
              {"max_tokens", params.max_output_tokens},
              {"messages", json::array()}};
    if (params.seed) body["seed"] = *params.seed;
    for (const auto& m : messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.text}});
    const std::string payload = body.dump();

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    std::string last_failure;
    auto backoff = options_.backoff;
    for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
        auto result = client.Post(path_, headers, payload, "application/json");
        if (!result) {
            last_failure = "transport failure: " + httplib::to_string(result.error());
        } else if (result->status == 401 || result->status == 403) {
            throw AuthError("LLM endpoint rejected credentials (HTTP " +
                            std::to_string(result->status) + ")");
        } else if (retryable_status(result->status)) {
            last_failure = "HTTP " + std::to_string(result->status);
        } else if (result->status < 200 || result->status >= 300) {
            throw TransportError("LLM endpoint returned HTTP " + std::to_string(result->status) +
                                 ": " + result->body.substr(0, 200));
        } else {
            try {
                auto reply = json::parse(result->body);
                LlmResponse response;
                response.backend = Backend::Live;
                response.attempts = attempt;
                const auto& content = reply.at("choices").at(0).at("message").at("content");
                response.text = content.is_string() ? content.get<std::string>() : std::string{};
                if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
                    response.usage.prompt_tokens = usage->value("prompt_tokens", std::uint64_t{0});
                    response.usage.completion_tokens =
                        usage->value("completion_tokens", std::uint64_t{0});
                }
                return response;
            } catch (const json::exception& e) {
                throw TransportError(std::string("malformed chat-completions reply: ") + e.what());
            }
        }
        if (attempt < options_.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw TransportError("LLM request failed after " + std::to_string(options_.attempts) +
                         " attempts (" + last_failure + ")");
}

}  // namespace trails
