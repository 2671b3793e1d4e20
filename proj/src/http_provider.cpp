#include "clakg/http_provider.hpp"

#include <cstdlib>

#include <httplib.h>

namespace clakg::llm {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

ProviderConfig ProviderConfig::from_environment() {
    ProviderConfig cfg;
    cfg.endpoint = env_or("CLAKG_LLM_ENDPOINT", "");
    cfg.model = env_or("CLAKG_LLM_MODEL", "gpt-4");
    return cfg;
}

nlohmann::ordered_json to_wire(const ChatRequest& request, const std::string& model) {
    nlohmann::ordered_json body;
    body["model"] = model;
    auto messages = nlohmann::ordered_json::array();
    auto message = [](std::string_view role, const std::string& content) {
        nlohmann::ordered_json m;
        m["role"] = role;
        m["content"] = content;
        return m;
    };
    if (!request.system.empty()) messages.push_back(message("system", request.system));
    for (const Turn& t : request.history) messages.push_back(message(t.role, t.text));
    messages.push_back(message("user", request.user));
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    return body;
}

std::string from_wire(const nlohmann::json& response) {
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(ErrorCode::FormatError, std::string("unexpected completion payload: ") + e.what(), false);
    }
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::Transport, "endpoint must be an absolute URL: \"" + config_.endpoint + "\"");
    }
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    base_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

std::string HttpProvider::complete(const ChatRequest& request) {
    const char* key = std::getenv(config_.credential_env.c_str());
    if (!key || !*key) {
        throw ProviderError(ErrorCode::AuthMissing, "environment variable " + config_.credential_env + " is not set",
                            false);
    }

    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    auto res = client.Post(path_, headers, to_wire(request, config_.model).dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
            throw ProviderError(ErrorCode::Timeout, "request to " + base_ + " timed out (" + httplib::to_string(err) + ")",
                                true);
        }
        throw ProviderError(ErrorCode::Transport, "request to " + base_ + " failed: " + httplib::to_string(err), true);
    }
    if (res->status == 429 || res->status >= 500) {
        throw ProviderError(ErrorCode::Transport, "endpoint returned HTTP " + std::to_string(res->status), true);
    }
    if (res->status != 200) {
        throw ProviderError(ErrorCode::Transport, "endpoint returned HTTP " + std::to_string(res->status), false);
    }
    nlohmann::json payload;
    try {
        payload = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProviderError(ErrorCode::Transport, std::string("endpoint returned invalid JSON: ") + e.what(), false);
    }
    return from_wire(payload);
}

std::shared_ptr<Provider> make_provider(std::string_view kind, const std::string& script_path) {
    if (kind == "offline") return std::make_shared<OfflineProvider>();
    if (kind == "scripted") {
        if (script_path.empty()) throw Error(ErrorCode::ConfigInvalid, "the scripted provider needs a script file");
        return ScriptedProvider::from_file(script_path);
    }
    if (kind == "llm") return std::make_shared<HttpProvider>(ProviderConfig::from_environment());
    throw Error(ErrorCode::ConfigInvalid, "unknown provider \"" + std::string(kind) + "\" (offline, scripted or llm)");
}

}  // namespace clakg::llm
