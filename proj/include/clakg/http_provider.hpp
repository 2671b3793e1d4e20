#pragma once

#include <string>

#include <json.hpp>

#include "clakg/llm.hpp"

namespace clakg::llm {

struct ProviderConfig {
    std::string endpoint;  // full URL of the chat-completions resource
    std::string model;
    std::string credential_env = "CLAKG_LLM_KEY";
    int timeout_seconds = 60;
    RetryPolicy retry;

    // CLAKG_LLM_ENDPOINT / CLAKG_LLM_MODEL, with the credential left in the
    // environment under credential_env.
    static ProviderConfig from_environment();
};

// Request body for the chat-completions wire format (docs/llm-wire.md).
// Never contains the credential.
nlohmann::ordered_json to_wire(const ChatRequest& request, const std::string& model);

// Text of choices[0].message.content; FormatError otherwise.
std::string from_wire(const nlohmann::json& response);

class HttpProvider final : public Provider {
public:
    explicit HttpProvider(ProviderConfig config);

    // Reads the credential from the environment on every call; a missing
    // variable raises AuthMissing.
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "llm"; }

private:
    ProviderConfig config_;
    std::string base_;  // scheme://host[:port]
    std::string path_;
};

// "offline", "scripted" (reads script_path) or "llm" (configured from the
// environment). ConfigInvalid for anything else.
std::shared_ptr<Provider> make_provider(std::string_view kind, const std::string& script_path = {});

}  // namespace clakg::llm
