#pragma once
// Provider-agnostic chat completion.
//
// A Provider turns one ChatRequest into text. The Gateway adds the retry
// policy on top. Three providers ship with the library:
//   ScriptedProvider  canned responses for tests and replays
//   OfflineProvider   deterministic answers computed from the prompt itself
//   HttpProvider      JSON chat-completion endpoint (see http_provider.hpp)

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "clakg/error.hpp"

namespace clakg::llm {

struct Turn {
    std::string role;  // "user" or "assistant"
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct ChatRequest {
    std::string system;
    std::string user;
    std::vector<Turn> history;  // earlier turns, sent between system and user
    double temperature = 0.0;
    int max_tokens = 1024;

    bool operator==(const ChatRequest&) const = default;
};

// Stable hex fingerprint of everything the model sees.
std::string fingerprint(const ChatRequest& request);

// Failure raised by a provider. Transient failures are retried by the
// gateway; everything else propagates on first occurrence.
class ProviderError : public Error {
public:
    ProviderError(ErrorCode code, const std::string& message, bool transient)
        : Error(code, message), transient_(transient) {}
    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct RetryPolicy {
    int retries = 2;
    std::chrono::milliseconds base_backoff{250};
};

class Gateway {
public:
    explicit Gateway(std::shared_ptr<Provider> provider, RetryPolicy policy = {});

    // Retries transient failures with exponential backoff. Once the budget
    // is spent the last error is rethrown with the attempt count appended.
    std::string complete(const ChatRequest& request) const;

    const Provider& provider() const { return *provider_; }

private:
    std::shared_ptr<Provider> provider_;
    RetryPolicy policy_;
};

// Replays a script. Either an ordered list consumed front to back, or a map
// from request fingerprint to response. Running off the end of the list or
// missing a fingerprint raises ScriptExhausted; responses are never reused.
class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(std::vector<std::string> responses);
    explicit ScriptedProvider(std::map<std::string, std::string> by_fingerprint);

    // JSON array of strings, or an object mapping fingerprints to strings.
    static std::shared_ptr<ScriptedProvider> from_file(const std::string& path);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "scripted"; }

    std::size_t consumed() const;
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mutex_;
    std::variant<std::vector<std::string>, std::map<std::string, std::string>> script_;
    std::size_t cursor_ = 0;
    std::vector<ChatRequest> seen_;
};

// Answers the prompt templates in prompts.hpp without a model:
//   key matching    -> inventory phrases occurring in the case text
//   recommendation  -> the top-ranked candidate article
//   follow-up       -> restates the recommendation
// Anything else gets an empty answer.
class OfflineProvider final : public Provider {
public:
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "offline"; }
};

}  // namespace clakg::llm
