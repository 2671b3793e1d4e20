#include "clakg/llm.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <thread>

#include <json.hpp>

#include "clakg/prompts.hpp"
#include "clakg/text.hpp"

namespace clakg::llm {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t parse_limit(std::string_view task, std::string_view marker, std::size_t fallback) {
    const auto pos = task.find(marker);
    if (pos == std::string_view::npos) return fallback;
    std::size_t value = 0;
    std::size_t i = pos + marker.size();
    bool any = false;
    while (i < task.size() && task[i] >= '0' && task[i] <= '9') {
        value = value * 10 + static_cast<std::size_t>(task[i] - '0');
        ++i;
        any = true;
    }
    return any ? value : fallback;
}

// Phrases from `candidates` that occur in `case_text`, most frequent first,
// ties in candidate order.
std::vector<std::string> phrases_in_text(std::string_view case_text, const std::vector<std::string>& candidates,
                                         std::size_t limit) {
    const auto haystack = text::tokenize(case_text);
    std::vector<std::pair<std::size_t, std::size_t>> hits;  // (count, candidate index)
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (std::find(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(i), candidates[i]) !=
            candidates.begin() + static_cast<std::ptrdiff_t>(i))
            continue;
        const std::size_t n = text::count_occurrences(haystack, text::tokenize(candidates[i]));
        if (n > 0) hits.emplace_back(n, i);
    }
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    for (const auto& [count, idx] : hits) {
        if (out.size() >= limit) break;
        out.push_back(candidates[idx]);
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

std::string fingerprint(const ChatRequest& request) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, request.system);
    h = fnv1a(h, "\x1f");
    for (const Turn& t : request.history) {
        h = fnv1a(h, t.role);
        h = fnv1a(h, "\x1e");
        h = fnv1a(h, t.text);
        h = fnv1a(h, "\x1f");
    }
    h = fnv1a(h, request.user);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Gateway::Gateway(std::shared_ptr<Provider> provider, RetryPolicy policy)
    : provider_(std::move(provider)), policy_(policy) {
    if (!provider_) throw std::invalid_argument("gateway needs a provider");
}

std::string Gateway::complete(const ChatRequest& request) const {
    if (text::trim(request.user).empty()) throw std::invalid_argument("chat request user text must be non-empty");
    const int attempts = 1 + std::max(0, policy_.retries);
    for (int attempt = 1;; ++attempt) {
        try {
            return provider_->complete(request);
        } catch (const ProviderError& e) {
            if (!e.transient()) throw;
            if (attempt >= attempts) {
                throw ProviderError(e.code(),
                                    std::string(e.what()) + " (gave up after " + std::to_string(attempt) + " attempts)",
                                    false);
            }
        }
        const auto delay = policy_.base_backoff * (1LL << std::min(attempt - 1, 10));
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
}

ScriptedProvider::ScriptedProvider(std::vector<std::string> responses) : script_(std::move(responses)) {}

ScriptedProvider::ScriptedProvider(std::map<std::string, std::string> by_fingerprint)
    : script_(std::move(by_fingerprint)) {}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open script " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::FormatError, "script " + path + ": " + e.what());
    }
    try {
        if (doc.is_array()) return std::make_shared<ScriptedProvider>(doc.get<std::vector<std::string>>());
        if (doc.is_object()) return std::make_shared<ScriptedProvider>(doc.get<std::map<std::string, std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, "script " + path + ": " + e.what());
    }
    throw Error(ErrorCode::FormatError, "script " + path + " must be a JSON array or object of strings");
}

std::string ScriptedProvider::complete(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    seen_.push_back(request);
    if (auto* list = std::get_if<std::vector<std::string>>(&script_)) {
        if (cursor_ >= list->size()) {
            throw ProviderError(ErrorCode::ScriptExhausted,
                                "script exhausted after " + std::to_string(list->size()) + " responses", false);
        }
        return (*list)[cursor_++];
    }
    auto& map = std::get<std::map<std::string, std::string>>(script_);
    const std::string fp = fingerprint(request);
    auto it = map.find(fp);
    if (it == map.end()) throw ProviderError(ErrorCode::ScriptExhausted, "no scripted response for request " + fp, false);
    std::string response = std::move(it->second);
    map.erase(it);
    ++cursor_;
    return response;
}

std::size_t ScriptedProvider::consumed() const {
    std::lock_guard lock(mutex_);
    return cursor_;
}

std::vector<ChatRequest> ScriptedProvider::requests() const {
    std::lock_guard lock(mutex_);
    return seen_;
}

std::string OfflineProvider::complete(const ChatRequest& request) {
    const std::string_view user = request.user;
    const std::string_view task = section_body(user, section::kTask);

    if (!section_body(user, section::kFollowup).empty()) {
        std::string previous;
        for (auto it = request.history.rbegin(); it != request.history.rend(); ++it) {
            if (it->role == "assistant") {
                previous = it->text;
                break;
            }
        }
        const auto first_line = previous.substr(0, previous.find('\n'));
        return "The earlier recommendation stands: " + (first_line.empty() ? std::string("none") : first_line);
    }

    if (auto inventory = section_body(user, section::kKeyNodes); !inventory.empty()) {
        const std::size_t limit = parse_limit(task, "output 0-", 8);
        return join(phrases_in_text(section_body(user, section::kNewCase), parse_semicolon_list(inventory), limit),
                    "; ");
    }

    if (auto candidates = section_body(user, section::kCandidateKeys); !candidates.empty()) {
        const std::size_t cap = parse_limit(task, "Select up to ", 5);
        return join(phrases_in_text(section_body(user, section::kNewCase), parse_semicolon_list(candidates), cap),
                    "; ");
    }

    if (auto candidates = section_body(user, section::kCandidates); !candidates.empty()) {
        static const std::regex kFirst(R"(^Article ([0-9]+(?:-[0-9]+)?):)");
        std::match_results<std::string_view::const_iterator> m;
        if (std::regex_search(candidates.begin(), candidates.end(), m, kFirst)) {
            return "Article " + m.str(1) + ". It is the highest-ranked candidate retrieved from the knowledge graph.";
        }
    }

    if (auto facts = section_body(user, section::kCaseFacts); !facts.empty()) {
        const std::size_t max_chars = parse_limit(task, "at most ", 400);
        return text::truncate_code_points(facts, max_chars);
    }

    return {};
}

}  // namespace clakg::llm
