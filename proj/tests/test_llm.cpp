#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <catch2/catch_amalgamated.hpp>
#include <httplib.h>

#include "clakg/http_provider.hpp"
#include "clakg/llm.hpp"
#include "clakg/prompts.hpp"

using namespace clakg;
using namespace clakg::llm;

namespace {

// Fails with a transient transport error `failures` times, then answers.
class FlakyProvider final : public Provider {
public:
    explicit FlakyProvider(int failures) : failures_(failures) {}
    std::string complete(const ChatRequest&) override {
        ++calls;
        if (calls <= failures_) throw ProviderError(ErrorCode::Transport, "connection reset", true);
        return "ok";
    }
    std::string name() const override { return "flaky"; }
    int calls = 0;

private:
    int failures_;
};

ChatRequest simple(std::string user) { return ChatRequest{"system", std::move(user)}; }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Compares against tests/golden/<name>; CLAKG_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const ChatRequest& req) {
    const auto path = std::filesystem::path(CLAKG_TESTS_DIR) / "golden" / name;
    const std::string rendered = "=== system\n" + req.system + "\n=== user\n" + req.user + "\n";
    if (const char* update = std::getenv("CLAKG_UPDATE_GOLDEN"); update && std::string(update) == "1") {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << rendered;
    }
    REQUIRE(std::filesystem::exists(path));
    CHECK(read_file(path) == rendered);
}

const std::vector<std::string> kInventory = {"accepting bribes", "abuse of power", "bribery"};

}  // namespace

TEST_CASE("scripted provider replays in order and refuses to reuse") {
    auto scripted = std::make_shared<ScriptedProvider>(std::vector<std::string>{"Article 385"});
    Gateway gw(scripted, {0, std::chrono::milliseconds(0)});
    CHECK(gw.complete(simple("q")) == "Article 385");
    try {
        gw.complete(simple("q"));
        FAIL("expected exhaustion");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ScriptExhausted);
    }
    CHECK(scripted->consumed() == 1);
    CHECK(scripted->requests().size() == 2);
}

TEST_CASE("scripted provider keyed by fingerprint") {
    const auto a = simple("first");
    const auto b = simple("second");
    CHECK(fingerprint(a) != fingerprint(b));
    CHECK(fingerprint(a) == fingerprint(simple("first")));
    ScriptedProvider p(std::map<std::string, std::string>{{fingerprint(a), "A"}, {fingerprint(b), "B"}});
    CHECK(p.complete(b) == "B");
    CHECK(p.complete(a) == "A");
    CHECK_THROWS_AS(p.complete(a), ProviderError);
}

TEST_CASE("gateway retries transient failures") {
    auto flaky = std::make_shared<FlakyProvider>(2);
    Gateway gw(flaky, {3, std::chrono::milliseconds(0)});
    CHECK(gw.complete(simple("x")) == "ok");
    CHECK(flaky->calls == 3);
}

TEST_CASE("gateway reports attempt count when the budget is spent") {
    auto flaky = std::make_shared<FlakyProvider>(100);
    Gateway gw(flaky, {3, std::chrono::milliseconds(0)});
    try {
        gw.complete(simple("x"));
        FAIL("expected transport error");
    } catch (const ProviderError& e) {
        CHECK(e.code() == ErrorCode::Transport);
        CHECK(std::string(e.what()).find("after 4 attempts") != std::string::npos);
    }
    CHECK(flaky->calls == 4);
}

TEST_CASE("key matching prompt") {
    const auto req = prompt_key_matching("Zhang accepted bribes.", kInventory);
    CHECK(req.system == "Expert in law article analysis");
    CHECK(req.user.find("0-8 key information nodes most relevant") != std::string::npos);
    for (const auto& phrase : kInventory) CHECK(req.user.find(phrase) != std::string::npos);
    CHECK(req.user.find("separated by semicolons (;)") != std::string::npos);

    // sections in the fixed order
    std::size_t last = 0;
    for (auto header : {section::kTask, section::kNewCase, section::kKeyNodes, section::kPrecautions,
                        section::kOutputExample}) {
        const auto pos = req.user.find(header);
        REQUIRE(pos != std::string::npos);
        CHECK(pos >= last);
        last = pos;
    }
    CHECK(prompt_key_matching("Zhang accepted bribes.", kInventory) == req);
    check_golden("key_matching.txt", req);
}

TEST_CASE("inventory chunking preserves order") {
    std::vector<std::string> inv;
    for (int i = 0; i < 100; ++i) inv.push_back("phrase number " + std::to_string(i));
    auto chunks = chunk_inventory(inv, 200);
    CHECK(chunks.size() > 1);
    std::vector<std::string> flat;
    for (auto& c : chunks) {
        CHECK(!c.empty());
        flat.insert(flat.end(), c.begin(), c.end());
    }
    CHECK(flat == inv);
    CHECK(chunk_inventory(inv, 1).size() == inv.size());
    CHECK(chunk_inventory({}, 100).empty());
}

TEST_CASE("recommendation prompt carries every component") {
    std::vector<CandidateText> cands;
    for (int i = 0; i < 5; ++i) cands.push_back({std::to_string(380 + i), "Body of article " + std::to_string(380 + i)});
    std::vector<PrecedentText> precedents = {
        {"Li bribery case", "2021-05-01", "accepting bribes", "took 50,000 yuan"},
        {"Wang bribery case", "2022-02-03", "accepting bribes", "took 8,000 yuan"},
    };
    const auto req = prompt_recommendation("new case", cands, precedents);

    std::size_t last = 0;
    for (auto header : {section::kTask, section::kNewCase, section::kReferenceCases, section::kCandidates,
                        section::kOutputExample}) {
        const auto pos = req.user.find(header);
        REQUIRE(pos != std::string::npos);
        CHECK(pos >= last);
        last = pos;
    }
    last = 0;
    for (const auto& p : precedents) {
        const auto pos = req.user.find(p.name);
        REQUIRE(pos != std::string::npos);
        CHECK(pos > last);
        last = pos;
        CHECK(req.user.find(p.specifics) != std::string::npos);
    }
    for (const auto& c : cands) {
        const auto pos = req.user.find("Article " + c.number + ": " + c.body);
        REQUIRE(pos != std::string::npos);
        CHECK(pos > last);
        last = pos;
    }
    check_golden("recommendation.txt", req);

    const auto no_precedents = prompt_recommendation("new case", cands, {});
    CHECK(no_precedents.user.find("(no reference cases)") != std::string::npos);

    try {
        prompt_recommendation("new case", {}, precedents);
        FAIL("expected NoCandidates");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoCandidates);
    }
}

TEST_CASE("section_body extracts one section") {
    const auto req = prompt_key_matching("case text here", kInventory);
    CHECK(section_body(req.user, section::kNewCase) == "case text here");
    CHECK(section_body(req.user, section::kKeyNodes) == "accepting bribes; abuse of power; bribery");
    CHECK(section_body(req.user, section::kCandidates).empty());
}

TEST_CASE("parse_semicolon_list") {
    CHECK(parse_semicolon_list("accepting bribes; abuse of power; bribery") ==
          std::vector<std::string>{"accepting bribes", "abuse of power", "bribery"});
    CHECK(parse_semicolon_list("a;;b; ") == std::vector<std::string>{"a", "b"});
    CHECK(parse_semicolon_list("公私财物；多次盗窃") == std::vector<std::string>{"公私财物", "多次盗窃"});
    CHECK(parse_semicolon_list("theft.; fraud。") == std::vector<std::string>{"theft", "fraud"});
    CHECK(parse_semicolon_list("x; x") == std::vector<std::string>{"x", "x"});
    CHECK(parse_semicolon_list("").empty());
    CHECK(parse_semicolon_list(" ;\t; ").empty());
}

TEST_CASE("parse_semicolon_list is total and round-trips") {
    std::mt19937 rng(3);
    const std::string alphabet = "ab ;.,\t\n\xEF\xBC\x9B\xE5\x85\xAC";
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const int len = static_cast<int>(rng() % 30);
        for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        for (const auto& piece : parse_semicolon_list(s)) {
            CHECK(!piece.empty());
            CHECK(piece.front() != ' ');
            CHECK(piece.back() != ' ');
        }
    }
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> phrases;
        const int n = static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            std::string p = "w" + std::to_string(rng() % 1000);
            if (rng() % 2) p += " of " + std::to_string(rng() % 50);
            phrases.push_back(p);
        }
        std::string joined;
        for (std::size_t i = 0; i < phrases.size(); ++i) joined += (i ? "; " : "") + phrases[i];
        CHECK(parse_semicolon_list(joined) == phrases);
    }
}

TEST_CASE("parse_article_ids") {
    CHECK(parse_article_ids("Article 385") == std::vector<std::string>{"385"});
    CHECK(parse_article_ids("Articles 385 and 397 apply") == std::vector<std::string>{"385", "397"});
    CHECK(parse_article_ids("Article 397, then Article 385 and again Article 397") ==
          std::vector<std::string>{"397", "385"});
    CHECK(parse_article_ids("Articles 382, 383 and 386.") == std::vector<std::string>{"382", "383", "386"});
    CHECK(parse_article_ids("依据第385条") == std::vector<std::string>{"385"});
    CHECK(parse_article_ids("适用第三百八十五条和第三百八十六条") == std::vector<std::string>{"385", "386"});
    CHECK(parse_article_ids("第一百零二条") == std::vector<std::string>{"102"});
    CHECK(parse_article_ids("  385. ") == std::vector<std::string>{"385"});
    CHECK(parse_article_ids("article 133-1 applies") == std::vector<std::string>{"133-1"});
    try {
        parse_article_ids("no applicable article");
        FAIL("expected NoArticleFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoArticleFound);
    }
    CHECK_THROWS_AS(parse_article_ids("The fine was 385 yuan"), Error);
}

TEST_CASE("offline provider answers the templates") {
    OfflineProvider offline;
    const auto km = prompt_key_matching("He was accepting bribes and committed bribery; more bribery followed.", kInventory);
    CHECK(parse_semicolon_list(offline.complete(km)) == std::vector<std::string>{"bribery", "accepting bribes"});

    std::vector<CandidateText> cands = {{"385", "body"}, {"386", "body"}};
    CHECK(parse_article_ids(offline.complete(prompt_recommendation("case", cands, {}))) ==
          std::vector<std::string>{"385"});
    CHECK_THROWS_AS(parse_article_ids(offline.complete(prompt_direct("case"))), Error);

    const auto sel = prompt_select_keys("abuse of power by a clerk", kInventory, 5);
    CHECK(offline.complete(sel) == "abuse of power");
}

TEST_CASE("wire format carries messages in order") {
    ChatRequest req{"sys", "question"};
    req.history = {{"user", "earlier"}, {"assistant", "answer"}};
    const auto wire = to_wire(req, "gpt-4");
    CHECK(wire["model"] == "gpt-4");
    REQUIRE(wire["messages"].size() == 4);
    CHECK(wire["messages"][0]["role"] == "system");
    CHECK(wire["messages"][2]["role"] == "assistant");
    CHECK(wire["messages"][3]["content"] == "question");
    CHECK(wire["temperature"] == 0.0);
    CHECK(wire.dump() == to_wire(req, "gpt-4").dump());
    CHECK(from_wire(nlohmann::json::parse(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})")) == "hi");
    CHECK_THROWS_AS(from_wire(nlohmann::json::parse(R"({"choices":[]})")), Error);
}

TEST_CASE("http provider against a local endpoint") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::atomic<int> fail_first{0};
    std::string last_body, last_auth;
    std::mutex mu;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++hits;
        {
            std::lock_guard lock(mu);
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
        }
        if (n <= fail_first.load()) {
            res.status = 503;
            return;
        }
        nlohmann::json body = nlohmann::json::parse(req.body);
        nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + body["messages"].back()["content"].get<std::string>()}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ProviderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.model = "test-model";
    cfg.credential_env = "CLAKG_TEST_SECRET_KEY";
    cfg.timeout_seconds = 5;
    const std::string secret = "sk-very-secret-value-123";

    SECTION("missing credential") {
        unsetenv("CLAKG_TEST_SECRET_KEY");
        HttpProvider p(cfg);
        try {
            p.complete(simple("hello"));
            FAIL("expected AuthMissing");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AuthMissing);
            CHECK(error_code_name(e.code()) == "gateway_error");
        }
        CHECK(hits == 0);
    }
    SECTION("round trip, retries and secret hygiene") {
        setenv("CLAKG_TEST_SECRET_KEY", secret.c_str(), 1);
        fail_first = 2;
        Gateway gw(std::make_shared<HttpProvider>(cfg), {3, std::chrono::milliseconds(1)});
        CHECK(gw.complete(simple("hello")) == "echo: hello");
        CHECK(hits == 3);
        std::lock_guard lock(mu);
        CHECK(last_auth == "Bearer " + secret);
        CHECK(last_body.find(secret) == std::string::npos);
        CHECK(nlohmann::json::parse(last_body)["model"] == "test-model");
        unsetenv("CLAKG_TEST_SECRET_KEY");
    }
    SECTION("server errors surface as gateway errors") {
        setenv("CLAKG_TEST_SECRET_KEY", secret.c_str(), 1);
        fail_first = 100;
        Gateway gw(std::make_shared<HttpProvider>(cfg), {1, std::chrono::milliseconds(0)});
        try {
            gw.complete(simple("hello"));
            FAIL("expected Transport");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Transport);
            CHECK(std::string(e.what()).find(secret) == std::string::npos);
        }
        unsetenv("CLAKG_TEST_SECRET_KEY");
    }

    server.stop();
    th.join();
}

TEST_CASE("unreachable endpoint is a transport failure") {
    ProviderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    cfg.credential_env = "CLAKG_TEST_SECRET_KEY";
    cfg.timeout_seconds = 1;
    setenv("CLAKG_TEST_SECRET_KEY", "k", 1);
    HttpProvider p(cfg);
    try {
        p.complete(simple("hello"));
        FAIL("expected a gateway error");
    } catch (const ProviderError& e) {
        CHECK(is_gateway_error(e.code()));
        CHECK(e.transient());
    }
    unsetenv("CLAKG_TEST_SECRET_KEY");
}
