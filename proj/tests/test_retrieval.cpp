#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "clakg/error.hpp"
#include "clakg/ingest.hpp"
#include "clakg/prompts.hpp"
#include "clakg/retrieval.hpp"
#include "retrieval_oracle.hpp"

using namespace clakg;
using retrieval::candidate_articles;
using retrieval::cosine;

namespace {

template <typename F>
Error error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected clakg::Error");
    return Error(ErrorCode::SystemFailure, "unreachable");
}

llm::Gateway scripted(std::vector<std::string> answers, std::shared_ptr<llm::ScriptedProvider>* out = nullptr) {
    auto p = std::make_shared<llm::ScriptedProvider>(std::move(answers));
    if (out) *out = p;
    return llm::Gateway(p, llm::RetryPolicy{0, std::chrono::milliseconds(0)});
}

Graph small_graph() {
    const auto arts = parse_statutes(std::filesystem::path(CLAKG_FIXTURES_DIR) / "small" / "statutes.jsonl");
    const auto cases = parse_judgments(std::filesystem::path(CLAKG_FIXTURES_DIR) / "small" / "judgments.jsonl");
    OfflineExtractor ex(arts);
    Graph g;
    build_lakg(g, arts, ex);
    build_ackg(g, cases, ex);
    return g;
}

}  // namespace

TEST_CASE("cosine") {
    const std::vector<float> v{1.5f, -2.0f, 0.25f};
    CHECK(cosine(v, v) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(std::vector<float>{1, 0}, std::vector<float>{0, 1}) == 0.0);
    for (float c : {0.001f, 3.0f, 1e6f}) {
        std::vector<float> w = v, neg = v;
        for (auto& x : w) x *= c;
        for (auto& x : neg) x *= -c;
        CHECK(cosine(v, w) == Catch::Approx(1.0).epsilon(1e-6));
        CHECK(cosine(v, neg) == Catch::Approx(-1.0).epsilon(1e-6));
    }
    CHECK(error_of([] { cosine(std::vector<float>{0, 0}, std::vector<float>{1, 0}); }).code() == ErrorCode::ZeroVector);
    CHECK(error_of([] { cosine(std::vector<float>{1, 0}, std::vector<float>{1, 0, 0}); }).code() ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("key matching") {
    const Graph g = small_graph();

    SECTION("scripted keyword list resolves") {
        std::shared_ptr<llm::ScriptedProvider> p;
        const auto gw = scripted({"accepting bribes; abuse of power; bribery"}, &p);
        const auto m = retrieval::match_keys("case text", gw, g);
        CHECK(m.phrases == std::vector<std::string>{"accepting bribes", "abuse of power", "bribery"});
        REQUIRE(m.resolved.size() == 3);
        CHECK(m.resolved[0] == *g.find_key_info("accepting bribes"));
        CHECK(m.resolved[2] == *g.find_key_info("bribery"));
        for (NodeId id : m.resolved) CHECK(g.node(id).kind == NodeKind::KeyInformation);

        // One request carrying the whole inventory.
        REQUIRE(p->requests().size() == 1);
        const std::string& user = p->requests()[0].user;
        for (NodeId id : g.nodes_of_kind(NodeKind::KeyInformation)) {
            CHECK(user.find(g.node(id).payload) != std::string::npos);
        }
    }
    SECTION("unknown phrases are dropped, duplicates collapse, case folds") {
        const auto gw = scripted({"foo; Bribery; bar; bribery; ACCEPTING BRIBES"});
        const auto m = retrieval::match_keys("case", gw, g);
        CHECK(m.resolved == std::vector<NodeId>{*g.find_key_info("bribery"), *g.find_key_info("accepting bribes")});
        CHECK(retrieval::match_keys("case", scripted({"foo; bar"}), g).resolved.empty());
    }
    SECTION("truncated to k in response order") {
        std::vector<std::string> inv;
        for (NodeId id : g.nodes_of_kind(NodeKind::KeyInformation)) inv.push_back(g.node(id).payload);
        REQUIRE(inv.size() >= 10);
        std::string answer;
        for (std::size_t i = 0; i < 10; ++i) answer += inv[i] + "; ";
        const auto m = retrieval::match_keys("case", scripted({answer}), g);
        REQUIRE(m.resolved.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) CHECK(g.node(m.resolved[i]).payload == inv[i]);
        CHECK(retrieval::match_keys("case", scripted({answer}), g, 3).resolved.size() == 3);
    }
    SECTION("large inventories are chunked") {
        std::shared_ptr<llm::ScriptedProvider> p;
        std::vector<std::string> answers(200, "");
        answers[0] = "bribery";
        answers[1] = "abuse of power; bribery";
        const auto gw = scripted(answers, &p);
        const auto m = retrieval::match_keys("case", gw, g, 8, 120);
        const std::size_t calls = p->consumed();
        CHECK(calls > 1);
        std::size_t inventory = 0;
        for (std::size_t i = 0; i < calls; ++i) {
            inventory += llm::parse_semicolon_list(llm::section_body(p->requests()[i].user, llm::section::kKeyNodes)).size();
        }
        CHECK(inventory == g.stats().node_count(NodeKind::KeyInformation));
        CHECK(m.resolved == std::vector<NodeId>{*g.find_key_info("bribery"), *g.find_key_info("abuse of power")});
    }
    SECTION("no key nodes, no request") {
        std::shared_ptr<llm::ScriptedProvider> p;
        const auto gw = scripted({}, &p);
        CHECK(retrieval::match_keys("case", gw, Graph{}).resolved.empty());
        CHECK(p->consumed() == 0);
    }
    SECTION("gateway errors propagate") {
        CHECK(error_of([&] { retrieval::match_keys("case", scripted({}), g); }).code() == ErrorCode::ScriptExhausted);
    }
}

TEST_CASE("candidate articles: degenerate and counted cases") {
    oracle::Instance inst;
    const NodeId art = inst.add_article("12");
    const NodeId key = inst.add_key("k", {art});
    inst.table.nodes[to_underlying(art)] = {1.0f, 2.0f};
    inst.table.nodes[to_underlying(key)] = {2.0f, -1.0f};
    auto r = candidate_articles(std::vector<NodeId>{key}, inst.graph, inst.table);
    REQUIRE(r.candidates.size() == 1);
    CHECK(r.candidates[0].number == "12");
    CHECK(r.candidates[0].cumulative_score == 0.0);
    CHECK(r.cosine_calls == 1);

    std::mt19937_64 rng(5);
    oracle::Instance ten = oracle::Instance::random(rng, 10, 3, 4);
    for (NodeId a : ten.articles) {
        for (NodeId k : ten.keys) ten.graph.add_edge(a, RelationKind::Key, k);
    }
    r = candidate_articles(ten.keys, ten.graph, ten.table);
    CHECK(r.pool_size == 10);
    CHECK(r.cosine_calls == 30);
    CHECK(r.candidates.size() == 5);
}

TEST_CASE("candidate articles match the brute-force oracle") {
    std::mt19937_64 rng(20240);
    double worst = 0.0;
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n_articles = 1 + rng() % 50;
        const std::size_t n_keys = 1 + rng() % 200;
        const oracle::Instance inst = oracle::Instance::random(rng, n_articles, n_keys, 1 + rng() % 8);
        const auto keys = inst.sample_keys(rng, 1 + rng() % 8);
        const std::size_t q = 1 + rng() % 7;

        const auto expected = oracle::brute_force(inst, keys, q);
        const auto got = candidate_articles(keys, inst.graph, inst.table, q);
        INFO("trial " << trial);
        REQUIRE(got.candidates.size() == expected.ranked.size());
        for (std::size_t i = 0; i < expected.ranked.size(); ++i) {
            CHECK(got.candidates[i].article == expected.ranked[i].first);
            worst = std::max(worst, std::abs(got.candidates[i].cumulative_score - expected.ranked[i].second));
        }
        CHECK(got.pool_size == expected.m);
        CHECK(got.cosine_calls == expected.m * keys.size());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("candidate articles properties") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        oracle::Instance inst = oracle::Instance::random(rng, 2 + rng() % 40, 1 + rng() % 60, 2 + rng() % 6);
        const auto keys = inst.sample_keys(rng, 1 + rng() % 6);
        const auto top5 = candidate_articles(keys, inst.graph, inst.table, 5);

        // Scores add up.
        for (const auto& c : top5.candidates) {
            double sum = 0.0;
            for (double s : c.per_key_scores) sum += s;
            CHECK(std::abs(sum - c.cumulative_score) < 1e-9);
            CHECK(c.per_key_scores.size() == keys.size());
        }
        // Non-increasing order.
        for (std::size_t i = 1; i < top5.candidates.size(); ++i) {
            CHECK(top5.candidates[i - 1].cumulative_score >= top5.candidates[i].cumulative_score);
        }
        // Monotone containment.
        const auto all = candidate_articles(keys, inst.graph, inst.table, top5.pool_size);
        CHECK(all.candidates.size() == top5.pool_size);
        for (std::size_t i = 0; i < top5.candidates.size(); ++i) {
            CHECK(all.candidates[i].article == top5.candidates[i].article);
        }
        // Fewer than q: everything, no padding.
        CHECK(top5.candidates.size() == std::min<std::size_t>(5, top5.pool_size));
        // Filter soundness.
        for (const auto& c : top5.candidates) {
            bool linked = false;
            for (NodeId k : keys) linked = linked || inst.graph.contains(Edge{c.article, RelationKind::Key, k});
            CHECK(linked);
        }
        // Positive scaling leaves the order unchanged.
        for (float scale : {0.25f, 4.0f, 3.7f}) {
            oracle::Instance scaled = inst;
            for (auto& [id, v] : scaled.table.nodes) {
                for (auto& x : v) x *= scale;
            }
            const auto again = candidate_articles(keys, scaled.graph, scaled.table, top5.pool_size);
            REQUIRE(again.candidates.size() == all.candidates.size());
            for (std::size_t i = 0; i < all.candidates.size(); ++i) {
                CHECK(again.candidates[i].article == all.candidates[i].article);
            }
        }
    }
}

TEST_CASE("candidate articles errors and precedents") {
    const Graph g = small_graph();
    EmbeddingTable table;
    table.provenance.h_dim = 3;
    std::mt19937_64 rng(3);
    std::normal_distribution<float> nd;
    for (const auto& [id, node] : g.nodes()) table.nodes[to_underlying(id)] = {nd(rng), nd(rng), nd(rng)};

    CHECK(error_of([&] { candidate_articles(std::vector<NodeId>{}, g, table); }).code() == ErrorCode::EmptyKeySet);

    const NodeId key = *g.find_key_info("accepting bribes");
    const auto r = candidate_articles(std::vector<NodeId>{key}, g, table);
    bool saw_385 = false;
    for (const auto& c : r.candidates) {
        if (c.number == "385") {
            saw_385 = true;
            CHECK(c.precedents == g.cases_for_article(c.article));
            CHECK(c.precedents.size() >= 2);
        }
    }
    CHECK(saw_385);

    EmbeddingTable missing = table;
    const NodeId a385 = *g.find_article("385");
    missing.nodes.erase(to_underlying(a385));
    Error e = error_of([&] { candidate_articles(std::vector<NodeId>{key}, g, missing); });
    CHECK(e.code() == ErrorCode::MissingEmbedding);
    CHECK(std::string(e.what()).find(std::to_string(to_underlying(a385))) != std::string::npos);

    EmbeddingTable zero = table;
    zero.nodes[to_underlying(key)] = {0.0f, 0.0f, 0.0f};
    CHECK(error_of([&] { candidate_articles(std::vector<NodeId>{key}, g, zero); }).code() == ErrorCode::ZeroVector);

    EmbeddingTable short_key = table;
    short_key.nodes[to_underlying(key)] = {1.0f};
    CHECK(error_of([&] { candidate_articles(std::vector<NodeId>{key}, g, short_key); }).code() ==
          ErrorCode::DimensionMismatch);

    CHECK(error_of([&] { candidate_articles(std::vector<NodeId>{a385}, g, table); }).code() == ErrorCode::WrongKind);
}
