#include <random>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "clakg/embedding.hpp"
#include "clakg/error.hpp"

using namespace clakg;

namespace {

Graph tiny_graph() {
    Graph g;
    for (int a = 0; a < 4; ++a) {
        const NodeId art = g.add_node(NodeKind::OriginalArticle, "body of article " + std::to_string(a));
        g.add_edge(art, RelationKind::Id, g.add_node(NodeKind::LawArticleId, std::to_string(380 + a)));
        g.add_edge(art, RelationKind::Key, g.add_node(NodeKind::KeyInformation, "key " + std::to_string(a)));
        g.add_edge(art, RelationKind::Key, g.add_node(NodeKind::KeyInformation, "shared key"));
    }
    for (int c = 0; c < 3; ++c) {
        const NodeId cs = g.add_node(NodeKind::CaseName, "case " + std::to_string(c));
        g.add_edge(cs, RelationKind::ApplicableLaw, *g.find_law_article_id(std::to_string(380 + c)));
        g.add_edge(cs, RelationKind::AgreeWith, *g.find_key_info("key " + std::to_string(c)));
        g.add_edge(cs, RelationKind::Reason, g.add_node(NodeKind::ProsecutionReason, "reason " + std::to_string(c)));
        g.add_edge(cs, RelationKind::Detail, g.add_node(NodeKind::CaseSpecifics, "details " + std::to_string(c)));
        g.add_edge(cs, RelationKind::OccurInTime, g.add_node(NodeKind::SessionTime, "2020-01-0" + std::to_string(c + 1)));
    }
    return g;
}

EmbeddingTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<float> nd(0.0f, 3.0f);
    EmbeddingTable t;
    t.provenance.h_dim = d;
    t.provenance.seed = rng();
    t.provenance.epoch = 31;
    t.provenance.test_auc = 0.8125;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t id = i * 3 + 1;
        std::vector<float> v(d);
        for (auto& x : v) x = nd(rng) * std::pow(10.0f, static_cast<float>(rng() % 20) - 10.0f);
        t.nodes.emplace(id, v);
        t.provenance.node_ids.push_back(id);
    }
    t.relations.emplace("Key", std::vector<float>(d, 0.25f));
    t.relations.emplace("Id", std::vector<float>(d, -1e-30f));
    return t;
}

ErrorCode code_of(const std::string& text) {
    std::istringstream in(text);
    try {
        EmbeddingTable::read(in);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::SystemFailure;
}

}  // namespace

TEST_CASE("embedding table round-trips bit-exactly") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const EmbeddingTable t = random_table(rng, 1 + rng() % 30, 1 + rng() % 16);
        std::stringstream buf;
        t.write(buf);
        const EmbeddingTable back = EmbeddingTable::read(buf);
        CHECK(back == t);
        std::stringstream again;
        back.write(again);
        CHECK(again.str() == buf.str());
    }

    const auto path = std::filesystem::temp_directory_path() / "clakg_embedding_roundtrip.json";
    const EmbeddingTable t = random_table(rng, 5, 4);
    t.save(path);
    CHECK(EmbeddingTable::load(path) == t);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(EmbeddingTable::load(path), Error);
}

TEST_CASE("embedding file errors") {
    const std::string prov = R"("provenance":{"h_dim":2,"seed":1,"epoch":0,"node_ids":[1,2]})";
    CHECK(code_of("{" + prov + R"(,"nodes":{"1":[0,1]},"relations":{}})") == ErrorCode::FormatError);
    CHECK(code_of("{" + prov + R"(,"nodes":{"1":[0,1],"2":[1,2,3]},"relations":{}})") == ErrorCode::DimensionMismatch);
    CHECK(code_of("{" + prov + R"(,"nodes":{"1":[0,1],"2":[1,2]},"relations":{"Key":[1]}})") ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of("{" + prov + R"(,"nodes":{"1":[0,1],"2":[1,2],"3":[1,2]},"relations":{}})") ==
          ErrorCode::FormatError);
    CHECK(code_of("{" + prov + R"(,"nodes":{"1":[0,1],"x":[1,2]},"relations":{}})") == ErrorCode::FormatError);
    CHECK(code_of(R"({"nodes":{},"relations":{}})") == ErrorCode::FormatError);
    CHECK(code_of("not json") == ErrorCode::FormatError);

    std::istringstream ok("{" + prov + R"(,"nodes":{"1":[0,1],"2":[1,2]},"relations":{}})");
    const EmbeddingTable t = EmbeddingTable::read(ok);
    CHECK(t.at(NodeId{2}) == std::vector<float>{1, 2});
    try {
        t.at(NodeId{9});
        FAIL("expected MissingEmbedding");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingEmbedding);
        CHECK(std::string(e.what()).find("9") != std::string::npos);
    }
}

TEST_CASE("store to index graph") {
    const Graph g = tiny_graph();
    std::vector<NodeId> order;
    const rgcn::TripleGraph tg = to_triple_graph(g, &order);
    CHECK(tg.num_nodes == g.node_count());
    CHECK(tg.num_relations == kRelationKindCount);
    CHECK(tg.triples.size() == g.edge_count());
    CHECK(std::is_sorted(order.begin(), order.end()));
    for (const rgcn::Triple& t : tg.triples) {
        CHECK(g.contains(Edge{order[t.s], kAllRelationKinds[t.r], order[t.o]}));
    }
}

TEST_CASE("training on the store embeds every node") {
    Graph g = tiny_graph();
    rgcn::RgcnConfig cfg;
    cfg.seed = 3;
    cfg.num_epochs = 5;
    cfg.h_dim = 6;
    const TrainedEmbeddings te = train_embeddings(g, cfg);
    CHECK(te.history.size() == 5);
    CHECK(te.table.nodes.size() == g.node_count());
    CHECK(te.table.relations.size() == kRelationKindCount);
    CHECK(te.table.missing(g).empty());
    CHECK(te.table.provenance.h_dim == 6);
    CHECK(te.table.provenance.epoch >= 1);
    for (const auto& [id, v] : te.table.nodes) CHECK(v.size() == 6);

    const NodeId late = g.add_node(NodeKind::CaseName, "a later case");
    CHECK(te.table.missing(g) == std::vector<NodeId>{late});

    CHECK(train_embeddings(tiny_graph(), cfg).table == te.table);
}
