#pragma once
// Random retrieval instances and a literal, index-free transcription of the
// candidate ranking loop used as an oracle.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "clakg/embedding.hpp"
#include "clakg/graph.hpp"

namespace oracle {

struct Instance {
    clakg::Graph graph;
    clakg::EmbeddingTable table;
    std::vector<clakg::NodeId> articles;
    std::vector<clakg::NodeId> keys;

    clakg::NodeId add_article(const std::string& number) {
        const clakg::NodeId a = graph.add_node(clakg::NodeKind::OriginalArticle, "article " + number);
        graph.add_edge(a, clakg::RelationKind::Id, graph.add_node(clakg::NodeKind::LawArticleId, number));
        articles.push_back(a);
        return a;
    }

    clakg::NodeId add_key(const std::string& phrase, const std::vector<clakg::NodeId>& linked) {
        const clakg::NodeId k = graph.add_node(clakg::NodeKind::KeyInformation, phrase);
        for (clakg::NodeId a : linked) graph.add_edge(a, clakg::RelationKind::Key, k);
        keys.push_back(k);
        return k;
    }

    // Articles get distinct numbers and each links to 0-5 random keys. About
    // one article in eight copies an earlier article's vector to force ties.
    static Instance random(std::mt19937_64& rng, std::size_t n_articles, std::size_t n_keys, std::size_t dim) {
        Instance inst;
        inst.table.provenance.h_dim = dim;
        std::vector<int> numbers(1000);
        for (int i = 0; i < 1000; ++i) numbers[static_cast<std::size_t>(i)] = i + 1;
        std::shuffle(numbers.begin(), numbers.end(), rng);

        std::normal_distribution<float> nd;
        auto vec = [&] {
            std::vector<float> v(dim);
            do {
                for (auto& x : v) x = nd(rng);
            } while (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; }));
            return v;
        };
        for (std::size_t i = 0; i < n_articles; ++i) {
            const clakg::NodeId a = inst.add_article(std::to_string(numbers[i]));
            if (i > 0 && rng() % 8 == 0) {
                inst.table.nodes[clakg::to_underlying(a)] =
                    inst.table.nodes.at(clakg::to_underlying(inst.articles[rng() % i]));
            } else {
                inst.table.nodes[clakg::to_underlying(a)] = vec();
            }
        }
        for (std::size_t k = 0; k < n_keys; ++k) {
            const clakg::NodeId key = inst.add_key("key " + std::to_string(k), {});
            inst.table.nodes[clakg::to_underlying(key)] = vec();
        }
        for (clakg::NodeId a : inst.articles) {
            const std::size_t links = rng() % 6;
            for (std::size_t l = 0; l < links; ++l) {
                inst.graph.add_edge(a, clakg::RelationKind::Key, inst.keys[rng() % inst.keys.size()]);
            }
        }
        for (const auto& [id, node] : inst.graph.nodes()) {
            if (!inst.table.nodes.contains(clakg::to_underlying(id))) {
                inst.table.nodes[clakg::to_underlying(id)] = vec();
            }
            inst.table.provenance.node_ids.push_back(clakg::to_underlying(id));
        }
        return inst;
    }

    std::vector<clakg::NodeId> sample_keys(std::mt19937_64& rng, std::size_t n) const {
        std::vector<clakg::NodeId> pool = keys;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min(n, pool.size()));
        return pool;
    }
};

struct Ranking {
    std::vector<std::pair<clakg::NodeId, double>> ranked;
    std::size_t m = 0;
};

inline double plain_cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        aa += static_cast<double>(a[i]) * a[i];
        bb += static_cast<double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(aa) * std::sqrt(bb));
}

// Collect every article holding a Key edge to some matched key by scanning the
// edge list, score it against every matched key, order by score then by the
// numeric article number, keep q.
inline Ranking brute_force(const clakg::Graph& graph, const clakg::EmbeddingTable& table,
                           const std::vector<clakg::NodeId>& keys, std::size_t q) {
    std::vector<clakg::NodeId> candidates;
    for (const auto& [id, node] : graph.nodes()) {
        if (node.kind != clakg::NodeKind::OriginalArticle) continue;
        bool linked = false;
        for (const clakg::Edge& e : graph.edges()) {
            if (e.head != id || e.relation != clakg::RelationKind::Key) continue;
            for (clakg::NodeId k : keys) linked = linked || e.tail == k;
        }
        if (linked) candidates.push_back(id);
    }

    struct Row {
        clakg::NodeId id;
        double score;
        long number;
    };
    std::vector<Row> rows;
    for (clakg::NodeId a : candidates) {
        double score = 0;
        for (clakg::NodeId k : keys) {
            score += plain_cosine(table.nodes.at(clakg::to_underlying(a)), table.nodes.at(clakg::to_underlying(k)));
        }
        long number = 0;
        for (const clakg::Edge& e : graph.edges()) {
            if (e.head == a && e.relation == clakg::RelationKind::Id) number = std::stol(graph.node(e.tail).payload);
        }
        rows.push_back({a, score, number});
    }
    // Selection sort, best first.
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t best = i;
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const bool better = rows[j].score > rows[best].score ||
                                (rows[j].score == rows[best].score && rows[j].number < rows[best].number);
            if (better) best = j;
        }
        std::swap(rows[i], rows[best]);
    }

    Ranking out;
    out.m = rows.size();
    for (std::size_t i = 0; i < rows.size() && i < q; ++i) out.ranked.emplace_back(rows[i].id, rows[i].score);
    return out;
}

inline Ranking brute_force(const Instance& inst, const std::vector<clakg::NodeId>& keys, std::size_t q) {
    return brute_force(inst.graph, inst.table, keys, q);
}

}  // namespace oracle
