#pragma once
// Independent RGCN oracles: random triple graphs, an explicit-loop forward
// pass and a quadratic pair-counting AUC.

#include <random>
#include <set>
#include <vector>

#include "clakg/rgcn.hpp"

namespace oracle {

using clakg::rgcn::Matrix;
using clakg::rgcn::RgcnParams;
using clakg::rgcn::TrainingTriple;
using clakg::rgcn::Triple;
using clakg::rgcn::TripleGraph;

inline TripleGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes, std::size_t relations, std::size_t max_edges) {
    const std::size_t n = 4 + rng() % (max_nodes - 3);
    const std::size_t m = 1 + rng() % max_edges;
    std::vector<Triple> edges;
    for (std::size_t k = 0; k < m; ++k) edges.push_back({rng() % n, rng() % relations, rng() % n});
    return TripleGraph(n, relations, edges);
}

// Direct evaluation of the layer update with explicit neighbour loops.
inline Matrix dense_forward(const TripleGraph& g, const RgcnParams& p) {
    const std::size_t n = g.num_nodes;
    std::vector<std::vector<std::set<std::size_t>>> nbr(g.num_relations, std::vector<std::set<std::size_t>>(n));
    for (const Triple& t : g.triples) {
        nbr[t.r][t.s].insert(t.o);
        nbr[t.r][t.o].insert(t.s);
    }
    Matrix h = p.base;
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
        Matrix next(h.rows(), h.cols());
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::VectorXd acc = p.w_self[l] * h.row(static_cast<Eigen::Index>(i)).transpose();
            for (std::size_t r = 0; r < g.num_relations; ++r) {
                const double c = static_cast<double>(nbr[r][i].size());
                for (std::size_t j : nbr[r][i]) {
                    acc += (1.0 / c) * (p.w[l][r] * h.row(static_cast<Eigen::Index>(j)).transpose());
                }
            }
            if (l + 1 < p.num_layers()) acc = acc.cwiseMax(0.0);
            next.row(static_cast<Eigen::Index>(i)) = acc.transpose();
        }
        h = next;
    }
    return h;
}

inline double quadratic_auc(const std::vector<int>& y, const std::vector<double>& s) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

inline std::vector<TrainingTriple> labelled_batch(const TripleGraph& g, std::uint64_t seed) {
    std::vector<TrainingTriple> pos;
    for (const Triple& t : g.triples) pos.push_back({t, 1});
    auto neg = clakg::rgcn::sample_negatives(pos, g, seed);
    pos.insert(pos.end(), neg.begin(), neg.end());
    return pos;
}

}  // namespace oracle
