#pragma once
// Seeded synthetic graphs shared by the unit and acceptance tests.

#include <random>
#include <set>

#include "clakg/rgcn.hpp"

namespace synthetic {

inline constexpr std::size_t kBlockNodes = 60;
inline constexpr std::size_t kBlockEdges = 300;

inline bool same_block(std::size_t a, std::size_t b) { return (a < kBlockNodes / 2) == (b < kBlockNodes / 2); }

// Two planted blocks of 30 nodes. Relation 0 joins nodes of the same block,
// relation 1 joins nodes of different blocks; 150 distinct edges each,
// no self-loops.
inline clakg::rgcn::TripleGraph two_block(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> node(0, kBlockNodes - 1);
    std::set<clakg::rgcn::Triple> edges;
    for (std::size_t r = 0; r < 2; ++r) {
        std::size_t count = 0;
        while (count < kBlockEdges / 2) {
            const std::size_t s = node(rng), o = node(rng);
            if (s == o || same_block(s, o) != (r == 0)) continue;
            if (edges.insert({s, r, o}).second) ++count;
        }
    }
    return clakg::rgcn::TripleGraph(kBlockNodes, 2, {edges.begin(), edges.end()});
}

// Score from the planted rule alone: 1 when the pair fits its relation.
inline double block_rule(const clakg::rgcn::Triple& t) { return same_block(t.s, t.o) == (t.r == 0) ? 1.0 : 0.0; }

}  // namespace synthetic
