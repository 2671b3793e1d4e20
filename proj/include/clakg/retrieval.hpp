#pragma once
// Key matching and candidate article ranking.
//
// A new case is matched against the key information inventory through the
// gateway, then every article linked by Key to a matched key is scored by
// the sum of cosine similarities between its embedding and the embedding of
// every matched key. The top q articles carry their precedent cases.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clakg/embedding.hpp"
#include "clakg/graph.hpp"
#include "clakg/llm.hpp"

namespace clakg::retrieval {

inline constexpr std::size_t kDefaultK = 8;
inline constexpr std::size_t kDefaultQ = 5;
inline constexpr std::size_t kInventoryBudget = 48000;  // characters per key-matching request

struct KeyMatch {
    std::vector<std::string> phrases;  // as returned by the matcher, all chunks concatenated
    std::vector<NodeId> resolved;      // KeyInformation nodes, response order, deduplicated, at most k_limit
    std::size_t k_limit = kDefaultK;
};

struct CandidateArticle {
    NodeId article{};
    std::string number;
    double cumulative_score = 0.0;
    std::vector<double> per_key_scores;  // aligned with the KeyMatch's resolved ids
    std::vector<CaseSummary> precedents;
};

struct RetrievalResult {
    std::vector<CandidateArticle> candidates;  // at most q, best first
    std::size_t pool_size = 0;                 // candidates scored before truncation
    std::size_t cosine_calls = 0;
};

// Phrases are resolved exactly after trimming, then case-insensitively.
// Inventories that render larger than `inventory_budget` are split across
// several requests whose answers are concatenated in chunk order. A graph
// with no KeyInformation nodes yields an empty match without a request.
KeyMatch match_keys(std::string_view case_text, const llm::Gateway& gateway, const Graph& graph,
                    std::size_t k = kDefaultK, std::size_t inventory_budget = kInventoryBudget);

// Resolution step of match_keys on its own.
KeyMatch resolve_phrases(const Graph& graph, std::vector<std::string> phrases, std::size_t k = kDefaultK);

// ZeroVector, DimensionMismatch.
double cosine(std::span<const float> a, std::span<const float> b);

// Ties on score go to the smaller article number. EmptyKeySet when `keys`
// is empty; MissingEmbedding names the first unembedded node.
RetrievalResult candidate_articles(std::span<const NodeId> keys, const Graph& graph, const EmbeddingTable& table,
                                   std::size_t q = kDefaultQ);

inline RetrievalResult candidate_articles(const KeyMatch& match, const Graph& graph, const EmbeddingTable& table,
                                          std::size_t q = kDefaultQ) {
    return candidate_articles(match.resolved, graph, table, q);
}

}  // namespace clakg::retrieval
