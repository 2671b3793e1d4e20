#include "clakg/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "clakg/error.hpp"
#include "clakg/prompts.hpp"
#include "clakg/text.hpp"

namespace clakg::retrieval {

KeyMatch resolve_phrases(const Graph& graph, std::vector<std::string> phrases, std::size_t k) {
    std::map<std::string, NodeId> folded;
    for (NodeId id : graph.nodes_of_kind(NodeKind::KeyInformation)) {
        folded.emplace(text::to_lower_ascii(graph.node(id).payload), id);  // first (lowest id) wins
    }

    KeyMatch match;
    match.k_limit = k;
    for (const std::string& raw : phrases) {
        if (match.resolved.size() >= k) break;
        const std::string_view phrase = text::trim(raw);
        std::optional<NodeId> id = graph.find_key_info(phrase);
        if (!id) {
            auto it = folded.find(text::to_lower_ascii(phrase));
            if (it != folded.end()) id = it->second;
        }
        if (!id) continue;
        if (std::find(match.resolved.begin(), match.resolved.end(), *id) == match.resolved.end()) {
            match.resolved.push_back(*id);
        }
    }
    match.phrases = std::move(phrases);
    return match;
}

KeyMatch match_keys(std::string_view case_text, const llm::Gateway& gateway, const Graph& graph, std::size_t k,
                    std::size_t inventory_budget) {
    std::vector<std::string> inventory;
    for (NodeId id : graph.nodes_of_kind(NodeKind::KeyInformation)) inventory.push_back(graph.node(id).payload);
    if (inventory.empty()) {
        KeyMatch empty;
        empty.k_limit = k;
        return empty;
    }
    std::sort(inventory.begin(), inventory.end());

    std::vector<std::string> phrases;
    for (const auto& chunk : llm::chunk_inventory(inventory, inventory_budget)) {
        auto part = llm::parse_semicolon_list(gateway.complete(llm::prompt_key_matching(case_text, chunk, k)));
        phrases.insert(phrases.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return resolve_phrases(graph, std::move(phrases), k);
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of vectors of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievalResult candidate_articles(std::span<const NodeId> keys, const Graph& graph, const EmbeddingTable& table,
                                   std::size_t q) {
    if (keys.empty()) throw Error(ErrorCode::EmptyKeySet, "no key information nodes to retrieve with");

    std::vector<const std::vector<float>*> key_vecs;
    std::set<NodeId> pool;
    for (NodeId key : keys) {
        if (graph.node(key).kind != NodeKind::KeyInformation) {
            throw Error(ErrorCode::WrongKind, "node " + std::to_string(to_underlying(key)) + " is not KeyInformation");
        }
        key_vecs.push_back(&table.at(key));
        for (NodeId article : graph.neighbors(key, RelationKind::Key, Direction::In)) pool.insert(article);
    }

    RetrievalResult result;
    result.pool_size = pool.size();
    std::vector<CandidateArticle> scored;
    scored.reserve(pool.size());
    for (NodeId article : pool) {
        const std::vector<float>& av = table.at(article);
        CandidateArticle c;
        c.article = article;
        c.number = graph.article_number(article);
        c.per_key_scores.reserve(keys.size());
        for (const auto* kv : key_vecs) {
            const double s = cosine(av, *kv);
            ++result.cosine_calls;
            c.per_key_scores.push_back(s);
            c.cumulative_score += s;
        }
        scored.push_back(std::move(c));
    }

    std::sort(scored.begin(), scored.end(), [](const CandidateArticle& a, const CandidateArticle& b) {
        if (a.cumulative_score != b.cumulative_score) return a.cumulative_score > b.cumulative_score;
        if (a.number != b.number) return text::article_number_less(a.number, b.number);
        return a.article < b.article;
    });
    if (scored.size() > q) scored.resize(q);
    for (CandidateArticle& c : scored) c.precedents = graph.cases_for_article(c.article);
    result.candidates = std::move(scored);
    return result;
}

}  // namespace clakg::retrieval
