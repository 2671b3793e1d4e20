#pragma once
// End-to-end recommendation, closed-loop feedback and follow-up sessions.

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "clakg/embedding.hpp"
#include "clakg/graph.hpp"
#include "clakg/ingest.hpp"
#include "clakg/llm.hpp"
#include "clakg/retrieval.hpp"

namespace clakg::pipeline {

struct Config {
    std::size_t k = retrieval::kDefaultK;
    std::size_t q = retrieval::kDefaultQ;
    std::size_t inventory_budget = retrieval::kInventoryBudget;
    std::size_t max_precedents = 10;  // across all candidates, in candidate order
    std::size_t max_sessions = 1000;  // oldest sessions are dropped beyond this
};

struct RecommendedArticle {
    std::string number;
    bool grounded = false;  // number is among the retrieval candidates

    bool operator==(const RecommendedArticle&) const = default;
};

struct Recommendation {
    std::vector<RecommendedArticle> articles;
    std::string rationale;  // raw model answer
    retrieval::KeyMatch keys;
    retrieval::RetrievalResult retrieval;
    std::string session_id;  // empty when no_match
    bool no_match = false;   // no key information matched, no model answer requested

    std::vector<std::string> numbers() const;
};

struct FeedbackEvent {
    std::string case_text;
    std::string case_name;
    std::string session_date;  // YYYY-MM-DD
    std::string prosecution_reason;
    std::vector<std::string> confirmed_articles;
    std::vector<std::string> corrected_from;
};

struct FeedbackReport {
    NodeId case_id{};
    std::vector<NodeId> created_nodes;
    std::vector<Edge> created_edges;
    GraphStats before;
    GraphStats after;
    // Embeddings are not retrained on feedback; these nodes have none yet.
    std::vector<NodeId> unembedded_nodes;
    bool embeddings_stale = false;
};

// Follow-up transcript. The first two turns are the grounding prompt and the
// recommendation answer.
struct Session {
    std::string id;
    std::string system;
    std::vector<llm::Turn> transcript;
};

class Pipeline {
public:
    // `extractor` is used for case summaries and AgreeWith selection during
    // feedback; calls to it are serialized by the graph's writer lock.
    Pipeline(std::shared_ptr<SharedGraph> graph, std::shared_ptr<const EmbeddingTable> table,
             std::shared_ptr<const llm::Gateway> gateway, std::shared_ptr<Extractor> extractor, Config config = {});

    // EmptyKeySet never escapes: no matched keys produce a no_match result.
    // A model answer without article numbers yields an empty article list.
    // Gateway errors propagate.
    Recommendation recommend(std::string_view case_text);

    // All-or-nothing. The mutation is built on a copy of the graph; `commit`
    // (for example a write to disk) runs on the copy while the writer lock is
    // held, and only when it returns is the copy installed. Errors:
    // UnknownArticle (all offending numbers), MissingField, BadDate,
    // ExtractorFailure, and whatever `commit` throws.
    FeedbackReport apply_feedback(const FeedbackEvent& event,
                                  const std::function<void(const Graph&)>& commit = {});

    // UnknownSession; gateway errors leave the transcript unchanged. Calls on
    // one session run one at a time in arrival order.
    std::string followup(const std::string& session_id, std::string_view question);

    std::optional<Session> session(const std::string& session_id) const;
    std::size_t session_count() const;

    const SharedGraph& graph() const { return *graph_; }
    const EmbeddingTable& table() const { return *table_; }
    const Config& config() const { return config_; }

private:
    struct SessionSlot {
        Session session;
        std::mutex mutex;
        std::condition_variable turn;
        std::uint64_t next_ticket = 0;
        std::uint64_t serving = 0;
    };

    std::shared_ptr<SharedGraph> graph_;
    std::shared_ptr<const EmbeddingTable> table_;
    std::shared_ptr<const llm::Gateway> gateway_;
    std::shared_ptr<Extractor> extractor_;
    Config config_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    std::vector<std::string> session_order_;
    std::mt19937_64 id_rng_;

    std::string open_session(std::string system, std::vector<llm::Turn> transcript);
    std::shared_ptr<SessionSlot> find_slot(const std::string& id) const;
};

// Statute records recovered from a graph, for building an OfflineExtractor.
std::vector<ArticleRecord> article_records(const Graph& graph);

}  // namespace clakg::pipeline
