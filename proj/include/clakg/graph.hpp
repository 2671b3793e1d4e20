#pragma once
// Case-enhanced law article knowledge graph.
//
// Two sub-graphs share one store:
//   statutes:  OriginalArticle -Key-> KeyInformation
//              OriginalArticle -Id->  LawArticleId
//   cases:     CaseName -OccurInTime-> SessionTime
//              CaseName -Reason->      ProsecutionReason
//              CaseName -Detail->      CaseSpecifics
// and three links between them:
//              CaseName -ApplicableLaw-> LawArticleId
//              CaseName -AgreeWith->     KeyInformation
//
// Every relation has exactly one legal (head kind, tail kind) pair; the
// store rejects anything else. Graph is a plain value type with no internal
// locking. SharedGraph adds the single-writer / multi-reader discipline.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace clakg {

enum class NodeKind : std::uint8_t {
    OriginalArticle,
    KeyInformation,
    LawArticleId,
    CaseName,
    SessionTime,
    ProsecutionReason,
    CaseSpecifics,
};

enum class RelationKind : std::uint8_t {
    Key,
    Id,
    AgreeWith,
    ApplicableLaw,
    OccurInTime,
    Reason,
    Detail,
};

inline constexpr std::size_t kNodeKindCount = 7;
inline constexpr std::size_t kRelationKindCount = 7;

inline constexpr std::array<NodeKind, kNodeKindCount> kAllNodeKinds = {
    NodeKind::OriginalArticle, NodeKind::KeyInformation, NodeKind::LawArticleId, NodeKind::CaseName,
    NodeKind::SessionTime,     NodeKind::ProsecutionReason, NodeKind::CaseSpecifics,
};

inline constexpr std::array<RelationKind, kRelationKindCount> kAllRelationKinds = {
    RelationKind::Key,         RelationKind::Id,     RelationKind::AgreeWith, RelationKind::ApplicableLaw,
    RelationKind::OccurInTime, RelationKind::Reason, RelationKind::Detail,
};

struct KindPair {
    NodeKind head;
    NodeKind tail;
};

constexpr KindPair legal_pair(RelationKind rel) {
    switch (rel) {
        case RelationKind::Key: return {NodeKind::OriginalArticle, NodeKind::KeyInformation};
        case RelationKind::Id: return {NodeKind::OriginalArticle, NodeKind::LawArticleId};
        case RelationKind::AgreeWith: return {NodeKind::CaseName, NodeKind::KeyInformation};
        case RelationKind::ApplicableLaw: return {NodeKind::CaseName, NodeKind::LawArticleId};
        case RelationKind::OccurInTime: return {NodeKind::CaseName, NodeKind::SessionTime};
        case RelationKind::Reason: return {NodeKind::CaseName, NodeKind::ProsecutionReason};
        case RelationKind::Detail: return {NodeKind::CaseName, NodeKind::CaseSpecifics};
    }
    return {NodeKind::OriginalArticle, NodeKind::KeyInformation};
}

std::string_view to_string(NodeKind kind);
std::string_view to_string(RelationKind rel);
std::optional<NodeKind> parse_node_kind(std::string_view name);
std::optional<RelationKind> parse_relation_kind(std::string_view name);

constexpr std::size_t index_of(NodeKind kind) { return static_cast<std::size_t>(kind); }
constexpr std::size_t index_of(RelationKind rel) { return static_cast<std::size_t>(rel); }

// Opaque, monotonically assigned, stable across save/load.
enum class NodeId : std::uint64_t {};

constexpr std::uint64_t to_underlying(NodeId id) { return static_cast<std::uint64_t>(id); }

struct Node {
    NodeId id;
    NodeKind kind;
    std::string payload;
};

struct Edge {
    NodeId head;
    RelationKind relation;
    NodeId tail;

    auto operator<=>(const Edge&) const = default;
};

enum class Direction { Out, In };

struct GraphStats {
    std::array<std::size_t, kNodeKindCount> nodes{};
    std::array<std::size_t, kRelationKindCount> edges{};

    std::size_t node_count(NodeKind kind) const { return nodes[index_of(kind)]; }
    std::size_t edge_count(RelationKind rel) const { return edges[index_of(rel)]; }
    std::size_t total_nodes() const;
    std::size_t total_edges() const;

    bool operator==(const GraphStats&) const = default;
};

struct CaseSummary {
    NodeId case_id;
    std::string name;
    std::string session_time;
    std::string reason;
    std::string specifics;

    bool operator==(const CaseSummary&) const = default;
};

class Graph {
public:
    Graph() = default;

    // KeyInformation and LawArticleId nodes are deduplicated on (kind,
    // payload); re-adding returns the existing id.
    NodeId add_node(NodeKind kind, std::string payload);

    // Reports whether add_node would have created a fresh node.
    bool would_dedup(NodeKind kind, std::string_view payload) const;

    // Duplicate insert is a no-op returning the same edge.
    Edge add_edge(NodeId head, RelationKind relation, NodeId tail);

    bool contains(NodeId id) const { return nodes_.contains(id); }
    bool contains(const Edge& edge) const { return edges_.contains(edge); }
    const Node& node(NodeId id) const;
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    // Sorted by id.
    std::vector<NodeId> neighbors(NodeId id, RelationKind relation, Direction direction) const;

    std::vector<NodeId> nodes_of_kind(NodeKind kind) const;
    std::optional<NodeId> find_key_info(std::string_view phrase) const;
    std::optional<NodeId> find_law_article_id(std::string_view number) const;

    // OriginalArticle node whose Id edge points at the given article number.
    std::optional<NodeId> find_article(std::string_view number) const;

    // Article number of an OriginalArticle via its Id edge, empty if none.
    std::string article_number(NodeId article) const;

    std::vector<CaseSummary> cases_for_article(NodeId article) const;

    GraphStats stats() const;

    // Structural invariants that only hold once construction is complete,
    // e.g. every OriginalArticle has exactly one Id edge. Empty if valid.
    std::vector<std::string> validate() const;

    // Ordered iteration: nodes by id, edges lexicographically.
    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    const std::set<Edge>& edges() const { return edges_; }

    void save(const std::filesystem::path& path) const;
    void write(std::ostream& out) const;
    static Graph load(const std::filesystem::path& path);
    static Graph read(std::istream& in);

private:
    using Adjacency = std::array<std::vector<NodeId>, kRelationKindCount>;

    std::map<NodeId, Node> nodes_;
    std::set<Edge> edges_;
    std::unordered_map<NodeId, Adjacency> out_;
    std::unordered_map<NodeId, Adjacency> in_;
    std::map<std::pair<NodeKind, std::string>, NodeId, std::less<>> dedup_;
    std::uint64_t next_id_ = 0;

    NodeId insert_node(NodeId id, NodeKind kind, std::string payload);
    const Adjacency* adjacency(NodeId id, Direction direction) const;
};

// Single-writer / multi-reader wrapper. Readers run concurrently; writers
// are exclusive, so a multi-step mutation inside one write() is atomic with
// respect to readers.
class SharedGraph {
public:
    SharedGraph() = default;
    explicit SharedGraph(Graph graph) : graph_(std::move(graph)) {}

    template <typename F>
    decltype(auto) read(F&& f) const {
        std::shared_lock lock(mutex_);
        return std::forward<F>(f)(static_cast<const Graph&>(graph_));
    }

    template <typename F>
    decltype(auto) write(F&& f) {
        std::unique_lock lock(mutex_);
        return std::forward<F>(f)(graph_);
    }

    Graph snapshot() const {
        std::shared_lock lock(mutex_);
        return graph_;
    }

    void replace(Graph graph) {
        std::unique_lock lock(mutex_);
        graph_ = std::move(graph);
    }

private:
    mutable std::shared_mutex mutex_;
    Graph graph_;
};

}  // namespace clakg
