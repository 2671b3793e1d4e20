#include "clakg/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "clakg/error.hpp"
#include "clakg/text.hpp"

namespace clakg {

namespace {

constexpr std::array<std::string_view, kNodeKindCount> kNodeKindNames = {
    "OriginalArticle", "KeyInformation", "LawArticleId", "CaseName", "SessionTime", "ProsecutionReason", "CaseSpecifics",
};

constexpr std::array<std::string_view, kRelationKindCount> kRelationKindNames = {
    "Key", "Id", "AgreeWith", "ApplicableLaw", "OccurInTime", "Reason", "Detail",
};

bool is_deduplicated(NodeKind kind) { return kind == NodeKind::KeyInformation || kind == NodeKind::LawArticleId; }

void insert_sorted(std::vector<NodeId>& ids, NodeId id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) ids.insert(it, id);
}

const std::string& payload_of(const Graph& g, std::optional<NodeId> id) {
    static const std::string kEmpty;
    return id ? g.node(*id).payload : kEmpty;
}

std::optional<NodeId> first_neighbor(const Graph& g, NodeId id, RelationKind rel) {
    auto ids = g.neighbors(id, rel, Direction::Out);
    if (ids.empty()) return std::nullopt;
    return ids.front();
}

}  // namespace

std::string_view to_string(NodeKind kind) { return kNodeKindNames[index_of(kind)]; }
std::string_view to_string(RelationKind rel) { return kRelationKindNames[index_of(rel)]; }

std::optional<NodeKind> parse_node_kind(std::string_view name) {
    for (std::size_t i = 0; i < kNodeKindNames.size(); ++i)
        if (kNodeKindNames[i] == name) return kAllNodeKinds[i];
    return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view name) {
    for (std::size_t i = 0; i < kRelationKindNames.size(); ++i)
        if (kRelationKindNames[i] == name) return kAllRelationKinds[i];
    return std::nullopt;
}

std::size_t GraphStats::total_nodes() const { return std::accumulate(nodes.begin(), nodes.end(), std::size_t{0}); }
std::size_t GraphStats::total_edges() const { return std::accumulate(edges.begin(), edges.end(), std::size_t{0}); }

NodeId Graph::add_node(NodeKind kind, std::string payload) {
    if (payload.empty()) throw Error(ErrorCode::EmptyPayload, "node payload must be non-empty");
    if (is_deduplicated(kind)) {
        if (auto it = dedup_.find(std::pair{kind, payload}); it != dedup_.end()) return it->second;
    }
    return insert_node(NodeId{next_id_}, kind, std::move(payload));
}

bool Graph::would_dedup(NodeKind kind, std::string_view payload) const {
    return is_deduplicated(kind) && dedup_.contains(std::pair{kind, std::string(payload)});
}

NodeId Graph::insert_node(NodeId id, NodeKind kind, std::string payload) {
    if (is_deduplicated(kind)) dedup_.emplace(std::pair{kind, payload}, id);
    nodes_.emplace(id, Node{id, kind, std::move(payload)});
    next_id_ = std::max(next_id_, to_underlying(id) + 1);
    return id;
}

Edge Graph::add_edge(NodeId head, RelationKind relation, NodeId tail) {
    auto h = nodes_.find(head);
    auto t = nodes_.find(tail);
    if (h == nodes_.end()) throw Error(ErrorCode::UnknownNode, "unknown head node " + std::to_string(to_underlying(head)));
    if (t == nodes_.end()) throw Error(ErrorCode::UnknownNode, "unknown tail node " + std::to_string(to_underlying(tail)));

    const KindPair pair = legal_pair(relation);
    if (h->second.kind != pair.head || t->second.kind != pair.tail) {
        std::ostringstream msg;
        msg << to_string(relation) << " requires " << to_string(pair.head) << "->" << to_string(pair.tail) << ", got "
            << to_string(h->second.kind) << "->" << to_string(t->second.kind);
        throw Error(ErrorCode::SchemaViolation, msg.str());
    }

    const Edge edge{head, relation, tail};
    if (edges_.contains(edge)) return edge;

    if (relation == RelationKind::Id) {
        const Adjacency* adj = adjacency(head, Direction::Out);
        if (adj && !(*adj)[index_of(RelationKind::Id)].empty()) {
            throw Error(ErrorCode::DuplicateIdEdge,
                        "article node " + std::to_string(to_underlying(head)) + " already has a law article id");
        }
    }

    edges_.insert(edge);
    insert_sorted(out_[head][index_of(relation)], tail);
    insert_sorted(in_[tail][index_of(relation)], head);
    return edge;
}

const Node& Graph::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "unknown node " + std::to_string(to_underlying(id)));
    return it->second;
}

const Graph::Adjacency* Graph::adjacency(NodeId id, Direction direction) const {
    const auto& index = direction == Direction::Out ? out_ : in_;
    auto it = index.find(id);
    return it == index.end() ? nullptr : &it->second;
}

std::vector<NodeId> Graph::neighbors(NodeId id, RelationKind relation, Direction direction) const {
    if (!contains(id)) throw Error(ErrorCode::UnknownNode, "unknown node " + std::to_string(to_underlying(id)));
    const Adjacency* adj = adjacency(id, direction);
    if (!adj) return {};
    return (*adj)[index_of(relation)];
}

std::vector<NodeId> Graph::nodes_of_kind(NodeKind kind) const {
    std::vector<NodeId> ids;
    for (const auto& [id, n] : nodes_)
        if (n.kind == kind) ids.push_back(id);
    return ids;
}

std::optional<NodeId> Graph::find_key_info(std::string_view phrase) const {
    auto it = dedup_.find(std::pair{NodeKind::KeyInformation, std::string(text::trim(phrase))});
    if (it == dedup_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeId> Graph::find_law_article_id(std::string_view number) const {
    auto it = dedup_.find(std::pair{NodeKind::LawArticleId, std::string(text::trim(number))});
    if (it == dedup_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeId> Graph::find_article(std::string_view number) const {
    auto law_id = find_law_article_id(number);
    if (!law_id) return std::nullopt;
    auto articles = neighbors(*law_id, RelationKind::Id, Direction::In);
    if (articles.empty()) return std::nullopt;
    return articles.front();
}

std::string Graph::article_number(NodeId article) const {
    auto law_id = first_neighbor(*this, article, RelationKind::Id);
    return law_id ? node(*law_id).payload : std::string{};
}

std::vector<CaseSummary> Graph::cases_for_article(NodeId article) const {
    const Node& n = node(article);
    if (n.kind != NodeKind::OriginalArticle) {
        throw Error(ErrorCode::WrongKind, "node " + std::to_string(to_underlying(article)) + " is a " +
                                              std::string(to_string(n.kind)) + ", not an OriginalArticle");
    }
    std::vector<CaseSummary> out;
    auto law_id = first_neighbor(*this, article, RelationKind::Id);
    if (!law_id) return out;
    for (NodeId case_id : neighbors(*law_id, RelationKind::ApplicableLaw, Direction::In)) {
        out.push_back(CaseSummary{
            case_id,
            node(case_id).payload,
            payload_of(*this, first_neighbor(*this, case_id, RelationKind::OccurInTime)),
            payload_of(*this, first_neighbor(*this, case_id, RelationKind::Reason)),
            payload_of(*this, first_neighbor(*this, case_id, RelationKind::Detail)),
        });
    }
    return out;
}

GraphStats Graph::stats() const {
    GraphStats s;
    for (const auto& [id, n] : nodes_) ++s.nodes[index_of(n.kind)];
    for (const Edge& e : edges_) ++s.edges[index_of(e.relation)];
    return s;
}

std::vector<std::string> Graph::validate() const {
    std::vector<std::string> problems;
    for (NodeId article : nodes_of_kind(NodeKind::OriginalArticle)) {
        const auto ids = neighbors(article, RelationKind::Id, Direction::Out);
        if (ids.size() != 1) {
            problems.push_back("article node " + std::to_string(to_underlying(article)) + " has " +
                               std::to_string(ids.size()) + " Id edges");
        }
    }
    return problems;
}

void Graph::write(std::ostream& out) const {
    for (const auto& [id, n] : nodes_) {
        nlohmann::ordered_json line;
        line["t"] = "node";
        line["id"] = to_underlying(id);
        line["kind"] = to_string(n.kind);
        line["payload"] = n.payload;
        out << line.dump() << '\n';
    }
    for (const Edge& e : edges_) {
        nlohmann::ordered_json line;
        line["t"] = "edge";
        line["head"] = to_underlying(e.head);
        line["rel"] = to_string(e.relation);
        line["tail"] = to_underlying(e.tail);
        out << line.dump() << '\n';
    }
}

void Graph::save(const std::filesystem::path& path) const {
    // Write-then-rename so readers never observe a half-written file.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
        write(out);
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

Graph Graph::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read(in);
}

Graph Graph::read(std::istream& in) {
    Graph g;
    std::string raw;
    std::size_t line_no = 0;

    auto fail = [&](const std::string& what) -> Error { return Error(ErrorCode::FormatError, what, line_no); };

    while (std::getline(in, raw)) {
        ++line_no;
        if (text::trim(raw).empty()) continue;

        nlohmann::json line;
        try {
            line = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error& e) {
            throw fail(std::string("malformed JSON: ") + e.what());
        }
        if (!line.is_object() || !line.contains("t") || !line["t"].is_string()) throw fail("missing record tag \"t\"");

        const std::string tag = line["t"].get<std::string>();
        if (tag == "node") {
            if (!line.contains("id") || !line["id"].is_number_unsigned()) throw fail("node needs an unsigned \"id\"");
            if (!line.contains("kind") || !line["kind"].is_string()) throw fail("node needs a \"kind\"");
            if (!line.contains("payload") || !line["payload"].is_string()) throw fail("node needs a \"payload\"");
            const NodeId id{line["id"].get<std::uint64_t>()};
            const auto kind = parse_node_kind(line["kind"].get<std::string>());
            if (!kind) throw fail("unknown node kind \"" + line["kind"].get<std::string>() + "\"");
            std::string payload = line["payload"].get<std::string>();
            if (payload.empty()) throw fail("empty payload");
            if (g.contains(id)) throw fail("duplicate node id " + std::to_string(to_underlying(id)));
            if (g.would_dedup(*kind, payload)) throw fail("duplicate " + std::string(to_string(*kind)) + " payload");
            g.insert_node(id, *kind, std::move(payload));
        } else if (tag == "edge") {
            if (!line.contains("head") || !line["head"].is_number_unsigned()) throw fail("edge needs an unsigned \"head\"");
            if (!line.contains("tail") || !line["tail"].is_number_unsigned()) throw fail("edge needs an unsigned \"tail\"");
            if (!line.contains("rel") || !line["rel"].is_string()) throw fail("edge needs a \"rel\"");
            const auto rel = parse_relation_kind(line["rel"].get<std::string>());
            if (!rel) throw fail("unknown relation \"" + line["rel"].get<std::string>() + "\"");
            const NodeId head{line["head"].get<std::uint64_t>()};
            const NodeId tail{line["tail"].get<std::uint64_t>()};
            if (!g.contains(head) || !g.contains(tail)) throw fail("edge references an undeclared node");
            try {
                g.add_edge(head, *rel, tail);
            } catch (const Error& e) {
                throw Error(e.code(), e.what(), line_no);
            }
        } else {
            throw fail("unknown record tag \"" + tag + "\"");
        }
    }
    return g;
}

}  // namespace clakg
