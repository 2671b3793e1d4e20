#include "clakg/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clakg/error.hpp"

namespace clakg {

namespace {

void write_vector(std::ostream& out, const std::vector<float>& v) {
    char buf[32];
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v[i]));
        if (i) out << ',';
        out << buf;
    }
    out << ']';
}

std::vector<float> read_vector(const nlohmann::json& j, const std::string& what, std::size_t h_dim) {
    if (!j.is_array()) throw Error(ErrorCode::FormatError, what + " is not an array");
    if (j.size() != h_dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    what + " has " + std::to_string(j.size()) + " components, provenance says h_dim " +
                        std::to_string(h_dim));
    }
    std::vector<float> v;
    v.reserve(h_dim);
    for (const auto& x : j) {
        if (!x.is_number()) throw Error(ErrorCode::FormatError, what + " holds a non-number");
        const auto f = static_cast<float>(x.get<double>());
        if (!std::isfinite(f)) throw Error(ErrorCode::FormatError, what + " holds a non-finite value");
        v.push_back(f);
    }
    return v;
}

std::vector<float> to_floats(const rgcn::Matrix& m, Eigen::Index row) {
    std::vector<float> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index d = 0; d < m.cols(); ++d) v[static_cast<std::size_t>(d)] = static_cast<float>(m(row, d));
    return v;
}

}  // namespace

const std::vector<float>* EmbeddingTable::find(NodeId id) const {
    auto it = nodes.find(to_underlying(id));
    return it == nodes.end() ? nullptr : &it->second;
}

const std::vector<float>& EmbeddingTable::at(NodeId id) const {
    if (const auto* v = find(id)) return *v;
    throw Error(ErrorCode::MissingEmbedding, "no embedding for node " + std::to_string(to_underlying(id)));
}

std::vector<NodeId> EmbeddingTable::missing(const Graph& graph) const {
    std::vector<NodeId> out;
    for (const auto& [id, node] : graph.nodes()) {
        if (!nodes.contains(to_underlying(id))) out.push_back(id);
    }
    return out;
}

void EmbeddingTable::write(std::ostream& out) const {
    nlohmann::ordered_json prov;
    prov["h_dim"] = provenance.h_dim;
    prov["seed"] = provenance.seed;
    prov["epoch"] = provenance.epoch;
    prov["test_auc"] = provenance.test_auc;
    prov["num_layers"] = provenance.num_layers;
    prov["learning_rate"] = provenance.learning_rate;
    prov["num_epochs"] = provenance.num_epochs;
    prov["test_size"] = provenance.test_size;
    prov["negative_ratio"] = provenance.negative_ratio;
    prov["init_scale"] = provenance.init_scale;
    prov["node_ids"] = provenance.node_ids;

    out << "{\"provenance\":" << prov.dump() << ",\n\"nodes\":{";
    bool first = true;
    for (const auto& [id, v] : nodes) {
        out << (first ? "\n" : ",\n") << '"' << id << "\":";
        write_vector(out, v);
        first = false;
    }
    out << "},\n\"relations\":{";
    first = true;
    for (const auto& [name, v] : relations) {
        out << (first ? "\n" : ",\n") << nlohmann::json(name).dump() << ':';
        write_vector(out, v);
        first = false;
    }
    out << "}}\n";
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        write(out);
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

EmbeddingTable EmbeddingTable::read(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::FormatError, std::string("embedding file is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("provenance") || !doc.contains("nodes") || !doc.contains("relations")) {
        throw Error(ErrorCode::FormatError, "embedding file needs provenance, nodes and relations");
    }

    EmbeddingTable t;
    const auto& prov = doc["provenance"];
    try {
        t.provenance.h_dim = prov.at("h_dim").get<std::size_t>();
        t.provenance.seed = prov.at("seed").get<std::uint64_t>();
        t.provenance.epoch = prov.at("epoch").get<std::size_t>();
        t.provenance.node_ids = prov.at("node_ids").get<std::vector<std::uint64_t>>();
        t.provenance.test_auc = prov.value("test_auc", 0.0);
        t.provenance.num_layers = prov.value("num_layers", std::size_t{0});
        t.provenance.learning_rate = prov.value("learning_rate", 0.0);
        t.provenance.num_epochs = prov.value("num_epochs", std::size_t{0});
        t.provenance.test_size = prov.value("test_size", 0.0);
        t.provenance.negative_ratio = prov.value("negative_ratio", 0.0);
        t.provenance.init_scale = prov.value("init_scale", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad provenance: ") + e.what());
    }
    if (t.provenance.h_dim == 0) throw Error(ErrorCode::FormatError, "provenance h_dim must be positive");

    if (!doc["nodes"].is_object() || !doc["relations"].is_object()) {
        throw Error(ErrorCode::FormatError, "nodes and relations must be objects");
    }
    for (const auto& [key, value] : doc["nodes"].items()) {
        std::uint64_t id = 0;
        std::istringstream ks(key);
        if (!(ks >> id) || !ks.eof() || std::to_string(id) != key) {
            throw Error(ErrorCode::FormatError, "node key \"" + key + "\" is not a node id");
        }
        t.nodes.emplace(id, read_vector(value, "node " + key, t.provenance.h_dim));
    }
    for (const auto& [name, value] : doc["relations"].items()) {
        t.relations.emplace(name, read_vector(value, "relation " + name, t.provenance.h_dim));
    }

    for (std::uint64_t id : t.provenance.node_ids) {
        if (!t.nodes.contains(id)) {
            throw Error(ErrorCode::FormatError, "node " + std::to_string(id) + " is in the manifest but has no vector");
        }
    }
    if (t.nodes.size() != t.provenance.node_ids.size()) {
        throw Error(ErrorCode::FormatError, "nodes without a manifest entry");
    }
    return t;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read(in);
}

rgcn::TripleGraph to_triple_graph(const Graph& graph, std::vector<NodeId>* order) {
    std::vector<NodeId> ids;
    std::map<NodeId, std::size_t> index;
    for (const auto& [id, node] : graph.nodes()) {
        index.emplace(id, ids.size());
        ids.push_back(id);
    }
    std::vector<rgcn::Triple> triples;
    triples.reserve(graph.edge_count());
    for (const Edge& e : graph.edges()) {
        triples.push_back({index.at(e.head), index_of(e.relation), index.at(e.tail)});
    }
    if (order) *order = ids;
    return rgcn::TripleGraph(ids.size(), kRelationKindCount, std::move(triples));
}

TrainedEmbeddings train_embeddings(const Graph& graph, const rgcn::RgcnConfig& config) {
    std::vector<NodeId> order;
    const rgcn::TripleGraph tg = to_triple_graph(graph, &order);
    rgcn::TrainResult result = rgcn::train(tg, config);

    TrainedEmbeddings out;
    EmbeddingProvenance& p = out.table.provenance;
    p.h_dim = config.h_dim;
    p.seed = config.seed;
    p.epoch = result.selected_epoch;
    p.test_auc = result.selected_test_auc;
    p.num_layers = config.num_layers;
    p.learning_rate = config.learning_rate;
    p.num_epochs = config.num_epochs;
    p.test_size = config.test_size;
    p.negative_ratio = config.negative_ratio;
    p.init_scale = config.init_scale;
    for (std::size_t i = 0; i < order.size(); ++i) {
        p.node_ids.push_back(to_underlying(order[i]));
        out.table.nodes.emplace(to_underlying(order[i]),
                                to_floats(result.node_embeddings, static_cast<Eigen::Index>(i)));
    }
    for (RelationKind rel : kAllRelationKinds) {
        out.table.relations.emplace(std::string(to_string(rel)),
                                    to_floats(result.relation_embeddings, static_cast<Eigen::Index>(index_of(rel))));
    }
    out.history = std::move(result.history);
    return out;
}

}  // namespace clakg
