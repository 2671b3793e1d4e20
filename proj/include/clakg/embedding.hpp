#pragma once
// Trained node and relation vectors, and the bridge from the CLAKG store to
// the RGCN trainer.
//
// File layout:
//   {"provenance": {"h_dim": 16, "seed": 7, "epoch": 31, ..., "node_ids": [...]},
//    "nodes":      {"0": [f, ...], ...},
//    "relations":  {"Key": [f, ...], ...}}
// Vectors are written with 9 significant digits, which round-trips floats.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "clakg/graph.hpp"
#include "clakg/rgcn.hpp"

namespace clakg {

struct EmbeddingProvenance {
    std::size_t h_dim = 0;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;  // selected epoch, 0 = initialisation
    double test_auc = 0.0;
    std::size_t num_layers = 0;
    double learning_rate = 0.0;
    std::size_t num_epochs = 0;
    double test_size = 0.0;
    double negative_ratio = 0.0;
    double init_scale = 0.0;
    std::vector<std::uint64_t> node_ids;  // manifest of embedded nodes, ascending

    bool operator==(const EmbeddingProvenance&) const = default;
};

class EmbeddingTable {
public:
    EmbeddingProvenance provenance;
    std::map<std::uint64_t, std::vector<float>> nodes;
    std::map<std::string, std::vector<float>> relations;

    std::size_t h_dim() const { return provenance.h_dim; }

    const std::vector<float>* find(NodeId id) const;
    // MissingEmbedding naming the node when absent.
    const std::vector<float>& at(NodeId id) const;

    // Graph nodes that have no vector, e.g. cases added after training.
    std::vector<NodeId> missing(const Graph& graph) const;

    void save(const std::filesystem::path& path) const;
    void write(std::ostream& out) const;
    static EmbeddingTable load(const std::filesystem::path& path);
    static EmbeddingTable read(std::istream& in);

    bool operator==(const EmbeddingTable&) const = default;
};

// Index view of the store: node i is the i-th id in ascending order, relation
// r is RelationKind r. `order` receives the id of each index.
rgcn::TripleGraph to_triple_graph(const Graph& graph, std::vector<NodeId>* order = nullptr);

struct TrainedEmbeddings {
    EmbeddingTable table;
    std::vector<rgcn::EpochMetrics> history;
};

TrainedEmbeddings train_embeddings(const Graph& graph, const rgcn::RgcnConfig& config);

}  // namespace clakg
