#pragma once
// RGCN encoder with a DistMult decoder, trained by link prediction.
//
// Works on an index graph: nodes 0..n-1, relations 0..R-1. The CLAKG adapter
// lives in embedding.hpp. Embeddings are row vectors, so a layer computes
//   Z = sum_r A_r H W_r^T + H W_0^T,   H' = relu(Z)  (identity on the last layer)
// where A_r is the row-normalised neighbourhood matrix of relation r.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace clakg::rgcn {

using Matrix = Eigen::MatrixXd;
using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Triple {
    std::size_t s = 0;
    std::size_t r = 0;
    std::size_t o = 0;

    auto operator<=>(const Triple&) const = default;
};

struct TrainingTriple {
    Triple t;
    int y = 1;

    bool operator==(const TrainingTriple&) const = default;
};

struct TripleGraph {
    std::size_t num_nodes = 0;
    std::size_t num_relations = 0;
    std::vector<Triple> triples;  // sorted, unique

    TripleGraph() = default;
    TripleGraph(std::size_t nodes, std::size_t relations, std::vector<Triple> edges);

    bool contains(const Triple& t) const;
};

struct RgcnConfig {
    std::size_t h_dim = 16;
    std::size_t num_layers = 2;
    double learning_rate = 0.01;
    std::size_t num_epochs = 50;
    double test_size = 0.2;
    double negative_ratio = 1.0;
    std::uint64_t seed = 0;
    double init_scale = 0.1;  // parameters start i.i.d. uniform in [-init_scale, init_scale]

    // ConfigInvalid on anything out of range.
    void validate() const;
};

struct RgcnParams {
    Matrix base;                           // n x d, h^(0)
    std::vector<std::vector<Matrix>> w;    // [layer][relation], d x d
    std::vector<Matrix> w_self;            // [layer], d x d
    Matrix relation;                       // R x d, DistMult diagonals

    static RgcnParams zeros(std::size_t nodes, std::size_t relations, std::size_t h_dim, std::size_t layers);
    static RgcnParams random(std::size_t nodes, std::size_t relations, const RgcnConfig& config, std::mt19937_64& rng);

    std::size_t h_dim() const { return static_cast<std::size_t>(base.cols()); }
    std::size_t num_layers() const { return w_self.size(); }

    // Every parameter block, in a fixed order. Used for updates and for
    // finite-difference checks.
    std::vector<Matrix*> blocks();
    std::vector<const Matrix*> blocks() const;

    bool all_finite() const;
};

// Neighbourhood structure for message passing. N_i^r holds every j joined
// to i by an r-edge in either direction; A_r(i, j) = 1 / |N_i^r|.
struct Propagation {
    std::size_t num_nodes = 0;
    std::vector<Sparse> adjacency;

    Propagation(std::size_t nodes, std::size_t relations, const std::vector<Triple>& edges);
};

// Per-layer values kept for the backward pass.
struct ForwardTrace {
    std::vector<Matrix> inputs;  // H^(l), l = 0..L-1
    std::vector<Matrix> pre;     // Z^(l)
    Matrix output;               // H^(L)
};

// ShapeMismatch if the parameters do not fit the propagation structure.
ForwardTrace forward_trace(const Propagation& prop, const RgcnParams& params);
Matrix forward(const Propagation& prop, const RgcnParams& params);

double score(const Matrix& embeddings, const Matrix& relation, const Triple& t);

// Logistic function and the cross-entropy loss over a labelled batch.
double logistic(double x);
double loss(const std::vector<TrainingTriple>& batch, const std::vector<double>& scores, double negative_ratio);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> scores;
    RgcnParams grad;
};

// Loss of `batch` under `params` and its gradient with respect to every
// parameter block.
LossGrad loss_and_grad(const Propagation& prop, const RgcnParams& params, const std::vector<TrainingTriple>& batch,
                       double negative_ratio);

// Uniform head-or-tail corruption of each positive, resampled until the
// triple is absent from `graph`. `count` defaults to |positives|.
std::vector<TrainingTriple> sample_negatives(const std::vector<TrainingTriple>& positives, const TripleGraph& graph,
                                             std::mt19937_64& rng, std::size_t count);
std::vector<TrainingTriple> sample_negatives(const std::vector<TrainingTriple>& positives, const TripleGraph& graph,
                                             std::uint64_t seed);

// Mann-Whitney AUC, ties counted one half. SingleClass unless both labels occur.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

struct EdgeSplit {
    std::vector<Triple> train;
    std::vector<Triple> test;
};

// Per-relation shuffle; each relation with at least two edges contributes at
// least one edge to each side.
EdgeSplit split_edges(const TripleGraph& graph, double test_size, std::mt19937_64& rng);

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_auc = 0.0;
    double test_auc = 0.0;
};

struct TrainResult {
    Matrix node_embeddings;      // n x d, top-layer output at the selected epoch
    Matrix relation_embeddings;  // R x d
    std::size_t selected_epoch = 0;  // 0 when no epoch ran
    double selected_test_auc = 0.0;
    std::vector<EpochMetrics> history;
    RgcnParams params;  // parameters at the selected epoch
};

// Full-batch gradient descent. Messages flow over training edges only; test
// edges are held out. The returned embeddings are those of the epoch with the
// highest test AUC (earliest on ties).
TrainResult train(const TripleGraph& graph, const RgcnConfig& config);

}  // namespace clakg::rgcn
