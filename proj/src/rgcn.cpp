#include "clakg/rgcn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "clakg/error.hpp"

namespace clakg::rgcn {

namespace {

constexpr int kRandomRetries = 64;

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void check_shapes(const Propagation& prop, const RgcnParams& params) {
    const auto n = static_cast<Eigen::Index>(prop.num_nodes);
    const auto d = params.base.cols();
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ShapeMismatch, what); };
    if (params.base.rows() != n) {
        fail("base embeddings have " + std::to_string(params.base.rows()) + " rows for " + std::to_string(n) +
             " nodes");
    }
    if (params.w.size() != params.w_self.size()) fail("layer count differs between relation and self weights");
    if (params.w.empty()) fail("at least one layer is required");
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        if (params.w[l].size() != prop.adjacency.size()) {
            fail("layer " + std::to_string(l) + " has " + std::to_string(params.w[l].size()) + " relation weights for " +
                 std::to_string(prop.adjacency.size()) + " relations");
        }
        for (const Matrix& m : params.w[l]) {
            if (m.rows() != d || m.cols() != d) fail("relation weight is not h_dim x h_dim");
        }
        if (params.w_self[l].rows() != d || params.w_self[l].cols() != d) fail("self weight is not h_dim x h_dim");
    }
    if (params.relation.rows() != static_cast<Eigen::Index>(prop.adjacency.size()) || params.relation.cols() != d) {
        fail("relation vectors are not R x h_dim");
    }
}

std::size_t scaled_count(std::size_t positives, double ratio) {
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(positives)));
}

}  // namespace

TripleGraph::TripleGraph(std::size_t nodes, std::size_t relations, std::vector<Triple> edges)
    : num_nodes(nodes), num_relations(relations), triples(std::move(edges)) {
    for (const Triple& t : triples) {
        if (t.s >= nodes || t.o >= nodes || t.r >= relations) {
            throw Error(ErrorCode::ShapeMismatch, "triple (" + std::to_string(t.s) + ", " + std::to_string(t.r) + ", " +
                                                      std::to_string(t.o) + ") is out of range");
        }
    }
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
}

bool TripleGraph::contains(const Triple& t) const { return std::binary_search(triples.begin(), triples.end(), t); }

void RgcnConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
    if (h_dim < 1) fail("h_dim must be at least 1");
    if (num_layers < 1) fail("num_layers must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
    if (!(test_size > 0.0 && test_size < 1.0)) fail("test_size must lie strictly between 0 and 1");
    if (!(negative_ratio > 0.0) || !std::isfinite(negative_ratio)) fail("negative_ratio must be positive");
    if (!(init_scale > 0.0) || !std::isfinite(init_scale)) fail("init_scale must be positive");
}

RgcnParams RgcnParams::zeros(std::size_t nodes, std::size_t relations, std::size_t h_dim, std::size_t layers) {
    const auto n = static_cast<Eigen::Index>(nodes);
    const auto d = static_cast<Eigen::Index>(h_dim);
    RgcnParams p;
    p.base = Matrix::Zero(n, d);
    p.w.assign(layers, std::vector<Matrix>(relations, Matrix::Zero(d, d)));
    p.w_self.assign(layers, Matrix::Zero(d, d));
    p.relation = Matrix::Zero(static_cast<Eigen::Index>(relations), d);
    return p;
}

RgcnParams RgcnParams::random(std::size_t nodes, std::size_t relations, const RgcnConfig& config,
                              std::mt19937_64& rng) {
    RgcnParams p = zeros(nodes, relations, config.h_dim, config.num_layers);
    std::uniform_real_distribution<double> dist(-config.init_scale, config.init_scale);
    for (Matrix* m : p.blocks()) {
        for (Eigen::Index j = 0; j < m->cols(); ++j) {
            for (Eigen::Index i = 0; i < m->rows(); ++i) (*m)(i, j) = dist(rng);
        }
    }
    return p;
}

std::vector<Matrix*> RgcnParams::blocks() {
    std::vector<Matrix*> out{&base};
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (Matrix& m : w[l]) out.push_back(&m);
        out.push_back(&w_self[l]);
    }
    out.push_back(&relation);
    return out;
}

std::vector<const Matrix*> RgcnParams::blocks() const {
    auto mutable_blocks = const_cast<RgcnParams*>(this)->blocks();
    return {mutable_blocks.begin(), mutable_blocks.end()};
}

bool RgcnParams::all_finite() const {
    for (const Matrix* m : blocks()) {
        if (!m->allFinite()) return false;
    }
    return true;
}

Propagation::Propagation(std::size_t nodes, std::size_t relations, const std::vector<Triple>& edges)
    : num_nodes(nodes), adjacency(relations) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(relations);
    for (const Triple& t : edges) {
        if (t.s >= nodes || t.o >= nodes || t.r >= relations) {
            throw Error(ErrorCode::ShapeMismatch, "edge outside the propagation structure");
        }
        pairs[t.r].emplace_back(t.s, t.o);
        pairs[t.r].emplace_back(t.o, t.s);
    }
    const auto n = static_cast<Eigen::Index>(nodes);
    for (std::size_t r = 0; r < relations; ++r) {
        auto& pr = pairs[r];
        std::sort(pr.begin(), pr.end());
        pr.erase(std::unique(pr.begin(), pr.end()), pr.end());
        std::vector<std::size_t> degree(nodes, 0);
        for (const auto& [i, j] : pr) ++degree[i];
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(pr.size());
        for (const auto& [i, j] : pr) {
            entries.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0 / static_cast<double>(degree[i]));
        }
        adjacency[r].resize(n, n);
        adjacency[r].setFromTriplets(entries.begin(), entries.end());
    }
}

ForwardTrace forward_trace(const Propagation& prop, const RgcnParams& params) {
    check_shapes(prop, params);
    ForwardTrace trace;
    Matrix h = params.base;
    const std::size_t layers = params.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = h * params.w_self[l].transpose();
        for (std::size_t r = 0; r < prop.adjacency.size(); ++r) {
            z.noalias() += (prop.adjacency[r] * h) * params.w[l][r].transpose();
        }
        trace.inputs.push_back(std::move(h));
        h = l + 1 < layers ? Matrix(z.cwiseMax(0.0)) : z;
        trace.pre.push_back(std::move(z));
    }
    trace.output = std::move(h);
    return trace;
}

Matrix forward(const Propagation& prop, const RgcnParams& params) { return forward_trace(prop, params).output; }

double score(const Matrix& embeddings, const Matrix& relation, const Triple& t) {
    const auto s = static_cast<Eigen::Index>(t.s);
    const auto o = static_cast<Eigen::Index>(t.o);
    const auto r = static_cast<Eigen::Index>(t.r);
    if (s >= embeddings.rows() || o >= embeddings.rows()) {
        throw Error(ErrorCode::UnknownNode, "no embedding for node " + std::to_string(std::max(t.s, t.o)));
    }
    if (r >= relation.rows()) throw Error(ErrorCode::UnknownNode, "no embedding for relation " + std::to_string(t.r));
    double f = 0.0;
    // The endpoint product comes first so that swapping s and o is exact.
    for (Eigen::Index d = 0; d < embeddings.cols(); ++d) f += (embeddings(s, d) * embeddings(o, d)) * relation(r, d);
    return f;
}

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double loss(const std::vector<TrainingTriple>& batch, const std::vector<double>& scores, double negative_ratio) {
    if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
    if (batch.size() != scores.size()) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(batch.size()) + " triples but " +
                                                  std::to_string(scores.size()) + " scores");
    }
    const auto positives = static_cast<std::size_t>(
        std::count_if(batch.begin(), batch.end(), [](const TrainingTriple& t) { return t.y == 1; }));
    if (positives == 0) throw Error(ErrorCode::EmptyBatch, "batch has no positive triples");
    double sum = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        // -log l(f) = softplus(-f), -log(1 - l(f)) = softplus(f)
        sum += batch[k].y == 1 ? softplus(-scores[k]) : softplus(scores[k]);
    }
    return sum / ((1.0 + negative_ratio) * static_cast<double>(positives));
}

LossGrad loss_and_grad(const Propagation& prop, const RgcnParams& params, const std::vector<TrainingTriple>& batch,
                       double negative_ratio) {
    const ForwardTrace trace = forward_trace(prop, params);
    const Matrix& e = trace.output;

    LossGrad out;
    out.scores.reserve(batch.size());
    for (const TrainingTriple& t : batch) out.scores.push_back(score(e, params.relation, t.t));
    out.loss = loss(batch, out.scores, negative_ratio);

    const auto positives = static_cast<double>(
        std::count_if(batch.begin(), batch.end(), [](const TrainingTriple& t) { return t.y == 1; }));
    const double norm = (1.0 + negative_ratio) * positives;

    out.grad = RgcnParams::zeros(prop.num_nodes, prop.adjacency.size(), params.h_dim(), params.num_layers());
    Matrix dz = Matrix::Zero(e.rows(), e.cols());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const Triple& t = batch[k].t;
        const double g = (logistic(out.scores[k]) - batch[k].y) / norm;
        const auto s = static_cast<Eigen::Index>(t.s);
        const auto o = static_cast<Eigen::Index>(t.o);
        const auto r = static_cast<Eigen::Index>(t.r);
        dz.row(s) += g * params.relation.row(r).cwiseProduct(e.row(o));
        dz.row(o) += g * params.relation.row(r).cwiseProduct(e.row(s));
        out.grad.relation.row(r) += g * e.row(s).cwiseProduct(e.row(o));
    }

    for (std::size_t l = params.num_layers(); l-- > 0;) {
        const Matrix& h = trace.inputs[l];
        out.grad.w_self[l].noalias() = dz.transpose() * h;
        Matrix dh = dz * params.w_self[l];
        for (std::size_t r = 0; r < prop.adjacency.size(); ++r) {
            const Matrix ah = prop.adjacency[r] * h;
            out.grad.w[l][r].noalias() = dz.transpose() * ah;
            dh.noalias() += prop.adjacency[r].transpose() * (dz * params.w[l][r]);
        }
        if (l == 0) {
            out.grad.base = std::move(dh);
        } else {
            dz = dh.cwiseProduct((trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

std::vector<TrainingTriple> sample_negatives(const std::vector<TrainingTriple>& positives, const TripleGraph& graph,
                                             std::mt19937_64& rng, std::size_t count) {
    if (positives.empty()) return {};
    if (graph.num_nodes == 0) throw Error(ErrorCode::SaturatedGraph, "no nodes to corrupt with");
    std::uniform_int_distribution<std::size_t> node(0, graph.num_nodes - 1);
    std::bernoulli_distribution coin(0.5);

    std::vector<TrainingTriple> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const Triple& base = positives[k % positives.size()].t;
        std::optional<Triple> found;
        for (int attempt = 0; attempt < kRandomRetries && !found; ++attempt) {
            Triple c = base;
            (coin(rng) ? c.s : c.o) = node(rng);
            if (!graph.contains(c)) found = c;
        }
        if (!found) {
            // Retry budget spent: enumerate the whole corruption space instead.
            std::vector<Triple> absent;
            for (std::size_t v = 0; v < graph.num_nodes; ++v) {
                Triple head = base, tail = base;
                head.s = v;
                tail.o = v;
                if (!graph.contains(head)) absent.push_back(head);
                if (!graph.contains(tail)) absent.push_back(tail);
            }
            if (absent.empty()) {
                throw Error(ErrorCode::SaturatedGraph, "every corruption of (" + std::to_string(base.s) + ", " +
                                                           std::to_string(base.r) + ", " + std::to_string(base.o) +
                                                           ") is already an edge");
            }
            std::uniform_int_distribution<std::size_t> pick(0, absent.size() - 1);
            found = absent[pick(rng)];
        }
        out.push_back({*found, 0});
    }
    return out;
}

std::vector<TrainingTriple> sample_negatives(const std::vector<TrainingTriple>& positives, const TripleGraph& graph,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_negatives(positives, graph, rng, positives.size());
}

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw Error(ErrorCode::ShapeMismatch, "labels and scores differ in length");
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of positive ranks, with tied groups sharing their mean rank.
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum += mean_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClass, "AUC needs both positive and negative labels");
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

EdgeSplit split_edges(const TripleGraph& graph, double test_size, std::mt19937_64& rng) {
    std::vector<std::vector<Triple>> by_relation(graph.num_relations);
    for (const Triple& t : graph.triples) by_relation[t.r].push_back(t);
    EdgeSplit split;
    for (auto& edges : by_relation) {
        std::shuffle(edges.begin(), edges.end(), rng);
        std::size_t n_test = 0;
        if (edges.size() >= 2) {
            n_test = static_cast<std::size_t>(std::llround(test_size * static_cast<double>(edges.size())));
            n_test = std::clamp<std::size_t>(n_test, 1, edges.size() - 1);
        }
        split.test.insert(split.test.end(), edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), edges.begin() + static_cast<std::ptrdiff_t>(n_test), edges.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

TrainResult train(const TripleGraph& graph, const RgcnConfig& config) {
    config.validate();
    if (graph.triples.empty()) throw Error(ErrorCode::ConfigInvalid, "cannot train on a graph without edges");

    std::mt19937_64 rng(config.seed);
    const EdgeSplit split = split_edges(graph, config.test_size, rng);
    if (split.test.empty()) {
        throw Error(ErrorCode::ConfigInvalid, "test split is empty; every relation has fewer than two edges");
    }

    RgcnParams params = RgcnParams::random(graph.num_nodes, graph.num_relations, config, rng);
    const Propagation prop(graph.num_nodes, graph.num_relations, split.train);

    std::vector<TrainingTriple> train_pos, test_batch;
    for (const Triple& t : split.train) train_pos.push_back({t, 1});
    for (const Triple& t : split.test) test_batch.push_back({t, 1});
    const auto test_neg = sample_negatives(test_batch, graph, rng, scaled_count(test_batch.size(), config.negative_ratio));
    test_batch.insert(test_batch.end(), test_neg.begin(), test_neg.end());

    auto labels_of = [](const std::vector<TrainingTriple>& batch) {
        std::vector<int> y;
        y.reserve(batch.size());
        for (const auto& t : batch) y.push_back(t.y);
        return y;
    };
    const std::vector<int> test_labels = labels_of(test_batch);
    auto scores_of = [](const Matrix& e, const Matrix& rel, const std::vector<TrainingTriple>& batch) {
        std::vector<double> s;
        s.reserve(batch.size());
        for (const auto& t : batch) s.push_back(score(e, rel, t.t));
        return s;
    };

    TrainResult result;
    result.params = params;
    result.node_embeddings = forward(prop, params);
    result.relation_embeddings = params.relation;

    bool have_best = false;
    for (std::size_t epoch = 1; epoch <= config.num_epochs; ++epoch) {
        std::vector<TrainingTriple> batch = train_pos;
        const auto negs = sample_negatives(train_pos, graph, rng, scaled_count(train_pos.size(), config.negative_ratio));
        batch.insert(batch.end(), negs.begin(), negs.end());

        LossGrad lg = loss_and_grad(prop, params, batch, config.negative_ratio);
        if (!std::isfinite(lg.loss)) {
            throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch));
        }
        auto dst = params.blocks();
        auto grad = lg.grad.blocks();
        for (std::size_t b = 0; b < dst.size(); ++b) *dst[b] -= config.learning_rate * *grad[b];
        if (!params.all_finite()) {
            throw Error(ErrorCode::NonFiniteLoss, "parameters became non-finite at epoch " + std::to_string(epoch));
        }

        const Matrix e = forward(prop, params);
        if (!e.allFinite()) {
            throw Error(ErrorCode::NonFiniteLoss, "embeddings became non-finite at epoch " + std::to_string(epoch));
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = lg.loss;
        m.train_auc = auc(labels_of(batch), scores_of(e, params.relation, batch));
        m.test_auc = auc(test_labels, scores_of(e, params.relation, test_batch));
        result.history.push_back(m);

        if (!have_best || m.test_auc > result.selected_test_auc) {
            have_best = true;
            result.selected_epoch = epoch;
            result.selected_test_auc = m.test_auc;
            result.node_embeddings = e;
            result.relation_embeddings = params.relation;
            result.params = params;
        }
    }
    return result;
}

}  // namespace clakg::rgcn
