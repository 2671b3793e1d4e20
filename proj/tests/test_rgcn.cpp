#include <cmath>
#include <functional>
#include <random>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "clakg/error.hpp"
#include "clakg/rgcn.hpp"
#include "rgcn_oracle.hpp"
#include "synthetic.hpp"

using namespace clakg;
using namespace clakg::rgcn;
using Catch::Matchers::WithinAbs;

using namespace oracle;

TEST_CASE("forward matches dense evaluation on random graphs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const TripleGraph g = random_graph(rng, 15, 3, 40);
        RgcnConfig cfg;
        cfg.h_dim = 5;
        cfg.init_scale = 1.0;
        const RgcnParams p = RgcnParams::random(g.num_nodes, g.num_relations, cfg, rng);
        const Matrix sparse = forward(Propagation(g.num_nodes, g.num_relations, g.triples), p);
        const Matrix dense = dense_forward(g, p);
        CHECK((sparse - dense).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("forward on hand-sized graphs") {
    // 3 nodes, node 0 joined to 1 and 2 under relation 0; one layer, h_dim 1.
    RgcnParams p = RgcnParams::zeros(3, 1, 1, 1);
    p.base << 1.0, 2.0, 4.0;
    p.w[0][0](0, 0) = 3.0;
    p.w_self[0](0, 0) = 0.5;
    const Propagation prop(3, 1, {{0, 0, 1}, {0, 0, 2}});
    const Matrix out = forward(prop, p);
    // node 0: 0.5*1 + 3*(2+4)/2; node 1: 0.5*2 + 3*1; node 2: 0.5*4 + 3*1
    CHECK_THAT(out(0, 0), WithinAbs(9.5, 1e-12));
    CHECK_THAT(out(1, 0), WithinAbs(4.0, 1e-12));
    CHECK_THAT(out(2, 0), WithinAbs(5.0, 1e-12));

    SECTION("isolated node keeps only the self term") {
        RgcnConfig cfg;
        cfg.h_dim = 3;
        cfg.init_scale = 1.0;
        std::mt19937_64 rng(1);
        const RgcnParams q = RgcnParams::random(4, 2, cfg, rng);
        const Matrix e = forward(Propagation(4, 2, {{0, 1, 1}}), q);
        Eigen::RowVectorXd h = q.base.row(3);
        h = (h * q.w_self[0].transpose()).cwiseMax(0.0);
        h = h * q.w_self[1].transpose();
        CHECK((e.row(3) - h).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("zero parameters give zero output") {
        const RgcnParams z = RgcnParams::zeros(5, 2, 4, 2);
        CHECK(forward(Propagation(5, 2, {{0, 0, 1}, {2, 1, 3}}), z).isZero(0.0));
    }
    SECTION("shape mismatch") {
        const RgcnParams z = RgcnParams::zeros(4, 2, 4, 2);
        try {
            forward(Propagation(5, 2, {}), z);
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
}

TEST_CASE("DistMult score") {
    Matrix e(2, 2), rel(1, 2);
    e << 1, 0, 1, 1;
    rel << 2, 3;
    CHECK(score(e, rel, {0, 0, 1}) == 2.0);
    CHECK(score(e, Matrix::Zero(1, 2), {0, 0, 1}) == 0.0);
    CHECK_THROWS_AS(score(e, rel, {0, 0, 5}), Error);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
        Matrix x = Matrix::NullaryExpr(6, 4, [&] { return nd(rng); });
        Matrix r = Matrix::NullaryExpr(2, 4, [&] { return nd(rng); });
        const Triple t{rng() % 6, rng() % 2, rng() % 6};
        CHECK(score(x, r, t) == score(x, r, {t.o, t.r, t.s}));
    }
}

TEST_CASE("loss values") {
    CHECK(logistic(0.0) == 0.5);
    // one positive with f = 0: -(1/2) log(0.5)
    CHECK_THAT(loss({{{0, 0, 1}, 1}}, {0.0}, 1.0), WithinAbs(-0.5 * std::log(0.5), 1e-15));
    CHECK_THAT(loss({{{0, 0, 1}, 1}}, {0.0}, 1.0), WithinAbs(0.3466, 1e-4));
    CHECK(loss({{{0, 0, 1}, 1}}, {800.0}, 1.0) < 1e-300);
    CHECK(std::isfinite(loss({{{0, 0, 1}, 1}, {{0, 0, 2}, 0}}, {-800.0, 800.0}, 1.0)));

    CHECK_THROWS_AS(loss({}, {}, 1.0), Error);
    CHECK_THROWS_AS(loss({{{0, 0, 1}, 0}}, {0.0}, 1.0), Error);
    CHECK_THROWS_AS(loss({{{0, 0, 1}, 1}}, {0.0, 1.0}, 1.0), Error);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TrainingTriple> batch{{{0, 0, 1}, 1}};
        std::vector<double> s{nd(rng)};
        for (int k = 0; k < 5; ++k) {
            batch.push_back({{0, 0, 2}, static_cast<int>(rng() % 2)});
            s.push_back(nd(rng));
        }
        CHECK(loss(batch, s, 1.0) >= 0.0);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(21);
    const double h = 1e-4;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const TripleGraph g = random_graph(rng, 12, 3, 20);
        RgcnConfig cfg;
        cfg.h_dim = 4;
        cfg.init_scale = 0.5;
        RgcnParams p = RgcnParams::random(g.num_nodes, g.num_relations, cfg, rng);
        const Propagation prop(g.num_nodes, g.num_relations, g.triples);
        const auto batch = labelled_batch(g, rng());
        const LossGrad lg = loss_and_grad(prop, p, batch, 1.0);

        auto eval = [&](const RgcnParams& q) {
            const Matrix e = forward(prop, q);
            std::vector<double> s;
            for (const auto& t : batch) s.push_back(score(e, q.relation, t.t));
            return loss(batch, s, 1.0);
        };
        CHECK_THAT(eval(p), WithinAbs(lg.loss, 1e-12));

        auto blocks = p.blocks();
        auto grads = lg.grad.blocks();
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            for (Eigen::Index i = 0; i < blocks[b]->size(); ++i) {
                double& x = blocks[b]->data()[i];
                const double saved = x;
                x = saved + h;
                const double up = eval(p);
                x = saved - h;
                const double down = eval(p);
                x = saved;
                const double numeric = (up - down) / (2 * h);
                const double analytic = grads[b]->data()[i];
                const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
                worst = std::max(worst, rel);
            }
        }
    }
    INFO("max relative error " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("negative sampling") {
    std::mt19937_64 rng(4);
    const TripleGraph g = random_graph(rng, 30, 2, 100);
    std::vector<TrainingTriple> pos;
    for (const Triple& t : g.triples) pos.push_back({t, 1});
    const auto neg = sample_negatives(pos, g, 99);
    REQUIRE(neg.size() == pos.size());
    for (std::size_t k = 0; k < neg.size(); ++k) {
        CHECK(neg[k].y == 0);
        CHECK_FALSE(g.contains(neg[k].t));
        // exactly one of head or tail replaced; relation kept
        CHECK(neg[k].t.r == pos[k].t.r);
        CHECK((neg[k].t.s == pos[k].t.s || neg[k].t.o == pos[k].t.o));
    }
    CHECK(sample_negatives(pos, g, 99) == neg);
    CHECK(sample_negatives(pos, g, 100) != neg);

    std::mt19937_64 r2(1);
    CHECK(sample_negatives(pos, g, r2, 3 * pos.size()).size() == 3 * pos.size());
}

TEST_CASE("saturated corruption space") {
    // All four pairs over two nodes exist, so nothing can be corrupted.
    const TripleGraph full(2, 1, {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}});
    std::vector<TrainingTriple> pos{{{0, 0, 1}, 1}};
    try {
        sample_negatives(pos, full, 1);
        FAIL("expected SaturatedGraph");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SaturatedGraph);
    }

    // Exactly one absent corruption of (0,0,1) exists in a three-node graph;
    // enumerate the corruption space independently and compare.
    std::vector<Triple> edges;
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t o = 0; o < 3; ++o) edges.push_back({s, 0, o});
    edges.erase(std::find(edges.begin(), edges.end(), Triple{2, 0, 1}));
    const TripleGraph nearly(3, 1, edges);
    std::set<Triple> absent;
    for (std::size_t v = 0; v < 3; ++v) {
        for (Triple c : {Triple{v, 0, 1}, Triple{0, 0, v}})
            if (!nearly.contains(c)) absent.insert(c);
    }
    REQUIRE(absent.size() == 1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto neg = sample_negatives(pos, nearly, seed);
        REQUIRE(neg.size() == 1);
        CHECK(neg[0].t == *absent.begin());
    }
}

TEST_CASE("AUC") {
    CHECK(auc({1, 0}, {0.9, 0.1}) == 1.0);
    CHECK(auc({1, 0}, {0.5, 0.5}) == 0.5);
    CHECK(auc({1, 0}, {0.1, 0.9}) == 0.0);
    CHECK_THROWS_AS(auc({1, 1}, {0.1, 0.9}), Error);
    CHECK_THROWS_AS(auc({0}, {0.1}), Error);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<int> y;
        std::vector<double> s;
        for (int i = 0; i < 60; ++i) {
            y.push_back(static_cast<int>(rng() % 2));
            s.push_back(std::floor(u(rng) * 7));  // plenty of ties
        }
        y[0] = 1;
        y[1] = 0;
        CHECK_THAT(auc(y, s), WithinAbs(quadratic_auc(y, s), 1e-12));
    }
    std::vector<int> y(1000);
    std::vector<double> s(1000);
    for (int i = 0; i < 1000; ++i) {
        y[i] = i % 2;
        s[i] = u(rng);
    }
    const double a = auc(y, s);
    CHECK_THAT(a, WithinAbs(quadratic_auc(y, s), 1e-12));
    CHECK_THAT(a, WithinAbs(0.5, 0.05));
}

TEST_CASE("stratified edge split") {
    std::mt19937_64 rng(3);
    std::vector<Triple> edges;
    for (std::size_t i = 0; i < 40; ++i) edges.push_back({i, i % 4 == 0 ? 1u : 0u, (i + 1) % 40});
    edges.push_back({0, 2, 5});
    const TripleGraph g(40, 3, edges);
    const EdgeSplit split = split_edges(g, 0.2, rng);
    CHECK(split.train.size() + split.test.size() == g.triples.size());
    std::set<std::size_t> test_rel, train_rel;
    for (const auto& t : split.test) test_rel.insert(t.r);
    for (const auto& t : split.train) train_rel.insert(t.r);
    CHECK(test_rel == std::set<std::size_t>{0, 1});
    CHECK(train_rel == std::set<std::size_t>{0, 1, 2});
    CHECK(split.test.size() == 6 + 2);
}

TEST_CASE("training") {
    const TripleGraph g = synthetic::two_block(7);
    RgcnConfig cfg;
    cfg.seed = 7;
    cfg.h_dim = 8;
    cfg.num_epochs = 20;

    SECTION("deterministic") {
        const TrainResult a = train(g, cfg);
        const TrainResult b = train(g, cfg);
        REQUIRE(a.history.size() == 20);
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            CHECK(a.history[i].train_loss == b.history[i].train_loss);
            CHECK(a.history[i].test_auc == b.history[i].test_auc);
        }
        CHECK(a.node_embeddings == b.node_embeddings);
    }
    SECTION("selected epoch holds the best test AUC") {
        cfg.learning_rate = 0.5;
        cfg.init_scale = 0.5;
        const TrainResult r = train(g, cfg);
        double best = 0.0;
        for (const auto& m : r.history) {
            best = std::max(best, m.test_auc);
            CHECK(m.train_auc >= 0.0);
            CHECK(m.train_auc <= 1.0);
            CHECK(m.train_loss >= 0.0);
        }
        CHECK(r.selected_test_auc == best);
        CHECK(r.history[r.selected_epoch - 1].test_auc == best);
        std::mt19937_64 rng(cfg.seed);
        const EdgeSplit split = split_edges(g, cfg.test_size, rng);
        CHECK(forward(Propagation(g.num_nodes, g.num_relations, split.train), r.params) == r.node_embeddings);
    }
    SECTION("zero epochs returns the initialisation") {
        cfg.num_epochs = 0;
        const TrainResult r = train(g, cfg);
        CHECK(r.history.empty());
        CHECK(r.selected_epoch == 0);
        std::mt19937_64 rng(cfg.seed);
        split_edges(g, cfg.test_size, rng);
        const RgcnParams init = RgcnParams::random(g.num_nodes, g.num_relations, cfg, rng);
        CHECK(r.params.base == init.base);
        CHECK(r.relation_embeddings == init.relation);
    }
    SECTION("config errors") {
        for (auto mutate : std::vector<std::function<void(RgcnConfig&)>>{
                 [](RgcnConfig& c) { c.test_size = 0.0; }, [](RgcnConfig& c) { c.test_size = 1.0; },
                 [](RgcnConfig& c) { c.h_dim = 0; }, [](RgcnConfig& c) { c.learning_rate = -1; },
                 [](RgcnConfig& c) { c.negative_ratio = 0; }}) {
            RgcnConfig bad = cfg;
            mutate(bad);
            try {
                train(g, bad);
                FAIL("expected ConfigInvalid");
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::ConfigInvalid);
            }
        }
        CHECK_THROWS_AS(train(TripleGraph(3, 1, {{0, 0, 1}}), cfg), Error);
    }
    SECTION("divergence is reported") {
        cfg.learning_rate = 1e200;
        cfg.init_scale = 1.0;
        try {
            train(g, cfg);
            FAIL("expected NonFiniteLoss");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonFiniteLoss);
            CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        }
    }
}

TEST_CASE("learning on the planted two-block graph") {
    const TripleGraph g = synthetic::two_block(7);
    RgcnConfig cfg;
    cfg.seed = 7;
    cfg.h_dim = 32;
    cfg.num_epochs = 300;
    cfg.learning_rate = 0.5;
    cfg.init_scale = 0.3;
    const TrainResult r = train(g, cfg);

    std::mt19937_64 rng(cfg.seed);
    const EdgeSplit split = split_edges(g, cfg.test_size, rng);
    const RgcnParams init = RgcnParams::random(g.num_nodes, g.num_relations, cfg, rng);
    std::vector<TrainingTriple> batch;
    for (const Triple& t : split.test) batch.push_back({t, 1});
    const auto neg = sample_negatives(batch, g, rng, batch.size());
    batch.insert(batch.end(), neg.begin(), neg.end());

    const Matrix init_emb = forward(Propagation(g.num_nodes, g.num_relations, split.train), init);
    std::vector<int> y;
    std::vector<double> trained, control;
    for (const auto& t : batch) {
        y.push_back(t.y);
        trained.push_back(score(r.node_embeddings, r.relation_embeddings, t.t));
        control.push_back(score(init_emb, init.relation, t.t));
    }
    const double learned = quadratic_auc(y, trained);
    const double random_control = quadratic_auc(y, control);
    CHECK_THAT(learned, WithinAbs(r.selected_test_auc, 1e-12));
    CHECK_THAT(random_control, WithinAbs(0.5, 0.1));
    CHECK(learned > random_control + 0.2);
}
