// clakg command line: build, train, query and serve a legal article graph.

#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "clakg/embedding.hpp"
#include "clakg/error.hpp"
#include "clakg/eval.hpp"
#include "clakg/http_provider.hpp"
#include "clakg/ingest.hpp"
#include "clakg/pipeline.hpp"
#include "clakg/prompts.hpp"
#include "clakg/retrieval.hpp"
#include "clakg/service.hpp"
#include "clakg/text.hpp"

using namespace clakg;
using ojson = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << text;
}

struct ProviderOpts {
    std::string provider = "offline";
    std::string script;

    void bind(CLI::App* cmd) {
        cmd->add_option("--provider", provider, "offline | scripted | llm")
            ->check(CLI::IsMember({"offline", "scripted", "llm"}))
            ->capture_default_str();
        cmd->add_option("--script", script, "Response script for the scripted provider")->check(CLI::ExistingFile);
    }

    std::shared_ptr<llm::Gateway> gateway() const {
        return std::make_shared<llm::Gateway>(llm::make_provider(provider, script));
    }
};

std::shared_ptr<Extractor> make_extractor(const std::string& kind, const Graph& graph,
                                          std::span<const ArticleRecord> statutes,
                                          const std::shared_ptr<llm::Gateway>& gateway) {
    if (kind == "llm") return std::make_shared<LlmExtractor>(gateway);
    if (!statutes.empty()) return std::make_shared<OfflineExtractor>(statutes);
    return std::make_shared<OfflineExtractor>(pipeline::article_records(graph));
}

ojson report_json(const BuildReport& r) {
    ojson nodes, edges;
    for (NodeKind k : kAllNodeKinds) {
        const KindTally& t = r.tally(k);
        nodes[std::string(to_string(k))] = {{"attempted", t.attempted}, {"created", t.created}, {"deduped", t.deduped}};
    }
    for (RelationKind rel : kAllRelationKinds) edges[std::string(to_string(rel))] = r.edges(rel);
    ojson issues = ojson::array();
    for (const auto& i : r.issues) issues.push_back({{"code", i.code}, {"subject", i.subject}, {"message", i.message}});
    ojson j;
    j["documents"] = r.documents;
    j["skipped"] = r.skipped;
    j["nodes"] = std::move(nodes);
    j["edges_created"] = std::move(edges);
    j["issues"] = std::move(issues);
    return j;
}

struct QueryOpts {
    std::string graph;
    std::string emb;
    std::string case_file;
    std::size_t k = retrieval::kDefaultK;
    std::size_t q = retrieval::kDefaultQ;

    void bind(CLI::App* cmd, bool need_case) {
        cmd->add_option("--graph", graph, "Graph JSONL")->required()->check(CLI::ExistingFile);
        cmd->add_option("--emb", emb, "Embedding table")->required()->check(CLI::ExistingFile);
        if (need_case) cmd->add_option("--case-file", case_file, "Case facts, plain text")->required()->check(CLI::ExistingFile);
        cmd->add_option("--k", k, "Key information nodes per case")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--q", q, "Candidate articles per case")->capture_default_str()->check(CLI::PositiveNumber);
    }
};

std::unique_ptr<pipeline::Pipeline> open_pipeline(const QueryOpts& qo, const ProviderOpts& po,
                                                  std::shared_ptr<SharedGraph>* shared_out = nullptr) {
    Graph graph = Graph::load(qo.graph);
    auto table = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(qo.emb));
    service::check_compatible(graph, *table);
    auto gateway = po.gateway();
    auto extractor = make_extractor(po.provider == "llm" ? "llm" : "offline", graph, {}, gateway);
    auto shared = std::make_shared<SharedGraph>(std::move(graph));
    if (shared_out) *shared_out = shared;
    pipeline::Config cfg;
    cfg.k = qo.k;
    cfg.q = qo.q;
    return std::make_unique<pipeline::Pipeline>(shared, table, gateway, extractor, cfg);
}

int run_ingest(const std::string& statutes_path, const std::string& judgments_path, const std::string& extractor_kind,
               const ProviderOpts& po, const std::string& out) {
    const auto statutes = parse_statutes(std::filesystem::path(statutes_path));
    Graph graph;
    auto gateway = extractor_kind == "llm" ? po.gateway() : nullptr;
    auto extractor = make_extractor(extractor_kind, graph, statutes, gateway);
    BuildReport report = build_lakg(graph, statutes, *extractor);
    if (!judgments_path.empty()) {
        const auto judgments = parse_judgments(std::filesystem::path(judgments_path));
        report.merge(build_ackg(graph, judgments, *extractor));
    }
    graph.save(out);
    ojson j;
    j["graph"] = out;
    j["report"] = report_json(report);
    j["stats"] = service::stats_json(graph.stats());
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_train(const std::string& graph_path, const std::string& out, const rgcn::RgcnConfig& cfg, bool quiet) {
    const Graph graph = Graph::load(graph_path);
    const TrainedEmbeddings trained = train_embeddings(graph, cfg);
    if (!quiet) {
        for (const auto& m : trained.history) {
            std::fprintf(stderr, "epoch %3zu  loss %.6f  train_auc %.4f  test_auc %.4f\n", m.epoch, m.train_loss,
                         m.train_auc, m.test_auc);
        }
    }
    trained.table.save(out);
    std::printf("selected epoch %zu, test AUC %.4f, %zu node vectors -> %s\n", trained.table.provenance.epoch,
                trained.table.provenance.test_auc, trained.table.nodes.size(), out.c_str());
    return 0;
}

int run_retrieve(const QueryOpts& qo, const ProviderOpts& po) {
    const Graph graph = Graph::load(qo.graph);
    const EmbeddingTable table = EmbeddingTable::load(qo.emb);
    service::check_compatible(graph, table);
    const auto gateway = po.gateway();
    const auto match = retrieval::match_keys(slurp(qo.case_file), *gateway, graph, qo.k);
    ojson j;
    ojson keys = ojson::array();
    for (NodeId id : match.resolved) keys.push_back({{"id", to_underlying(id)}, {"phrase", graph.node(id).payload}});
    j["keys"] = std::move(keys);
    if (match.resolved.empty()) {
        j["candidates"] = ojson::array();
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    const auto result = retrieval::candidate_articles(match, graph, table, qo.q);
    ojson cands = ojson::array();
    for (const auto& c : result.candidates) {
        cands.push_back({{"number", c.number},
                         {"article_id", to_underlying(c.article)},
                         {"score", c.cumulative_score},
                         {"per_key_scores", c.per_key_scores},
                         {"precedents", c.precedents.size()}});
    }
    j["candidates"] = std::move(cands);
    j["pool_size"] = result.pool_size;
    j["cosine_calls"] = result.cosine_calls;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_recommend(const QueryOpts& qo, const ProviderOpts& po) {
    std::shared_ptr<SharedGraph> shared;
    auto pipe = open_pipeline(qo, po, &shared);
    const auto rec = pipe->recommend(slurp(qo.case_file));
    shared->read([&](const Graph& g) { std::cout << service::recommendation_json(rec, g).dump(2) << "\n"; });
    return 0;
}

int run_feedback(const std::string& graph_path, const std::string& emb_path, const std::string& event_path,
                 const ProviderOpts& po) {
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(slurp(event_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::FormatError, event_path + ": " + e.what());
    }
    auto event = service::feedback_event_from_json(body);
    if (event.case_text.empty() && body.contains("case_file")) event.case_text = slurp(body["case_file"].get<std::string>());

    Graph graph = Graph::load(graph_path);
    auto table = std::make_shared<const EmbeddingTable>(emb_path.empty() ? EmbeddingTable{}
                                                                          : EmbeddingTable::load(emb_path));
    auto gateway = po.gateway();
    auto extractor = make_extractor(po.provider == "llm" ? "llm" : "offline", graph, {}, gateway);
    auto shared = std::make_shared<SharedGraph>(std::move(graph));
    pipeline::Pipeline pipe(shared, table, gateway, extractor);
    const auto report = pipe.apply_feedback(event, [&](const Graph& next) { next.save(graph_path); });
    shared->read([&](const Graph& g) { std::cout << service::feedback_json(report, g).dump(2) << "\n"; });
    return 0;
}

struct EvalOpts {
    std::string judgments;
    std::string train_judgments;
    std::vector<std::string> systems{"ours", "tfidf"};
    std::string out;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    bool split = false;
    double test_fraction = 0.15;
};

int run_eval(const QueryOpts& qo, const ProviderOpts& po, const EvalOpts& eo) {
    std::shared_ptr<SharedGraph> shared;
    auto pipe = open_pipeline(qo, po, &shared);
    auto gateway = po.gateway();
    const auto articles = pipeline::article_records(shared->snapshot());
    const eval::TfidfIndex tfidf(articles);

    std::vector<JudgmentRecord> test = parse_judgments(std::filesystem::path(eo.judgments));
    std::vector<JudgmentRecord> train;
    if (!eo.train_judgments.empty()) train = parse_judgments(std::filesystem::path(eo.train_judgments));
    if (eo.split) {
        eval::SplitPolicy policy;
        policy.test_fraction = eo.test_fraction;
        policy.seed = eo.seed;
        auto s = eval::split(test, policy);
        test = std::move(s.test);
        train.insert(train.end(), s.train.begin(), s.train.end());
    }

    std::vector<eval::EvalReport> reports;
    for (const std::string& name : eo.systems) {
        eval::System system;
        if (name == "ours") {
            system = [&](std::string_view text) { return pipe->recommend(text).numbers(); };
        } else if (name == "tfidf") {
            system = [&](std::string_view text) { return tfidf.recommend(text, qo.q); };
        } else if (name == "tfidf-rag") {
            system = [&](std::string_view text) {
                std::vector<llm::CandidateText> cands;
                for (const auto& n : tfidf.recommend(text, qo.q)) {
                    for (const auto& a : articles) {
                        if (a.article_number == n) cands.push_back({a.article_number, a.body});
                    }
                }
                return llm::parse_article_ids(gateway->complete(llm::prompt_recommendation(text, cands, {})));
            };
        } else if (name == "raw-llm") {
            system = [&](std::string_view text) {
                return llm::parse_article_ids(gateway->complete(llm::prompt_direct(text)));
            };
        } else if (name == "random") {
            auto rng = std::make_shared<std::mt19937_64>(eo.seed);
            auto mutex = std::make_shared<std::mutex>();
            system = [&, rng, mutex](std::string_view) {
                std::lock_guard lock(*mutex);
                return std::vector<std::string>{articles[(*rng)() % articles.size()].article_number};
            };
        } else {
            throw Error(ErrorCode::ConfigInvalid, "unknown system \"" + name + "\"");
        }
        reports.push_back(eval::evaluate(name, system, test, train, eo.threads));
    }
    std::cerr << eval::report_text(reports);
    write_text(eo.out, eval::report_json(reports).dump(2) + "\n");
    return 0;
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int run_serve(const std::vector<std::string>& args) {
    service::ServiceConfig cfg = service::parse_config(args);
    service::Service svc(cfg);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const int port = svc.start();
    std::printf("listening on %s:%d\n", cfg.host.c_str(), port);
    std::fflush(stdout);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    svc.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("Legal article graph: ingest, train, retrieve, recommend, feedback, eval, serve");
    app.require_subcommand(1);

    ProviderOpts po;

    auto* ingest = app.add_subcommand("ingest", "Build a graph from statute and judgment JSONL");
    std::string statutes, judgments, extractor_kind = "offline", out;
    ingest->add_option("--statutes", statutes, "Statute JSONL")->required()->check(CLI::ExistingFile);
    ingest->add_option("--judgments", judgments, "Judgment JSONL")->check(CLI::ExistingFile);
    ingest->add_option("--extractor", extractor_kind, "offline | llm")
        ->check(CLI::IsMember({"offline", "llm"}))
        ->capture_default_str();
    ingest->add_option("--out", out, "Graph JSONL to write")->required();
    po.bind(ingest);

    auto* train = app.add_subcommand("train", "Train RGCN node embeddings");
    std::string graph_path, emb_out;
    rgcn::RgcnConfig rc;
    bool quiet = false;
    train->add_option("--graph", graph_path, "Graph JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--out", emb_out, "Embedding table to write")->required();
    train->add_option("--seed", rc.seed, "Random seed")->capture_default_str();
    train->add_option("--h-dim", rc.h_dim, "Embedding dimension")->capture_default_str();
    train->add_option("--layers", rc.num_layers, "RGCN layers")->capture_default_str();
    train->add_option("--epochs", rc.num_epochs, "Training epochs")->capture_default_str();
    train->add_option("--lr", rc.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--test-size", rc.test_size, "Held-out edge fraction")->capture_default_str();
    train->add_option("--negative-ratio", rc.negative_ratio, "Negatives per positive")->capture_default_str();
    train->add_option("--init-scale", rc.init_scale, "Uniform init half-width")->capture_default_str();
    train->add_flag("--quiet", quiet, "No per-epoch log");

    QueryOpts qo;
    auto* retrieve = app.add_subcommand("retrieve", "Match keys and rank candidate articles");
    qo.bind(retrieve, true);
    po.bind(retrieve);

    auto* recommend = app.add_subcommand("recommend", "Recommend articles for a case");
    qo.bind(recommend, true);
    po.bind(recommend);

    auto* feedback = app.add_subcommand("feedback", "Add a reviewed case to the graph file");
    std::string event_path, fb_emb;
    feedback->add_option("--graph", graph_path, "Graph JSONL, rewritten in place")->required()->check(CLI::ExistingFile);
    feedback->add_option("--event", event_path, "Feedback event JSON")->required()->check(CLI::ExistingFile);
    feedback->add_option("--emb", fb_emb, "Embedding table, to report unembedded nodes")->check(CLI::ExistingFile);
    po.bind(feedback);

    auto* ev = app.add_subcommand("eval", "Compare recommenders on judgment records");
    EvalOpts eo;
    qo.bind(ev, false);
    po.bind(ev);
    ev->add_option("--judgments", eo.judgments, "Test judgment JSONL")->required()->check(CLI::ExistingFile);
    ev->add_option("--train-judgments", eo.train_judgments, "Training judgment JSONL, for zero-shot counts")
        ->check(CLI::ExistingFile);
    ev->add_option("--systems", eo.systems, "ours, tfidf, tfidf-rag, raw-llm, random")->delimiter(',');
    ev->add_option("--out", eo.out, "Report JSON path (stdout if omitted)");
    ev->add_option("--threads", eo.threads, "Worker threads")->capture_default_str();
    ev->add_option("--seed", eo.seed, "Seed for the split and the random system")->capture_default_str();
    ev->add_flag("--split", eo.split, "Split --judgments with the diversity split and test on its test part");
    ev->add_option("--test-fraction", eo.test_fraction, "Test share for --split")->capture_default_str();

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->prefix_command();
    serve->set_help_flag();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return run_ingest(statutes, judgments, extractor_kind, po, out);
        if (*train) return run_train(graph_path, emb_out, rc, quiet);
        if (*retrieve) return run_retrieve(qo, po);
        if (*recommend) return run_recommend(qo, po);
        if (*feedback) return run_feedback(graph_path, fb_emb, event_path, po);
        if (*ev) return run_eval(qo, po, eo);
        if (*serve) {
            if (!serve->remaining().empty() && (serve->remaining().front() == "--help" || serve->remaining().front() == "-h")) {
                service::ServiceConfig cfg;
                CLI::App help("clakg serve");
                service::bind_options(help, cfg);
                std::cout << help.help();
                return 0;
            }
            return run_serve(serve->remaining());
        }
    } catch (const Error& e) {
        std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
