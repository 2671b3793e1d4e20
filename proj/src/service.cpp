#include "clakg/service.hpp"

#include <atomic>
#include <cstdlib>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <CLI11.hpp>
#include <httplib.h>

#include "clakg/error.hpp"
#include "clakg/http_provider.hpp"
#include "clakg/text.hpp"

namespace clakg::service {

using ojson = nlohmann::ordered_json;

void ServiceConfig::validate() const {
    if (graph_path.empty()) throw Error(ErrorCode::ConfigInvalid, "graph path is required");
    if (embeddings_path.empty()) throw Error(ErrorCode::ConfigInvalid, "embeddings path is required");
    if (port < 0 || port > 65535) throw Error(ErrorCode::ConfigInvalid, "port must be in 0..65535");
    if (k == 0 || q == 0) throw Error(ErrorCode::ConfigInvalid, "k and q must be positive");
    if (provider != "offline" && provider != "scripted" && provider != "llm") {
        throw Error(ErrorCode::ConfigInvalid, "unknown provider \"" + provider + "\"");
    }
    if (provider == "scripted" && script_path.empty()) {
        throw Error(ErrorCode::ConfigInvalid, "the scripted provider needs script_path");
    }
}

namespace {

struct FlagEnv {
    const char* flag;
    const char* env;
};

constexpr FlagEnv kFlagEnv[] = {
    {"--host", "CLAKG_HOST"},         {"--port", "CLAKG_PORT"},     {"--graph", "CLAKG_GRAPH"},
    {"--emb", "CLAKG_EMB"},           {"--provider", "CLAKG_PROVIDER"}, {"--script", "CLAKG_SCRIPT"},
    {"--k", "CLAKG_K"},               {"--q", "CLAKG_Q"},           {"--cors", "CLAKG_CORS"},
    {"--static-dir", "CLAKG_STATIC_DIR"},
};

bool has_flag(const std::vector<std::string>& args, std::string_view flag) {
    for (const auto& a : args) {
        if (a == flag || (a.size() > flag.size() && a.compare(0, flag.size(), flag) == 0 && a[flag.size()] == '=')) {
            return true;
        }
    }
    return false;
}

}  // namespace

void bind_options(CLI::App& app, ServiceConfig& c) {
    app.set_config("--config", "", "TOML file with the options below");
    app.add_option("--host", c.host, "Bind address [CLAKG_HOST]")->capture_default_str();
    app.add_option("--port", c.port, "Port, 0 for any free port [CLAKG_PORT]")->capture_default_str();
    app.add_option("--graph", c.graph_path, "Graph JSONL file, rewritten on feedback [CLAKG_GRAPH]");
    app.add_option("--emb", c.embeddings_path, "Embedding table [CLAKG_EMB]");
    app.add_option("--provider", c.provider, "offline | scripted | llm [CLAKG_PROVIDER]")->capture_default_str();
    app.add_option("--script", c.script_path, "Script for the scripted provider [CLAKG_SCRIPT]");
    app.add_option("--k", c.k, "Key information nodes per case [CLAKG_K]")->capture_default_str();
    app.add_option("--q", c.q, "Candidate articles per case [CLAKG_Q]")->capture_default_str();
    app.add_option("--cors", c.cors_origins, "Allowed CORS origins, comma separated [CLAKG_CORS]")->delimiter(',');
    app.add_option("--static-dir", c.static_dir, "Directory served at / [CLAKG_STATIC_DIR]");
}

// CLI11 lets a config file beat the environment, so set CLAKG_* values are
// turned into flags before parsing unless the flag was given explicitly.
ServiceConfig parse_config(const std::vector<std::string>& args) {
    std::vector<std::string> all = args;
    for (const FlagEnv& fe : kFlagEnv) {
        const char* value = std::getenv(fe.env);
        if (value && *value && !has_flag(args, fe.flag)) all.push_back(std::string(fe.flag) + "=" + value);
    }
    ServiceConfig config;
    CLI::App app("clakg service");
    bind_options(app, config);
    std::vector<std::string> reversed(all.rbegin(), all.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what());
    }
    return config;
}

void check_compatible(const Graph& graph, const EmbeddingTable& table) {
    for (const auto& [id, v] : table.nodes) {
        if (v.size() != table.h_dim()) {
            throw Error(ErrorCode::DimensionMismatch, "node " + std::to_string(id) + " has " +
                                                          std::to_string(v.size()) + " components, provenance says " +
                                                          std::to_string(table.h_dim()));
        }
        if (!graph.contains(NodeId{id})) {
            throw Error(ErrorCode::FormatError,
                        "embedding table has node " + std::to_string(id) + ", which is not in the graph");
        }
    }
    for (NodeKind kind : {NodeKind::OriginalArticle, NodeKind::KeyInformation}) {
        for (NodeId id : graph.nodes_of_kind(kind)) table.at(id);
    }
}

std::uint64_t content_hash(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

ojson stats_json(const GraphStats& s) {
    ojson nodes, edges;
    for (NodeKind k : kAllNodeKinds) nodes[std::string(to_string(k))] = s.node_count(k);
    for (RelationKind r : kAllRelationKinds) edges[std::string(to_string(r))] = s.edge_count(r);
    ojson j;
    j["nodes"] = std::move(nodes);
    j["edges"] = std::move(edges);
    j["total_nodes"] = s.total_nodes();
    j["total_edges"] = s.total_edges();
    return j;
}

namespace {

ojson case_json(const CaseSummary& c) {
    ojson j;
    j["case_id"] = to_underlying(c.case_id);
    j["name"] = c.name;
    j["session_time"] = c.session_time;
    j["reason"] = c.reason;
    j["specifics"] = c.specifics;
    return j;
}

ojson node_json(const Graph& g, NodeId id) {
    ojson j;
    j["id"] = to_underlying(id);
    j["kind"] = to_string(g.node(id).kind);
    j["payload"] = g.node(id).payload;
    return j;
}

}  // namespace

ojson recommendation_json(const pipeline::Recommendation& rec, const Graph& graph) {
    ojson j;
    j["session_id"] = rec.session_id;
    j["no_match"] = rec.no_match;
    ojson recommended = ojson::array();
    ojson grounding = ojson::array();
    bool all_grounded = !rec.articles.empty();
    for (const auto& a : rec.articles) {
        recommended.push_back(a.number);
        grounding.push_back({{"number", a.number}, {"grounded", a.grounded}});
        all_grounded = all_grounded && a.grounded;
    }
    j["recommended"] = std::move(recommended);
    j["grounding"] = std::move(grounding);
    j["grounded"] = all_grounded;
    j["rationale"] = rec.rationale;

    ojson keys = ojson::array();
    for (NodeId id : rec.keys.resolved) keys.push_back({{"id", to_underlying(id)}, {"phrase", graph.node(id).payload}});
    j["keys"] = {{"phrases", rec.keys.phrases}, {"resolved", std::move(keys)}, {"k", rec.keys.k_limit}};

    ojson candidates = ojson::array();
    for (const auto& c : rec.retrieval.candidates) {
        ojson cj;
        cj["number"] = c.number;
        cj["article_id"] = to_underlying(c.article);
        cj["score"] = c.cumulative_score;
        cj["per_key_scores"] = c.per_key_scores;
        cj["body"] = graph.contains(c.article) ? graph.node(c.article).payload : std::string();
        ojson precedents = ojson::array();
        for (const auto& p : c.precedents) precedents.push_back(case_json(p));
        cj["precedents"] = std::move(precedents);
        candidates.push_back(std::move(cj));
    }
    j["candidates"] = std::move(candidates);
    j["pool_size"] = rec.retrieval.pool_size;
    return j;
}

ojson feedback_json(const pipeline::FeedbackReport& r, const Graph& graph) {
    ojson j;
    j["case_id"] = to_underlying(r.case_id);
    ojson nodes = ojson::array();
    for (NodeId id : r.created_nodes) nodes.push_back(node_json(graph, id));
    j["created_nodes"] = std::move(nodes);
    ojson edges = ojson::array();
    for (const Edge& e : r.created_edges) {
        edges.push_back({{"head", to_underlying(e.head)}, {"relation", to_string(e.relation)}, {"tail", to_underlying(e.tail)}});
    }
    j["created_edges"] = std::move(edges);
    j["stats_before"] = stats_json(r.before);
    j["stats_after"] = stats_json(r.after);
    j["embeddings_stale"] = r.embeddings_stale;
    ojson unembedded = ojson::array();
    for (NodeId id : r.unembedded_nodes) unembedded.push_back(to_underlying(id));
    j["unembedded_nodes"] = std::move(unembedded);
    return j;
}

ojson article_json(const Graph& graph, std::string_view number) {
    const auto article = graph.find_article(number);
    if (!article) throw Error(ErrorCode::UnknownArticle, "no article " + std::string(number));
    ojson j;
    j["number"] = std::string(number);
    j["article_id"] = to_underlying(*article);
    j["body"] = graph.node(*article).payload;
    ojson keys = ojson::array();
    for (NodeId k : graph.neighbors(*article, RelationKind::Key, Direction::Out)) keys.push_back(graph.node(k).payload);
    j["keys"] = std::move(keys);
    const auto cases = graph.cases_for_article(*article);
    j["precedent_count"] = cases.size();
    ojson list = ojson::array();
    for (const auto& c : cases) list.push_back(case_json(c));
    j["precedents"] = std::move(list);
    return j;
}

pipeline::FeedbackEvent feedback_event_from_json(const nlohmann::json& body) {
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "request body must be a JSON object");
    auto str = [&](const char* field) -> std::string {
        auto it = body.find(field);
        if (it == body.end() || it->is_null()) return {};
        if (!it->is_string()) throw Error(ErrorCode::BadRequest, std::string("\"") + field + "\" must be a string");
        return it->get<std::string>();
    };
    auto list = [&](const char* field) -> std::vector<std::string> {
        auto it = body.find(field);
        if (it == body.end() || it->is_null()) return {};
        if (!it->is_array()) throw Error(ErrorCode::BadRequest, std::string("\"") + field + "\" must be an array");
        std::vector<std::string> out;
        for (const auto& x : *it) {
            if (!x.is_string()) throw Error(ErrorCode::BadRequest, std::string("\"") + field + "\" must hold strings");
            out.push_back(x.get<std::string>());
        }
        return out;
    };
    pipeline::FeedbackEvent e;
    e.case_text = str("case_text");
    e.case_name = str("case_name");
    e.session_date = str("session_date");
    e.prosecution_reason = str("prosecution_reason");
    e.confirmed_articles = list("confirmed_articles");
    e.corrected_from = list("corrected_from");
    return e;
}

namespace {

int http_status(ErrorCode code) {
    if (is_gateway_error(code) || code == ErrorCode::ExtractorFailure) return 502;
    switch (code) {
        case ErrorCode::BadRequest:
        case ErrorCode::MissingField:
        case ErrorCode::BadDate:
        case ErrorCode::FormatError: return 400;
        case ErrorCode::UnknownArticle:
        case ErrorCode::UnknownSession:
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict: return 409;
        default: return 500;
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write to a temporary, fsync, rename over the target.
void write_durably(const std::filesystem::path& path, const std::string& bytes) {
    const std::string tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error(ErrorCode::IoError, "cannot open " + tmp);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
        if (n <= 0) {
            ::close(fd);
            throw Error(ErrorCode::IoError, "write failed for " + tmp);
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) throw Error(ErrorCode::IoError, "sync failed for " + tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
    }
}

std::string required_string(const nlohmann::json& body, const char* field) {
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "request body must be a JSON object");
    auto it = body.find(field);
    if (it == body.end() || !it->is_string() || text::trim(it->get<std::string>()).empty()) {
        throw Error(ErrorCode::BadRequest, std::string("\"") + field + "\" must be a non-empty string");
    }
    return it->get<std::string>();
}

}  // namespace

struct Service::Impl {
    ServiceConfig config;
    std::shared_ptr<SharedGraph> graph;
    std::unique_ptr<pipeline::Pipeline> pipe;
    httplib::Server server;
    std::thread thread;
    std::atomic<int> bound_port{0};
    std::atomic<std::uint64_t> request_counter{0};
    std::uint64_t disk_hash = 0;  // guarded by the graph writer lock

    void send_json(httplib::Response& res, int status, const ojson& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
        ojson body;
        body["code"] = error_code_name(code);
        body["message"] = message;
        body["request_id"] = res.get_header_value("X-Request-Id");
        send_json(res, http_status(code), body);
    }

    template <typename F>
    httplib::Server::Handler guarded(F f) {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const std::exception& e) {
                send_error(res, ErrorCode::SystemFailure, e.what());
            }
        };
    }

    void persist(const Graph& next) {
        const std::filesystem::path path = config.graph_path;
        if (content_hash(read_file(path)) != disk_hash) {
            throw Error(ErrorCode::Conflict, "graph file changed on disk since it was loaded; reload the service");
        }
        std::ostringstream out;
        next.write(out);
        const std::string bytes = out.str();
        write_durably(path, bytes);
        disk_hash = content_hash(bytes);
    }

    void routes() {
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            res.set_header("X-Request-Id", "req-" + std::to_string(++request_counter));
            const std::string origin = req.get_header_value("Origin");
            if (!origin.empty()) {
                for (const auto& allowed : config.cors_origins) {
                    if (allowed == "*" || allowed == origin) {
                        res.set_header("Access-Control-Allow-Origin", allowed == "*" ? "*" : origin);
                        res.set_header("Vary", "Origin");
                        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
                        res.set_header("Access-Control-Allow-Headers", "Content-Type");
                        break;
                    }
                }
            }
            if (req.method == "OPTIONS") {
                res.status = 204;
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });

        server.Post("/api/recommend", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string case_text = required_string(parse_body(req), "case_text");
            const auto rec = pipe->recommend(case_text);
            graph->read([&](const Graph& g) { send_json(res, 200, recommendation_json(rec, g)); });
        }));

        server.Post("/api/feedback", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto event = feedback_event_from_json(parse_body(req));
            const auto report = pipe->apply_feedback(event, [this](const Graph& next) { persist(next); });
            graph->read([&](const Graph& g) { send_json(res, 200, feedback_json(report, g)); });
        }));

        server.Post("/api/followup", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const std::string session = required_string(body, "session_id");
            const std::string question = required_string(body, "question");
            const std::string answer = pipe->followup(session, question);
            ojson j;
            j["session_id"] = session;
            j["answer"] = answer;
            j["transcript_length"] = pipe->session(session)->transcript.size();
            send_json(res, 200, j);
        }));

        server.Get(R"(/api/articles/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string number = req.matches[1];
            graph->read([&](const Graph& g) { send_json(res, 200, article_json(g, number)); });
        }));

        server.Get("/api/graph/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
            graph->read([&](const Graph& g) { send_json(res, 200, stats_json(g.stats())); });
        }));

        server.Get("/api/keys", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string prefix = req.get_param_value("prefix");
            std::vector<std::string> phrases;
            graph->read([&](const Graph& g) {
                for (NodeId id : g.nodes_of_kind(NodeKind::KeyInformation)) {
                    const std::string& p = g.node(id).payload;
                    if (p.compare(0, prefix.size(), prefix) == 0) phrases.push_back(p);
                }
            });
            std::sort(phrases.begin(), phrases.end());
            ojson j;
            j["prefix"] = prefix;
            j["truncated"] = phrases.size() > 50;
            if (phrases.size() > 50) phrases.resize(50);
            j["keys"] = phrases;
            send_json(res, 200, j);
        }));

        if (!config.static_dir.empty()) server.set_mount_point("/", config.static_dir);

        server.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                send_error(res, ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
            } else {
                send_error(res, ErrorCode::SystemFailure, "HTTP status " + std::to_string(res.status));
            }
        });
    }
};

Service::Service(ServiceConfig config, std::shared_ptr<llm::Provider> provider) : impl_(std::make_unique<Impl>()) {
    config.validate();
    impl_->config = config;

    const std::string bytes = read_file(config.graph_path);
    if (bytes.empty() && !std::filesystem::exists(config.graph_path)) {
        throw Error(ErrorCode::IoError, "cannot open " + config.graph_path);
    }
    std::istringstream in(bytes);
    Graph graph = Graph::read(in);
    impl_->disk_hash = content_hash(bytes);
    auto table = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(config.embeddings_path));
    check_compatible(graph, *table);

    if (!provider) provider = llm::make_provider(config.provider, config.script_path);
    auto gateway = std::make_shared<llm::Gateway>(provider);
    std::shared_ptr<Extractor> extractor;
    if (config.provider == "llm") {
        extractor = std::make_shared<LlmExtractor>(gateway);
    } else {
        extractor = std::make_shared<OfflineExtractor>(pipeline::article_records(graph));
    }

    impl_->graph = std::make_shared<SharedGraph>(std::move(graph));
    pipeline::Config pc;
    pc.k = config.k;
    pc.q = config.q;
    impl_->pipe = std::make_unique<pipeline::Pipeline>(impl_->graph, table, gateway, extractor, pc);
    impl_->routes();
}

Service::~Service() { stop(); }

int Service::start() {
    const int port = impl_->config.port == 0 ? impl_->server.bind_to_any_port(impl_->config.host)
                                             : (impl_->server.bind_to_port(impl_->config.host, impl_->config.port)
                                                    ? impl_->config.port
                                                    : -1);
    if (port < 0) {
        throw Error(ErrorCode::IoError,
                    "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
    }
    impl_->bound_port = port;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::listen() {
    const int port = start();
    (void)port;
    if (impl_->thread.joinable()) impl_->thread.join();
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable() && impl_->thread.get_id() != std::this_thread::get_id()) impl_->thread.join();
}

int Service::port() const { return impl_->bound_port; }

pipeline::Pipeline& Service::pipeline() { return *impl_->pipe; }

}  // namespace clakg::service
