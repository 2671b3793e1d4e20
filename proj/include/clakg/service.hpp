#pragma once
// HTTP API over a loaded graph and embedding table (see docs/api.md).
//
// Every non-2xx response body is {"code", "message", "request_id"}. Feedback
// is written through to the graph file before the response is sent.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "clakg/pipeline.hpp"

namespace CLI {
class App;
}

namespace clakg::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string graph_path;
    std::string embeddings_path;
    std::string provider = "offline";  // offline | scripted | llm
    std::string script_path;           // scripted provider only
    std::size_t k = retrieval::kDefaultK;
    std::size_t q = retrieval::kDefaultQ;
    std::vector<std::string> cors_origins;  // "*" allows any origin
    std::string static_dir;                 // optional UI assets mounted at /

    // ConfigInvalid on missing paths, unknown provider or out-of-range values.
    void validate() const;
};

// Registers the ServiceConfig options on `app`: --config FILE (TOML) and one
// flag per field.
void bind_options(CLI::App& app, ServiceConfig& config);

// Parses an argument list (without the program name). CLAKG_HOST, _PORT,
// _GRAPH, _EMB, _PROVIDER, _SCRIPT, _K, _Q, _CORS and _STATIC_DIR override the
// config file; explicit flags override both. Does not validate.
ServiceConfig parse_config(const std::vector<std::string>& args);

// Every vector has the provenance dimension, every embedded node exists in
// the graph and every OriginalArticle and KeyInformation node is embedded.
// DimensionMismatch, FormatError or MissingEmbedding.
void check_compatible(const Graph& graph, const EmbeddingTable& table);

// FNV-1a of a byte string; used to detect outside edits of the graph file.
std::uint64_t content_hash(std::string_view bytes);

nlohmann::ordered_json stats_json(const GraphStats& stats);
nlohmann::ordered_json recommendation_json(const pipeline::Recommendation& rec, const Graph& graph);
nlohmann::ordered_json feedback_json(const pipeline::FeedbackReport& report, const Graph& graph);
nlohmann::ordered_json article_json(const Graph& graph, std::string_view number);

// BadRequest for a body that is not an object or has fields of the wrong
// type; missing strings come back empty for apply_feedback to reject.
pipeline::FeedbackEvent feedback_event_from_json(const nlohmann::json& body);

class Service {
public:
    // Loads graph and embeddings from the configured paths. A null provider
    // is built from config.provider.
    explicit Service(ServiceConfig config, std::shared_ptr<llm::Provider> provider = nullptr);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Binds and serves on the calling thread until stop().
    void listen();
    void stop();
    int port() const;

    pipeline::Pipeline& pipeline();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace clakg::service
