#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clakg {

// One code per failure named by a module contract. The service maps these
// to HTTP status codes and to the machine code in ApiError bodies.
enum class ErrorCode {
    // store
    EmptyPayload,
    UnknownNode,
    SchemaViolation,
    DuplicateIdEdge,
    WrongKind,
    IoError,
    FormatError,
    // ingest
    DuplicateArticleNumber,
    MissingField,
    BadDate,
    ExtractorFailure,
    UnknownArticleCitation,
    // rgcn
    ShapeMismatch,
    SaturatedGraph,
    EmptyBatch,
    ConfigInvalid,
    NonFiniteLoss,
    SingleClass,
    DimensionMismatch,
    // retrieval
    EmptyKeySet,
    MissingEmbedding,
    ZeroVector,
    // llm
    Timeout,
    Transport,
    AuthMissing,
    ScriptExhausted,
    NoCandidates,
    NoArticleFound,
    // pipeline
    UnknownArticle,
    UnknownSession,
    // eval
    TooFewRecords,
    EmptyIndex,
    SystemFailure,
    // service
    BadRequest,
    Conflict,
    NotFound,
};

// snake_case name, e.g. "schema_violation". Gateway failures (Timeout,
// Transport, AuthMissing, ScriptExhausted) all map to "gateway_error".
std::string_view error_code_name(ErrorCode code);

bool is_gateway_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + message : message),
          code_(code),
          line_(line) {}

    ErrorCode code() const noexcept { return code_; }

    // Source line for errors raised while reading line-oriented files.
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
};

}  // namespace clakg
