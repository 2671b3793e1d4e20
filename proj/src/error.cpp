#include "clakg/error.hpp"

namespace clakg {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyPayload: return "empty_payload";
        case ErrorCode::UnknownNode: return "unknown_node";
        case ErrorCode::SchemaViolation: return "schema_violation";
        case ErrorCode::DuplicateIdEdge: return "duplicate_id_edge";
        case ErrorCode::WrongKind: return "wrong_kind";
        case ErrorCode::IoError: return "io_error";
        case ErrorCode::FormatError: return "format_error";
        case ErrorCode::DuplicateArticleNumber: return "duplicate_article_number";
        case ErrorCode::MissingField: return "missing_field";
        case ErrorCode::BadDate: return "bad_date";
        case ErrorCode::ExtractorFailure: return "extractor_failure";
        case ErrorCode::UnknownArticleCitation: return "unknown_article_citation";
        case ErrorCode::ShapeMismatch: return "shape_mismatch";
        case ErrorCode::SaturatedGraph: return "saturated_graph";
        case ErrorCode::EmptyBatch: return "empty_batch";
        case ErrorCode::ConfigInvalid: return "config_invalid";
        case ErrorCode::NonFiniteLoss: return "non_finite_loss";
        case ErrorCode::SingleClass: return "single_class";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::EmptyKeySet: return "empty_key_set";
        case ErrorCode::MissingEmbedding: return "missing_embedding";
        case ErrorCode::ZeroVector: return "zero_vector";
        case ErrorCode::Timeout:
        case ErrorCode::Transport:
        case ErrorCode::AuthMissing:
        case ErrorCode::ScriptExhausted: return "gateway_error";
        case ErrorCode::NoCandidates: return "no_candidates";
        case ErrorCode::NoArticleFound: return "no_article_found";
        case ErrorCode::UnknownArticle: return "unknown_article";
        case ErrorCode::UnknownSession: return "unknown_session";
        case ErrorCode::TooFewRecords: return "too_few_records";
        case ErrorCode::EmptyIndex: return "empty_index";
        case ErrorCode::SystemFailure: return "system_failure";
        case ErrorCode::BadRequest: return "bad_request";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::NotFound: return "not_found";
    }
    return "internal";
}

bool is_gateway_error(ErrorCode code) {
    return code == ErrorCode::Timeout || code == ErrorCode::Transport || code == ErrorCode::AuthMissing ||
           code == ErrorCode::ScriptExhausted;
}

}  // namespace clakg
