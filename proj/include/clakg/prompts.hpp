#pragma once
// Prompt templates and response parsers.
//
// Every template renders as a system message (the expert role) plus a user
// message made of bracketed sections, e.g. "[Task Description]". Section
// order is fixed and the output is byte-stable for identical inputs. The
// offline provider relies on the section headers to recognise a template.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clakg/llm.hpp"

namespace clakg::llm {

namespace section {
inline constexpr std::string_view kTask = "[Task Description]";
inline constexpr std::string_view kNewCase = "[New Case Information]";
inline constexpr std::string_view kKeyNodes = "[Key Information Nodes]";
inline constexpr std::string_view kPrecautions = "[Precautions]";
inline constexpr std::string_view kOutputExample = "[Output Example]";
inline constexpr std::string_view kReferenceCases = "[Reference Case Information]";
inline constexpr std::string_view kCandidates = "[Candidate Law Articles]";
inline constexpr std::string_view kLawArticle = "[Law Article]";
inline constexpr std::string_view kCaseFacts = "[Case Facts]";
inline constexpr std::string_view kCandidateKeys = "[Candidate Key Information Nodes]";
inline constexpr std::string_view kFollowup = "[Follow-up Question]";
}  // namespace section

inline constexpr std::string_view kKeyMatchingRole = "Expert in law article analysis";
inline constexpr std::string_view kRecommendationRole = "Expert in criminal law article recommendation";
inline constexpr std::string_view kConstructionRole = "Legal text analyst";

struct CandidateText {
    std::string number;
    std::string body;
};

struct PrecedentText {
    std::string name;
    std::string session_time;
    std::string reason;
    std::string specifics;
};

// Matching a new case against the key information inventory. `limit` is the
// upper bound quoted in the task (8 by default, giving "0-8").
ChatRequest prompt_key_matching(std::string_view case_text, std::span<const std::string> inventory,
                                std::size_t limit = 8);

// Splits an inventory into chunks whose rendered size stays under
// max_chars, preserving order. A phrase longer than the budget gets a chunk
// of its own.
std::vector<std::vector<std::string>> chunk_inventory(std::span<const std::string> inventory, std::size_t max_chars);

// Final recommendation grounded in candidates and precedent cases. Throws
// NoCandidates when `candidates` is empty.
ChatRequest prompt_recommendation(std::string_view case_text, std::span<const CandidateText> candidates,
                                  std::span<const PrecedentText> precedents);

// Baseline without retrieval: the case alone.
ChatRequest prompt_direct(std::string_view case_text);

// Follow-up on an earlier exchange. The transcript (whose first user turn
// is the grounding prompt) is replayed as history.
ChatRequest prompt_followup(std::string_view system, std::span<const Turn> transcript, std::string_view question);

// Graph construction prompts (no reference template exists for these).
ChatRequest prompt_extract_key_info(std::string_view article_body, std::size_t limit = 8);
ChatRequest prompt_summarize_case(std::string_view facts, std::size_t max_chars = 400);
ChatRequest prompt_select_keys(std::string_view case_text, std::span<const std::string> candidates, std::size_t cap);

// Extracts the body of one section from a rendered user message, or empty.
std::string_view section_body(std::string_view user_text, std::string_view header);

// Splits on ';' and full-width '；', trims whitespace and trailing
// punctuation, drops empty pieces. Never fails; duplicates are kept.
std::vector<std::string> parse_semicolon_list(std::string_view text);

// "Article 385", "Articles 385 and 397", "第385条", "第三百八十五条", or a
// bare number when that is the whole response. First-mention order, no
// duplicates. Throws NoArticleFound when nothing matches.
std::vector<std::string> parse_article_ids(std::string_view text);

}  // namespace clakg::llm
