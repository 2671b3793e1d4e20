#pragma once
// Statute and judgment parsing, and graph construction.
//
// Statute JSONL:   {"article_number": "385", "body": "..."}
// Judgment JSONL:  {"case_name": "...", "session_date": "2021-06-15",
//                   "prosecution_reason": "...", "facts": "...",
//                   "cited_articles": ["385", "386"]}

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clakg/graph.hpp"
#include "clakg/llm.hpp"

namespace clakg {

struct ArticleRecord {
    std::string article_number;
    std::string body;

    bool operator==(const ArticleRecord&) const = default;
};

struct JudgmentRecord {
    std::string case_name;
    std::string session_date;
    std::string prosecution_reason;
    std::string facts;
    std::vector<std::string> cited_articles;

    bool operator==(const JudgmentRecord&) const = default;
};

// FormatError (with line), DuplicateArticleNumber.
std::vector<ArticleRecord> parse_statutes(std::istream& in);
std::vector<ArticleRecord> parse_statutes(const std::filesystem::path& path);

// FormatError, MissingField, BadDate (all with line). Citations are checked
// for syntax only.
std::vector<JudgmentRecord> parse_judgments(std::istream& in);
std::vector<JudgmentRecord> parse_judgments(const std::filesystem::path& path);

class Extractor {
public:
    virtual ~Extractor() = default;
    virtual std::vector<std::string> extract_key_info(std::string_view article_body) = 0;
    virtual std::string summarize_case(std::string_view facts) = 0;
    // Subset of `candidates`, at most `cap`, most relevant first.
    virtual std::vector<std::string> select_relevant_keys(std::string_view case_text,
                                                          std::span<const std::string> candidates,
                                                          std::size_t cap) = 0;
};

// Deterministic extractor driven by a phrase lexicon mined from the statute
// corpus. For every article, 1- to 3-word phrases that do not cross
// punctuation and neither start nor end with a stopword or number are scored
//   tf * words * (ln((1 + N) / (1 + df)) + 1)
// and the top `per_article` (ties alphabetical) join the lexicon.
class OfflineExtractor final : public Extractor {
public:
    struct Options {
        std::size_t per_article = 8;
        std::size_t max_words = 3;
        std::size_t summary_chars = 400;
    };

    explicit OfflineExtractor(std::span<const ArticleRecord> corpus);
    OfflineExtractor(std::span<const ArticleRecord> corpus, Options options);

    // Longest lexicon matches scanning left to right, first occurrence order.
    std::vector<std::string> extract_key_info(std::string_view article_body) override;
    // The leading summary_chars characters of the facts.
    std::string summarize_case(std::string_view facts) override;
    // Candidates occurring in the case text, by occurrence count, ties
    // alphabetical; candidates that never occur are not selected.
    std::vector<std::string> select_relevant_keys(std::string_view case_text, std::span<const std::string> candidates,
                                                  std::size_t cap) override;

    const std::set<std::string>& lexicon() const { return lexicon_; }

private:
    Options options_;
    std::set<std::string> lexicon_;
};

// Extraction through the construction prompts. Gateway failures and
// unusable answers surface as ExtractorFailure.
class LlmExtractor final : public Extractor {
public:
    explicit LlmExtractor(std::shared_ptr<const llm::Gateway> gateway, std::size_t keys_per_article = 8,
                          std::size_t summary_chars = 400);

    std::vector<std::string> extract_key_info(std::string_view article_body) override;
    std::string summarize_case(std::string_view facts) override;
    std::vector<std::string> select_relevant_keys(std::string_view case_text, std::span<const std::string> candidates,
                                                  std::size_t cap) override;

private:
    std::shared_ptr<const llm::Gateway> gateway_;
    std::size_t keys_per_article_;
    std::size_t summary_chars_;
};

struct KindTally {
    std::size_t attempted = 0;
    std::size_t created = 0;
    std::size_t deduped = 0;

    bool operator==(const KindTally&) const = default;
};

struct BuildIssue {
    std::string code;     // error_code_name() of the cause, or a warning tag
    std::string subject;  // article number or case name
    std::string message;
};

struct BuildReport {
    std::array<KindTally, kNodeKindCount> nodes{};
    std::array<std::size_t, kRelationKindCount> edges_created{};
    std::vector<NodeId> created_nodes;
    std::vector<Edge> created_edges;
    std::vector<BuildIssue> issues;
    std::size_t documents = 0;
    std::size_t skipped = 0;

    const KindTally& tally(NodeKind kind) const { return nodes[index_of(kind)]; }
    std::size_t edges(RelationKind rel) const { return edges_created[index_of(rel)]; }
    void merge(const BuildReport& other);
};

inline constexpr std::size_t kCaseKeyCap = 5;

// One OriginalArticle + LawArticleId + Id edge per article and a Key edge per
// extracted phrase. Articles already present (by number) are not duplicated,
// so re-running on the same input changes nothing.
BuildReport build_lakg(Graph& graph, std::span<const ArticleRecord> articles, Extractor& extractor);

// One CaseName per judgment with its time, reason and specifics, an
// ApplicableLaw edge per known citation, then link_case_keys on the facts.
BuildReport build_ackg(Graph& graph, std::span<const JudgmentRecord> judgments, Extractor& extractor);

// The candidate pool is every KeyInformation node reachable from the case's
// applicable articles. The extractor's picks are filtered to the pool,
// de-duplicated and cut to `cap` in extractor order. When case_text is
// empty the case's reason and specifics are used.
std::vector<Edge> link_case_keys(Graph& graph, NodeId case_id, Extractor& extractor, std::size_t cap = kCaseKeyCap,
                                 std::string_view case_text = {}, BuildReport* report = nullptr);

// The selection half of link_case_keys without touching the graph: the
// KeyInformation nodes that would be linked, in link order.
std::vector<NodeId> select_case_keys(const Graph& graph, NodeId case_id, Extractor& extractor,
                                     std::size_t cap = kCaseKeyCap, std::string_view case_text = {});

// Same selection for a case that is not in the graph yet, given the
// LawArticleId nodes it will apply.
std::vector<NodeId> select_keys_for_articles(const Graph& graph, std::span<const NodeId> law_article_ids,
                                             Extractor& extractor, std::string_view case_text,
                                             std::size_t cap = kCaseKeyCap);

// KeyInformation nodes reachable from the given LawArticleId nodes through
// their articles' Key edges, ascending by id.
std::vector<NodeId> key_pool(const Graph& graph, std::span<const NodeId> law_article_ids);

}  // namespace clakg
