#include "clakg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "clakg/error.hpp"
#include "clakg/prompts.hpp"
#include "clakg/text.hpp"

namespace clakg {

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",     "an",    "and",  "any",   "are",  "as",    "at",   "be",    "been", "being", "by",    "for",
        "from",  "has",   "have", "he",    "her",  "his",   "if",   "in",    "into", "is",    "it",    "its",
        "may",   "more",  "not",  "of",    "on",   "or",    "other", "shall", "she",  "such",  "than",  "that",
        "the",   "their", "them", "then",  "there", "these", "they", "this",  "those", "to",   "under", "upon",
        "was",   "were",  "when", "where", "which", "who",  "whom", "whose", "will", "with",  "within", "without",
        "above", "below", "less", "least", "most", "no",    "only", "own",   "same", "so",    "some",  "also",
        "but",   "can",   "did",  "do",    "does", "had",   "him",  "i",     "we",   "you",   "our",   "your",
        "said",  "thereof", "therein", "herein", "article", "articles", "paragraph", "provisions", "provided",
        "whoever", "another", "person", "persons", "commits", "committed", "sentenced", "punished", "given",
        "means", "according", "accordance", "relatively", "especially", "still",
    };
    return words;
}

bool is_number(std::string_view token) {
    return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool edge_word(const text::Token& t) { return t.cjk || (!stopwords().contains(t.text) && !is_number(t.text)); }

bool inner_word(const text::Token& t) {
    return edge_word(t) || t.text == "of" || t.text == "or" || t.text == "and";
}

// Phrases of 1..max_words tokens starting at i that do not cross punctuation,
// have content words at both ends and only content words or of/or/and in
// between; calls f(phrase, words).
template <typename F>
void phrases_at(const std::vector<text::Token>& tokens, std::size_t i, std::size_t max_words, F&& f) {
    if (!edge_word(tokens[i])) return;
    for (std::size_t n = 1; n <= max_words && i + n <= tokens.size(); ++n) {
        const text::Token& last = tokens[i + n - 1];
        if (n > 1 && last.boundary_before) break;
        if (!edge_word(last)) {
            if (!inner_word(last)) break;
            continue;
        }
        f(text::join_tokens(tokens, i, i + n), n);
    }
}

std::string required_string(const nlohmann::json& obj, const char* field, std::size_t line, ErrorCode missing) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) throw Error(missing, std::string("missing field \"") + field + "\"", line);
    if (!it->is_string()) throw Error(ErrorCode::FormatError, std::string("field \"") + field + "\" must be a string", line);
    std::string value(text::trim(it->get<std::string>()));
    if (value.empty()) throw Error(missing, std::string("field \"") + field + "\" is empty", line);
    return value;
}

template <typename F>
void for_each_json_line(std::istream& in, F&& f) {
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (text::trim(raw).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::FormatError, std::string("malformed JSON: ") + e.what(), line);
        }
        if (!obj.is_object()) throw Error(ErrorCode::FormatError, "each line must be a JSON object", line);
        f(obj, line);
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return in;
}

// Adds a node and tallies it; KeyInformation and LawArticleId may dedupe.
NodeId tally_node(Graph& graph, BuildReport& report, NodeKind kind, std::string payload) {
    KindTally& t = report.nodes[index_of(kind)];
    ++t.attempted;
    const bool fresh = !graph.would_dedup(kind, payload);
    const NodeId id = graph.add_node(kind, std::move(payload));
    if (fresh) {
        ++t.created;
        report.created_nodes.push_back(id);
    } else {
        ++t.deduped;
    }
    return id;
}

void tally_edge(Graph& graph, BuildReport* report, NodeId head, RelationKind rel, NodeId tail) {
    const bool fresh = !graph.contains(Edge{head, rel, tail});
    const Edge e = graph.add_edge(head, rel, tail);
    if (fresh && report) {
        ++report->edges_created[index_of(rel)];
        report->created_edges.push_back(e);
    }
}

std::string case_text_from_graph(const Graph& graph, NodeId case_id) {
    std::string out;
    for (RelationKind rel : {RelationKind::Reason, RelationKind::Detail}) {
        for (NodeId n : graph.neighbors(case_id, rel, Direction::Out)) {
            if (!out.empty()) out += "\n";
            out += graph.node(n).payload;
        }
    }
    return out;
}

}  // namespace

std::vector<ArticleRecord> parse_statutes(std::istream& in) {
    std::vector<ArticleRecord> out;
    std::map<std::string, std::size_t> seen;
    for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t line) {
        ArticleRecord rec;
        rec.article_number = required_string(obj, "article_number", line, ErrorCode::FormatError);
        rec.body = required_string(obj, "body", line, ErrorCode::FormatError);
        if (!text::is_valid_article_number(rec.article_number)) {
            throw Error(ErrorCode::FormatError, "article number \"" + rec.article_number + "\" is not valid", line);
        }
        if (auto [it, fresh] = seen.emplace(rec.article_number, line); !fresh) {
            throw Error(ErrorCode::DuplicateArticleNumber,
                        "article " + rec.article_number + " already defined on line " + std::to_string(it->second),
                        line);
        }
        out.push_back(std::move(rec));
    });
    return out;
}

std::vector<ArticleRecord> parse_statutes(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_statutes(in);
}

std::vector<JudgmentRecord> parse_judgments(std::istream& in) {
    std::vector<JudgmentRecord> out;
    for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t line) {
        JudgmentRecord rec;
        rec.case_name = required_string(obj, "case_name", line, ErrorCode::MissingField);
        rec.session_date = required_string(obj, "session_date", line, ErrorCode::MissingField);
        rec.prosecution_reason = required_string(obj, "prosecution_reason", line, ErrorCode::MissingField);
        rec.facts = required_string(obj, "facts", line, ErrorCode::MissingField);
        if (!text::is_iso_date(rec.session_date)) {
            throw Error(ErrorCode::BadDate, "session_date \"" + rec.session_date + "\" is not a YYYY-MM-DD date", line);
        }
        auto cited = obj.find("cited_articles");
        if (cited == obj.end() || cited->is_null()) throw Error(ErrorCode::MissingField, "missing field \"cited_articles\"", line);
        if (!cited->is_array()) throw Error(ErrorCode::FormatError, "cited_articles must be an array", line);
        for (const auto& c : *cited) {
            if (!c.is_string()) throw Error(ErrorCode::FormatError, "cited_articles must hold strings", line);
            std::string number(text::trim(c.get<std::string>()));
            if (!text::is_valid_article_number(number)) {
                throw Error(ErrorCode::FormatError, "cited article \"" + number + "\" is not a valid number", line);
            }
            if (std::find(rec.cited_articles.begin(), rec.cited_articles.end(), number) == rec.cited_articles.end()) {
                rec.cited_articles.push_back(std::move(number));
            }
        }
        if (rec.cited_articles.empty()) throw Error(ErrorCode::MissingField, "cited_articles is empty", line);
        out.push_back(std::move(rec));
    });
    return out;
}

std::vector<JudgmentRecord> parse_judgments(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_judgments(in);
}

OfflineExtractor::OfflineExtractor(std::span<const ArticleRecord> corpus) : OfflineExtractor(corpus, Options{}) {}

OfflineExtractor::OfflineExtractor(std::span<const ArticleRecord> corpus, Options options) : options_(options) {
    std::vector<std::map<std::string, std::pair<std::size_t, std::size_t>>> per_doc;  // phrase -> (tf, words)
    std::map<std::string, std::size_t> df;
    for (const ArticleRecord& a : corpus) {
        const auto tokens = text::tokenize(a.body);
        auto& tf = per_doc.emplace_back();
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            phrases_at(tokens, i, options_.max_words, [&](std::string phrase, std::size_t words) {
                auto& slot = tf[std::move(phrase)];
                ++slot.first;
                slot.second = words;
            });
        }
        for (const auto& [phrase, v] : tf) ++df[phrase];
    }
    const double n_docs = static_cast<double>(corpus.size());
    for (const auto& tf : per_doc) {
        std::vector<std::pair<double, const std::string*>> scored;
        for (const auto& [phrase, v] : tf) {
            const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[phrase]))) + 1.0;
            scored.emplace_back(static_cast<double>(v.first) * static_cast<double>(v.second) * idf, &phrase);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return *a.second < *b.second;
        });
        for (std::size_t k = 0; k < scored.size() && k < options_.per_article; ++k) lexicon_.insert(*scored[k].second);
    }
}

std::vector<std::string> OfflineExtractor::extract_key_info(std::string_view article_body) {
    const auto tokens = text::tokenize(article_body);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tokens.size();) {
        std::string best;
        std::size_t best_words = 0;
        phrases_at(tokens, i, options_.max_words, [&](std::string phrase, std::size_t words) {
            if (words > best_words && lexicon_.contains(phrase)) {
                best = std::move(phrase);
                best_words = words;
            }
        });
        if (best_words == 0) {
            ++i;
            continue;
        }
        if (std::find(out.begin(), out.end(), best) == out.end()) out.push_back(std::move(best));
        i += best_words;
    }
    return out;
}

std::string OfflineExtractor::summarize_case(std::string_view facts) {
    return text::truncate_code_points(text::trim(facts), options_.summary_chars);
}

std::vector<std::string> OfflineExtractor::select_relevant_keys(std::string_view case_text,
                                                                std::span<const std::string> candidates,
                                                                std::size_t cap) {
    const auto haystack = text::tokenize(case_text);
    std::vector<std::pair<std::size_t, std::string>> hits;
    std::set<std::string> seen;
    for (const std::string& c : candidates) {
        if (!seen.insert(c).second) continue;
        const std::size_t n = text::count_occurrences(haystack, text::tokenize(c));
        if (n > 0) hits.emplace_back(n, c);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (auto& [n, phrase] : hits) {
        if (out.size() >= cap) break;
        out.push_back(std::move(phrase));
    }
    return out;
}

LlmExtractor::LlmExtractor(std::shared_ptr<const llm::Gateway> gateway, std::size_t keys_per_article,
                           std::size_t summary_chars)
    : gateway_(std::move(gateway)), keys_per_article_(keys_per_article), summary_chars_(summary_chars) {
    if (!gateway_) throw std::invalid_argument("LlmExtractor needs a gateway");
}

namespace {

template <typename F>
auto as_extractor_failure(std::string_view what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(ErrorCode::ExtractorFailure, std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::vector<std::string> LlmExtractor::extract_key_info(std::string_view article_body) {
    return as_extractor_failure("key information extraction", [&] {
        auto phrases = llm::parse_semicolon_list(gateway_->complete(llm::prompt_extract_key_info(article_body, keys_per_article_)));
        std::vector<std::string> out;
        for (auto& p : phrases) {
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
        }
        return out;
    });
}

std::string LlmExtractor::summarize_case(std::string_view facts) {
    return as_extractor_failure("case summary", [&] {
        std::string summary(text::trim(gateway_->complete(llm::prompt_summarize_case(facts, summary_chars_))));
        if (summary.empty()) throw Error(ErrorCode::ExtractorFailure, "empty summary");
        return summary;
    });
}

std::vector<std::string> LlmExtractor::select_relevant_keys(std::string_view case_text,
                                                            std::span<const std::string> candidates, std::size_t cap) {
    if (candidates.empty() || cap == 0) return {};
    return as_extractor_failure("key selection", [&] {
        std::vector<std::string> out;
        for (auto& p : llm::parse_semicolon_list(gateway_->complete(llm::prompt_select_keys(case_text, candidates, cap)))) {
            if (out.size() >= cap) break;
            if (std::find(candidates.begin(), candidates.end(), p) == candidates.end()) continue;
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
        }
        return out;
    });
}

void BuildReport::merge(const BuildReport& other) {
    for (std::size_t k = 0; k < kNodeKindCount; ++k) {
        nodes[k].attempted += other.nodes[k].attempted;
        nodes[k].created += other.nodes[k].created;
        nodes[k].deduped += other.nodes[k].deduped;
    }
    for (std::size_t r = 0; r < kRelationKindCount; ++r) edges_created[r] += other.edges_created[r];
    created_nodes.insert(created_nodes.end(), other.created_nodes.begin(), other.created_nodes.end());
    created_edges.insert(created_edges.end(), other.created_edges.begin(), other.created_edges.end());
    issues.insert(issues.end(), other.issues.begin(), other.issues.end());
    documents += other.documents;
    skipped += other.skipped;
}

BuildReport build_lakg(Graph& graph, std::span<const ArticleRecord> articles, Extractor& extractor) {
    BuildReport report;
    for (const ArticleRecord& a : articles) {
        ++report.documents;
        std::vector<std::string> phrases;
        try {
            phrases = extractor.extract_key_info(a.body);
        } catch (const Error& e) {
            ++report.skipped;
            report.issues.push_back({std::string(error_code_name(ErrorCode::ExtractorFailure)), a.article_number, e.what()});
            continue;
        }

        KindTally& articles_tally = report.nodes[index_of(NodeKind::OriginalArticle)];
        ++articles_tally.attempted;
        NodeId article;
        if (auto existing = graph.find_article(a.article_number)) {
            article = *existing;
            ++articles_tally.deduped;
        } else {
            article = graph.add_node(NodeKind::OriginalArticle, a.body);
            ++articles_tally.created;
            report.created_nodes.push_back(article);
        }
        const NodeId law_id = tally_node(graph, report, NodeKind::LawArticleId, a.article_number);
        tally_edge(graph, &report, article, RelationKind::Id, law_id);

        std::size_t linked = 0;
        for (const std::string& raw : phrases) {
            std::string phrase(text::trim(raw));
            if (phrase.empty()) continue;
            const NodeId key = tally_node(graph, report, NodeKind::KeyInformation, std::move(phrase));
            tally_edge(graph, &report, article, RelationKind::Key, key);
            ++linked;
        }
        if (linked == 0) {
            report.issues.push_back({"no_key_information", a.article_number, "extractor found no key information"});
        }
    }
    return report;
}

BuildReport build_ackg(Graph& graph, std::span<const JudgmentRecord> judgments, Extractor& extractor) {
    BuildReport report;
    for (const JudgmentRecord& j : judgments) {
        ++report.documents;
        std::string specifics;
        try {
            specifics = extractor.summarize_case(j.facts);
        } catch (const Error& e) {
            ++report.skipped;
            report.issues.push_back({std::string(error_code_name(ErrorCode::ExtractorFailure)), j.case_name, e.what()});
            continue;
        }
        if (text::trim(specifics).empty()) specifics = text::truncate_code_points(text::trim(j.facts), 400);

        const NodeId case_id = tally_node(graph, report, NodeKind::CaseName, j.case_name);
        tally_edge(graph, &report, case_id, RelationKind::OccurInTime,
                   tally_node(graph, report, NodeKind::SessionTime, j.session_date));
        tally_edge(graph, &report, case_id, RelationKind::Reason,
                   tally_node(graph, report, NodeKind::ProsecutionReason, j.prosecution_reason));
        tally_edge(graph, &report, case_id, RelationKind::Detail,
                   tally_node(graph, report, NodeKind::CaseSpecifics, std::move(specifics)));

        std::size_t applicable = 0;
        for (const std::string& number : j.cited_articles) {
            auto law_id = graph.find_law_article_id(number);
            if (!law_id || !graph.find_article(number)) {
                report.issues.push_back({std::string(error_code_name(ErrorCode::UnknownArticleCitation)), j.case_name,
                                         "cites article " + number + ", which is not in the graph"});
                continue;
            }
            tally_edge(graph, &report, case_id, RelationKind::ApplicableLaw, *law_id);
            ++applicable;
        }
        if (applicable == 0) {
            report.issues.push_back({"no_applicable_law", j.case_name, "no cited article could be resolved"});
            continue;
        }
        try {
            link_case_keys(graph, case_id, extractor, kCaseKeyCap, j.facts, &report);
        } catch (const Error& e) {
            report.issues.push_back({std::string(error_code_name(ErrorCode::ExtractorFailure)), j.case_name, e.what()});
        }
    }
    return report;
}

std::vector<NodeId> key_pool(const Graph& graph, std::span<const NodeId> law_article_ids) {
    std::set<NodeId> pool;
    for (NodeId law : law_article_ids) {
        for (NodeId article : graph.neighbors(law, RelationKind::Id, Direction::In)) {
            for (NodeId key : graph.neighbors(article, RelationKind::Key, Direction::Out)) pool.insert(key);
        }
    }
    return {pool.begin(), pool.end()};
}

std::vector<NodeId> select_keys_for_articles(const Graph& graph, std::span<const NodeId> law_article_ids,
                                             Extractor& extractor, std::string_view case_text, std::size_t cap) {
    const std::vector<NodeId> pool = key_pool(graph, law_article_ids);
    if (pool.empty() || cap == 0) return {};
    std::map<std::string, NodeId, std::less<>> by_phrase;
    std::vector<std::string> phrases;
    for (NodeId k : pool) {
        by_phrase.emplace(graph.node(k).payload, k);
        phrases.push_back(graph.node(k).payload);
    }
    std::sort(phrases.begin(), phrases.end());

    std::vector<NodeId> out;
    for (const std::string& pick : extractor.select_relevant_keys(case_text, phrases, cap)) {
        auto it = by_phrase.find(text::trim(pick));
        if (it == by_phrase.end()) continue;  // not in the pool: ignored
        if (std::find(out.begin(), out.end(), it->second) != out.end()) continue;
        out.push_back(it->second);
        if (out.size() == cap) break;
    }
    return out;
}

std::vector<NodeId> select_case_keys(const Graph& graph, NodeId case_id, Extractor& extractor, std::size_t cap,
                                     std::string_view case_text) {
    const Node& n = graph.node(case_id);
    if (n.kind != NodeKind::CaseName) {
        throw Error(ErrorCode::WrongKind, "node " + std::to_string(to_underlying(case_id)) + " is not a CaseName");
    }
    const auto laws = graph.neighbors(case_id, RelationKind::ApplicableLaw, Direction::Out);
    const std::string fallback = case_text.empty() ? case_text_from_graph(graph, case_id) : std::string();
    return select_keys_for_articles(graph, laws, extractor, case_text.empty() ? std::string_view(fallback) : case_text,
                                    cap);
}

std::vector<Edge> link_case_keys(Graph& graph, NodeId case_id, Extractor& extractor, std::size_t cap,
                                 std::string_view case_text, BuildReport* report) {
    // Links made earlier count against the cap.
    const auto existing = graph.neighbors(case_id, RelationKind::AgreeWith, Direction::Out);
    if (existing.size() >= cap) return {};
    std::vector<Edge> out;
    for (NodeId key : select_case_keys(graph, case_id, extractor, cap, case_text)) {
        if (std::find(existing.begin(), existing.end(), key) != existing.end()) continue;
        if (existing.size() + out.size() >= cap) break;
        tally_edge(graph, report, case_id, RelationKind::AgreeWith, key);
        out.push_back(Edge{case_id, RelationKind::AgreeWith, key});
    }
    return out;
}

}  // namespace clakg
