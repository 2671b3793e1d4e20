#include "clakg/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "clakg/error.hpp"
#include "clakg/prompts.hpp"
#include "clakg/text.hpp"

namespace clakg::pipeline {

std::vector<std::string> Recommendation::numbers() const {
    std::vector<std::string> out;
    for (const auto& a : articles) out.push_back(a.number);
    return out;
}

Pipeline::Pipeline(std::shared_ptr<SharedGraph> graph, std::shared_ptr<const EmbeddingTable> table,
                   std::shared_ptr<const llm::Gateway> gateway, std::shared_ptr<Extractor> extractor, Config config)
    : graph_(std::move(graph)),
      table_(std::move(table)),
      gateway_(std::move(gateway)),
      extractor_(std::move(extractor)),
      config_(config),
      id_rng_(std::random_device{}()) {
    if (!graph_ || !table_ || !gateway_ || !extractor_) throw std::invalid_argument("Pipeline needs all dependencies");
}

Recommendation Pipeline::recommend(std::string_view case_text) {
    Recommendation rec;
    std::vector<llm::CandidateText> candidates;
    std::vector<llm::PrecedentText> precedents;
    graph_->read([&](const Graph& g) {
        rec.keys = retrieval::match_keys(case_text, *gateway_, g, config_.k, config_.inventory_budget);
        if (rec.keys.resolved.empty()) return;
        rec.retrieval = retrieval::candidate_articles(rec.keys, g, *table_, config_.q);
        std::set<NodeId> seen;
        for (const auto& c : rec.retrieval.candidates) {
            candidates.push_back({c.number, g.node(c.article).payload});
            for (const CaseSummary& p : c.precedents) {
                if (precedents.size() >= config_.max_precedents) break;
                if (!seen.insert(p.case_id).second) continue;
                precedents.push_back({p.name, p.session_time, p.reason, p.specifics});
            }
        }
    });
    if (candidates.empty()) {
        rec.no_match = true;
        return rec;
    }

    const llm::ChatRequest request = llm::prompt_recommendation(case_text, candidates, precedents);
    rec.rationale = gateway_->complete(request);
    std::vector<std::string> numbers;
    try {
        numbers = llm::parse_article_ids(rec.rationale);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoArticleFound) throw;
    }
    for (std::string& n : numbers) {
        const bool grounded = std::any_of(candidates.begin(), candidates.end(),
                                          [&](const llm::CandidateText& c) { return c.number == n; });
        rec.articles.push_back({std::move(n), grounded});
    }
    rec.session_id = open_session(request.system, {{"user", request.user}, {"assistant", rec.rationale}});
    return rec;
}

namespace {

std::string required(const std::string& value, const char* field) {
    std::string v(text::trim(value));
    if (v.empty()) throw Error(ErrorCode::MissingField, std::string("feedback field \"") + field + "\" is empty");
    return v;
}

}  // namespace

FeedbackReport Pipeline::apply_feedback(const FeedbackEvent& event, const std::function<void(const Graph&)>& commit) {
    const std::string case_text = required(event.case_text, "case_text");
    const std::string case_name = required(event.case_name, "case_name");
    const std::string date = required(event.session_date, "session_date");
    const std::string reason = required(event.prosecution_reason, "prosecution_reason");
    if (!text::is_iso_date(date)) throw Error(ErrorCode::BadDate, "session_date \"" + date + "\" is not YYYY-MM-DD");
    std::vector<std::string> confirmed;
    for (const std::string& raw : event.confirmed_articles) {
        std::string n(text::trim(raw));
        if (std::find(confirmed.begin(), confirmed.end(), n) == confirmed.end()) confirmed.push_back(std::move(n));
    }
    if (confirmed.empty()) throw Error(ErrorCode::MissingField, "feedback confirms no articles");

    return graph_->write([&](Graph& live) {
        std::vector<NodeId> laws;
        std::vector<std::string> unknown;
        for (const std::string& n : confirmed) {
            auto law = live.find_law_article_id(n);
            if (law && live.find_article(n)) {
                laws.push_back(*law);
            } else {
                unknown.push_back(n);
            }
        }
        if (!unknown.empty()) {
            std::string list;
            for (const auto& n : unknown) list += (list.empty() ? "" : ", ") + n;
            throw Error(ErrorCode::UnknownArticle, "unknown article number(s): " + list);
        }

        // Everything that can fail runs before the graph changes.
        std::string specifics;
        std::vector<NodeId> keys;
        try {
            specifics = std::string(text::trim(extractor_->summarize_case(case_text)));
            keys = select_keys_for_articles(live, laws, *extractor_, case_text, kCaseKeyCap);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ExtractorFailure) throw;
            throw Error(ErrorCode::ExtractorFailure, e.what());
        }
        if (specifics.empty()) specifics = text::truncate_code_points(case_text, 400);

        Graph next = live;
        FeedbackReport report;
        report.before = live.stats();
        auto node = [&](NodeKind kind, std::string payload) {
            const bool fresh = !next.would_dedup(kind, payload);
            const NodeId id = next.add_node(kind, std::move(payload));
            if (fresh) report.created_nodes.push_back(id);
            return id;
        };
        auto edge = [&](NodeId h, RelationKind r, NodeId t) {
            if (!next.contains(Edge{h, r, t})) report.created_edges.push_back(next.add_edge(h, r, t));
        };
        report.case_id = node(NodeKind::CaseName, case_name);
        edge(report.case_id, RelationKind::OccurInTime, node(NodeKind::SessionTime, date));
        edge(report.case_id, RelationKind::Reason, node(NodeKind::ProsecutionReason, reason));
        edge(report.case_id, RelationKind::Detail, node(NodeKind::CaseSpecifics, specifics));
        for (NodeId law : laws) edge(report.case_id, RelationKind::ApplicableLaw, law);
        for (NodeId key : keys) edge(report.case_id, RelationKind::AgreeWith, key);
        report.after = next.stats();

        for (NodeId id : report.created_nodes) {
            if (!table_->find(id)) report.unembedded_nodes.push_back(id);
        }
        report.embeddings_stale = !report.unembedded_nodes.empty();

        if (commit) commit(next);
        live = std::move(next);
        return report;
    });
}

std::string Pipeline::open_session(std::string system, std::vector<llm::Turn> transcript) {
    auto slot = std::make_shared<SessionSlot>();
    slot->session.system = std::move(system);
    slot->session.transcript = std::move(transcript);

    std::lock_guard lock(sessions_mutex_);
    std::string id;
    do {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
        id = buf;
    } while (sessions_.contains(id));
    slot->session.id = id;
    sessions_.emplace(id, std::move(slot));
    session_order_.push_back(id);
    while (session_order_.size() > config_.max_sessions) {
        sessions_.erase(session_order_.front());
        session_order_.erase(session_order_.begin());
    }
    return id;
}

std::shared_ptr<Pipeline::SessionSlot> Pipeline::find_slot(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session \"" + id + "\"");
    return it->second;
}

std::string Pipeline::followup(const std::string& session_id, std::string_view question) {
    const std::shared_ptr<SessionSlot> slot = find_slot(session_id);
    const std::string q(text::trim(question));
    if (q.empty()) throw Error(ErrorCode::MissingField, "follow-up question is empty");

    std::unique_lock lock(slot->mutex);
    const std::uint64_t ticket = slot->next_ticket++;
    slot->turn.wait(lock, [&] { return slot->serving == ticket; });
    struct Advance {
        SessionSlot& s;
        ~Advance() {
            ++s.serving;
            s.turn.notify_all();
        }
    } advance{*slot};

    // The model call runs with the slot unlocked; the ticket keeps other
    // callers of this session waiting their turn.
    const llm::ChatRequest request = llm::prompt_followup(slot->session.system, slot->session.transcript, q);
    lock.unlock();
    std::string answer;
    try {
        answer = gateway_->complete(request);
    } catch (...) {
        lock.lock();
        throw;
    }
    lock.lock();
    slot->session.transcript.push_back({"user", q});
    slot->session.transcript.push_back({"assistant", answer});
    return answer;
}

std::optional<Session> Pipeline::session(const std::string& session_id) const {
    std::shared_ptr<SessionSlot> slot;
    try {
        slot = find_slot(session_id);
    } catch (const Error&) {
        return std::nullopt;
    }
    std::lock_guard lock(slot->mutex);
    return slot->session;
}

std::size_t Pipeline::session_count() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

std::vector<ArticleRecord> article_records(const Graph& graph) {
    std::vector<ArticleRecord> out;
    for (NodeId a : graph.nodes_of_kind(NodeKind::OriginalArticle)) {
        out.push_back({graph.article_number(a), graph.node(a).payload});
    }
    return out;
}

}  // namespace clakg::pipeline
