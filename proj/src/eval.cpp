#include "clakg/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "clakg/error.hpp"
#include "clakg/text.hpp"

namespace clakg::eval {

std::size_t SplitPolicy::test_size(std::size_t records) const {
    if (test_count) return *test_count;
    return static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(records)));
}

std::size_t distinct_articles(std::span<const JudgmentRecord> records) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.cited_articles.begin(), r.cited_articles.end());
    return seen.size();
}

Split split(std::span<const JudgmentRecord> records, const SplitPolicy& policy) {
    const std::size_t target = policy.test_size(records.size());
    if (records.size() <= target) {
        throw Error(ErrorCode::TooFewRecords, std::to_string(records.size()) + " records cannot yield a test set of " +
                                                  std::to_string(target) + " with a non-empty train set");
    }

    std::map<std::string, std::vector<std::size_t>> citing;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (const auto& a : records[i].cited_articles) citing[a].push_back(i);
    }
    std::vector<std::string> order;
    for (const auto& [a, v] : citing) order.push_back(a);
    std::stable_sort(order.begin(), order.end(), [&](const std::string& x, const std::string& y) {
        if (citing[x].size() != citing[y].size()) return citing[x].size() < citing[y].size();
        return text::article_number_less(x, y);
    });

    std::vector<bool> in_test(records.size(), false);
    std::set<std::string> covered;
    std::size_t taken = 0;
    for (const std::string& article : order) {
        if (taken == target) break;
        if (covered.contains(article)) continue;
        std::size_t best = records.size();
        std::size_t best_gain = 0;
        for (std::size_t i : citing[article]) {
            if (in_test[i]) continue;
            std::size_t gain = 0;
            for (const auto& a : records[i].cited_articles) gain += covered.contains(a) ? 0 : 1;
            if (gain > best_gain) {
                best = i;
                best_gain = gain;
            }
        }
        if (best == records.size()) continue;
        in_test[best] = true;
        ++taken;
        covered.insert(records[best].cited_articles.begin(), records[best].cited_articles.end());
    }

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!in_test[i]) rest.push_back(i);
    }
    std::mt19937_64 rng(policy.seed);
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t j = 0; taken < target; ++j, ++taken) in_test[rest[j]] = true;

    Split out;
    for (std::size_t i = 0; i < records.size(); ++i) (in_test[i] ? out.test : out.train).push_back(records[i]);
    return out;
}

EvalReport evaluate(const std::string& name, const System& system, std::span<const JudgmentRecord> test,
                    std::span<const JudgmentRecord> train, std::size_t threads) {
    if (test.empty()) throw Error(ErrorCode::TooFewRecords, "evaluation needs at least one test record");

    std::vector<CaseRow> rows(test.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < test.size(); i = next++) {
            const JudgmentRecord& r = test[i];
            CaseRow& row = rows[i];
            row.case_name = r.case_name;
            row.gold = r.cited_articles;
            try {
                row.predicted = system(r.facts);
            } catch (const std::exception& e) {
                row.error = std::string(error_code_name(ErrorCode::SystemFailure)) + ": " + e.what();
            }
            row.hit = !row.predicted.empty() &&
                      std::find(row.gold.begin(), row.gold.end(), row.predicted.front()) != row.gold.end();
            row.exact_set = row.error.empty() && std::set<std::string>(row.predicted.begin(), row.predicted.end()) ==
                                                     std::set<std::string>(row.gold.begin(), row.gold.end());
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, test.size());
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    EvalReport report;
    report.system = name;
    report.total = rows.size();
    for (const CaseRow& row : rows) {
        report.hits += row.hit ? 1 : 0;
        report.exact_hits += row.exact_set ? 1 : 0;
    }
    report.accuracy = static_cast<double>(report.hits) / static_cast<double>(report.total);
    report.exact_set_accuracy = static_cast<double>(report.exact_hits) / static_cast<double>(report.total);

    std::set<std::string> seen_in_train;
    for (const auto& r : train) seen_in_train.insert(r.cited_articles.begin(), r.cited_articles.end());
    std::set<std::string> zero_shot;
    for (const auto& r : test) {
        for (const auto& a : r.cited_articles) {
            if (!seen_in_train.contains(a)) zero_shot.insert(a);
        }
    }
    report.zero_shot_articles = train.empty() ? 0 : zero_shot.size();

    std::stable_sort(rows.begin(), rows.end(),
                     [](const CaseRow& a, const CaseRow& b) { return a.case_name < b.case_name; });
    report.rows = std::move(rows);
    return report;
}

namespace {

std::map<std::string, std::size_t> term_counts(std::string_view s) {
    std::map<std::string, std::size_t> tf;
    for (const auto& t : text::tokenize(s)) ++tf[t.text];
    return tf;
}

}  // namespace

TfidfIndex::TfidfIndex(std::span<const ArticleRecord> articles) {
    std::vector<std::map<std::string, std::size_t>> counts;
    std::map<std::string, std::size_t> df;
    for (const auto& a : articles) {
        numbers_.push_back(a.article_number);
        counts.push_back(term_counts(a.body));
        for (const auto& [term, n] : counts.back()) ++df[term];
    }
    const double n_docs = static_cast<double>(articles.size());
    for (const auto& [term, d] : df) idf_[term] = std::log(n_docs / (1.0 + static_cast<double>(d))) + 1.0;
    for (const auto& tf : counts) {
        auto& v = vectors_.emplace_back();
        double sq = 0.0;
        for (const auto& [term, n] : tf) {
            const double w = static_cast<double>(n) * idf_.at(term);
            v.emplace(term, w);
            sq += w * w;
        }
        norms_.push_back(std::sqrt(sq));
    }
}

double TfidfIndex::idf(const std::string& term) const {
    auto it = idf_.find(term);
    return it == idf_.end() ? 0.0 : it->second;
}

std::map<std::string, double> TfidfIndex::weigh(std::string_view s) const {
    std::map<std::string, double> v;
    for (const auto& [term, n] : term_counts(s)) {
        auto it = idf_.find(term);
        if (it != idf_.end()) v.emplace(term, static_cast<double>(n) * it->second);
    }
    return v;
}

std::vector<std::pair<std::string, double>> TfidfIndex::scores(std::string_view case_text) const {
    if (numbers_.empty()) throw Error(ErrorCode::EmptyIndex, "tf-idf index holds no articles");
    const auto query = weigh(case_text);
    double qn = 0.0;
    for (const auto& [t, w] : query) qn += w * w;
    qn = std::sqrt(qn);

    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < numbers_.size(); ++i) {
        double dot = 0.0;
        for (const auto& [t, w] : query) {
            auto it = vectors_[i].find(t);
            if (it != vectors_[i].end()) dot += w * it->second;
        }
        const double denom = qn * norms_[i];
        out.emplace_back(numbers_[i], denom > 0.0 ? dot / denom : 0.0);
    }
    return out;
}

std::vector<std::string> TfidfIndex::recommend(std::string_view case_text, std::size_t q) const {
    auto s = scores(case_text);
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return text::article_number_less(a.first, b.first);
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size() && i < q; ++i) out.push_back(s[i].first);
    return out;
}

namespace {

std::vector<const EvalReport*> ranked(std::span<const EvalReport> reports) {
    std::vector<const EvalReport*> out;
    for (const auto& r : reports) out.push_back(&r);
    std::stable_sort(out.begin(), out.end(), [](const EvalReport* a, const EvalReport* b) {
        return a->accuracy > b->accuracy;
    });
    return out;
}

}  // namespace

nlohmann::ordered_json report_json(std::span<const EvalReport> reports) {
    nlohmann::ordered_json systems = nlohmann::ordered_json::array();
    for (const EvalReport* r : ranked(reports)) {
        nlohmann::ordered_json s;
        s["system"] = r->system;
        s["accuracy"] = r->accuracy;
        s["hits"] = r->hits;
        s["total"] = r->total;
        s["exact_set_accuracy"] = r->exact_set_accuracy;
        s["zero_shot_articles"] = r->zero_shot_articles;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const CaseRow& row : r->rows) {
            nlohmann::ordered_json j;
            j["case_name"] = row.case_name;
            j["gold"] = row.gold;
            j["predicted"] = row.predicted;
            j["hit"] = row.hit;
            j["exact_set"] = row.exact_set;
            if (!row.error.empty()) j["error"] = row.error;
            rows.push_back(std::move(j));
        }
        s["cases"] = std::move(rows);
        systems.push_back(std::move(s));
    }
    nlohmann::ordered_json doc;
    doc["systems"] = std::move(systems);
    return doc;
}

std::string report_text(std::span<const EvalReport> reports) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %9s %9s %11s\n", "system", "accuracy", "hits", "exact-set");
    out << line;
    for (const EvalReport* r : ranked(reports)) {
        std::snprintf(line, sizeof line, "%-24s %9.3f %4zu/%-4zu %11.3f\n", r->system.c_str(), r->accuracy, r->hits,
                      r->total, r->exact_set_accuracy);
        out << line;
    }
    return out.str();
}

}  // namespace clakg::eval
