#pragma once
// Train/test splitting, accuracy evaluation and the tf-idf baseline.
//
// A prediction is a hit when the system's first article is among the
// record's cited articles. Exact-set match is reported alongside.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clakg/ingest.hpp"

namespace clakg::eval {

struct SplitPolicy {
    std::optional<std::size_t> test_count;  // takes precedence over test_fraction
    double test_fraction = 0.15;
    std::uint64_t seed = 0;

    std::size_t test_size(std::size_t records) const;
};

struct Split {
    std::vector<JudgmentRecord> train;
    std::vector<JudgmentRecord> test;
};

// Articles are visited by ascending number of citing records (ties by
// article number). For each article the test set does not cover yet, the
// citing train record covering the most uncovered articles (ties by input
// order) moves to test. Remaining slots are filled by a seeded shuffle.
// TooFewRecords unless the input is larger than the test size.
Split split(std::span<const JudgmentRecord> records, const SplitPolicy& policy);

std::size_t distinct_articles(std::span<const JudgmentRecord> records);

using System = std::function<std::vector<std::string>(std::string_view case_text)>;

struct CaseRow {
    std::string case_name;
    std::vector<std::string> gold;
    std::vector<std::string> predicted;
    bool hit = false;
    bool exact_set = false;
    std::string error;  // set when the system threw; counted as a miss
};

struct EvalReport {
    std::string system;
    std::size_t hits = 0;
    std::size_t exact_hits = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
    double exact_set_accuracy = 0.0;
    std::size_t zero_shot_articles = 0;  // cited in test, never in train
    std::vector<CaseRow> rows;           // sorted by case name
};

// TooFewRecords when `test` is empty. Cases are spread over `threads`
// workers; the report does not depend on the thread count.
EvalReport evaluate(const std::string& name, const System& system, std::span<const JudgmentRecord> test,
                    std::span<const JudgmentRecord> train = {}, std::size_t threads = 1);

// Raw term counts weighted by ln(N / (1 + df)) + 1, where N and df count
// article bodies only. Terms absent from every body are ignored.
class TfidfIndex {
public:
    explicit TfidfIndex(std::span<const ArticleRecord> articles);

    // Top q article numbers by cosine with the case text, ties by ascending
    // article number. EmptyIndex when built from no articles.
    std::vector<std::string> recommend(std::string_view case_text, std::size_t q = 5) const;

    // Cosine score per article number, zero when either side has no terms.
    std::vector<std::pair<std::string, double>> scores(std::string_view case_text) const;

    double idf(const std::string& term) const;
    std::size_t size() const { return numbers_.size(); }
    const std::vector<std::string>& numbers() const { return numbers_; }

private:
    std::map<std::string, double> idf_;
    std::vector<std::string> numbers_;
    std::vector<std::map<std::string, double>> vectors_;
    std::vector<double> norms_;

    std::map<std::string, double> weigh(std::string_view text) const;
};

nlohmann::ordered_json report_json(std::span<const EvalReport> reports);
std::string report_text(std::span<const EvalReport> reports);

}  // namespace clakg::eval
