#pragma once

#include "statuterank/corpus.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace statuterank::eval {

struct Prf2 {
    double precision = 0.0;
    double recall = 0.0;
    double f2 = 0.0;

    bool operator==(const Prf2&) const = default;
};

/// 5PR / (4P + R), with F2 = 0 when P = R = 0.
double f2_measure(double precision, double recall);

/// Precision, recall and F2 from raw counts. Throws std::invalid_argument if gold_size == 0.
Prf2 prf2_counts(std::size_t hits, std::size_t predicted_size, std::size_t gold_size);

/// Throws std::invalid_argument when `gold` is empty.
Prf2 prf2(const std::set<std::string>& predicted, const std::set<std::string>& gold);

struct EvalReport {
    std::map<std::string, Prf2> per_query;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f2 = 0.0;
    std::size_t queries = 0;

    nlohmann::json to_json() const;
    /// Aligned plain-text table with F2, P and R columns.
    std::string to_table(const std::string& title) const;
};

/// Unweighted means; note macro F2 is not F2 of the macro P and R.
/// Throws std::invalid_argument for zero queries.
EvalReport macro_average(const std::map<std::string, Prf2>& per_query);

/// Scores predictions for every query in `gold` (missing predictions count as empty).
EvalReport evaluate(const std::map<std::string, std::set<std::string>>& predicted,
                    const corpus::GoldLabels& gold);

struct RecallAtK {
    double macro = 0.0;  // mean over queries of per-query recall
    double micro = 0.0;  // total hits over total gold articles
};

/// Recall of the gold sets within each query's first k ranked articles.
/// Throws std::invalid_argument if k == 0 or a gold query has no ranking.
RecallAtK recall_at_k(const std::map<std::string, std::vector<std::string>>& rankings,
                      const corpus::GoldLabels& gold, std::size_t k);

} // namespace statuterank::eval
