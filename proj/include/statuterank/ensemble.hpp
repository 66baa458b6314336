#pragma once

#include "statuterank/corpus.hpp"
#include "statuterank/semantic.hpp"

#include <array>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace statuterank::ensemble {

/// Weights of the origin, bm25 and reform scores plus the selection threshold.
struct EnsembleConfig {
    double alpha = 1.0 / 3;  // origin-query semantic scorer
    double beta = 1.0 / 3;   // BM25 on the term-expanded query
    double gamma = 1.0 / 3;  // reformulated-query semantic scorer
    double threshold = 0.5;

    /// Throws std::invalid_argument unless every field is in [0, 1] and the
    /// weights sum to 1 within 1e-9.
    void validate() const;

    nlohmann::json to_json() const;
    static EnsembleConfig from_json(const nlohmann::json& j);

    bool operator==(const EnsembleConfig&) const = default;
};

struct ScoredId {
    std::string article_id;
    double score;

    bool operator==(const ScoredId&) const = default;
};

/// (s - min) / (max - min); all 0.0 when max == min. Order is preserved.
std::vector<ScoredId> minmax_normalize(std::span<const ScoredId> scores);

/// alpha * r_ori + beta * r_bm25 + gamma * r_reform. Validates `config`.
double fuse(const EnsembleConfig& config, double r_ori, double r_bm25, double r_reform);

/// Articles scoring strictly above `threshold`; the top-ranked article alone when
/// none does. `ranking` must be sorted best-first. Throws std::invalid_argument if empty.
std::set<std::string> select_relevant(std::span<const ScoredId> ranking, double threshold);

/// One candidate with its three per-query min-max-normalized scores.
struct Candidate {
    std::string article_id;
    double origin = 0.0;
    double bm25 = 0.0;
    double reform = 0.0;
};

struct QueryCandidates {
    std::string query_id;
    std::vector<Candidate> candidates;
};

/// Candidate pool of one query (article ids, typically the BM25 top-K).
struct CandidatePool {
    std::string query_id;
    std::vector<std::string> article_ids;
};

/// Looks up each pool member in the three tables (absent pairs score 0.0) and
/// min-max normalizes each scorer within the pool. Empty pools are rejected.
std::vector<QueryCandidates> normalize_pools(std::span<const CandidatePool> pools,
                                             const semantic::ScoreTable& origin,
                                             const semantic::ScoreTable& bm25,
                                             const semantic::ScoreTable& reform);

struct RankedQuery {
    std::vector<ScoredId> ranking;  // descending fused score, ties ascending article id
    std::set<std::string> selected;
};

using FusedRanking = std::map<std::string, RankedQuery>;

/// Sorted fused list for one query.
std::vector<ScoredId> fuse_query(const EnsembleConfig& config, const QueryCandidates& query);

FusedRanking fuse_rankings(const EnsembleConfig& config, std::span<const QueryCandidates> queries);

/// Fused scores as a "final" ScoreTable.
semantic::ScoreTable to_score_table(const FusedRanking& ranking);

/// Which scorers a search may give non-zero weight to.
struct ScorerMask {
    bool origin = true;
    bool bm25 = true;
    bool reform = true;

    bool operator==(const ScorerMask&) const = default;
};

struct GridSpec {
    double weight_step = 0.05;
    double threshold_step = 0.01;

    /// Throws std::invalid_argument unless both steps are in (0, 1] and divide 1 evenly.
    void validate() const;
    nlohmann::json to_json() const;
    static GridSpec from_json(const nlohmann::json& j);
};

/// Every (alpha, beta, gamma) on the simplex at `weight_step` allowed by `mask`,
/// in lexicographic order.
std::vector<std::array<double, 3>> weight_grid(const GridSpec& spec, const ScorerMask& mask = {});

/// k * threshold_step for k = 0 .. (1/threshold_step - 1).
std::vector<double> threshold_grid(const GridSpec& spec);

/// Macro-averaged F2 of `config` over the queries (each must have gold labels).
double evaluate_f2(const EnsembleConfig& config, std::span<const QueryCandidates> queries,
                   const corpus::GoldLabels& gold);

struct TuneResult {
    EnsembleConfig config;
    double f2 = 0.0;
    std::size_t points_evaluated = 0;
};

/// Exhaustive search over weight_grid x threshold_grid maximizing macro F2.
/// Ties go to the lexicographically smallest (alpha, beta, gamma, threshold).
/// Weight points are evaluated on up to `threads` workers (0 = hardware);
/// the reduction is ordered, so the result does not depend on scheduling.
/// Throws std::invalid_argument for an empty set or a query without gold labels.
TuneResult grid_search(std::span<const QueryCandidates> validation, const corpus::GoldLabels& gold,
                       const GridSpec& spec = {}, const ScorerMask& mask = {},
                       unsigned threads = 0);

} // namespace statuterank::ensemble
