#pragma once

#include "statuterank/ensemble.hpp"
#include "statuterank/evalmetrics.hpp"
#include "statuterank/expand.hpp"
#include "statuterank/lexical.hpp"
#include "statuterank/semantic.hpp"
#include "statuterank/tokenize.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace statuterank::pipeline {

namespace fs = std::filesystem;

enum class ScoringMode { Precomputed, Service };

/// Everything a pipeline run needs, read from one JSON file. Relative paths are
/// resolved against the directory holding the config file.
struct PipelineConfig {
    fs::path corpus;
    fs::path queries;
    fs::path qrels;
    fs::path cache_dir;
    fs::path work_dir;
    /// Precomputed semantic tables, used in ScoringMode::Precomputed.
    std::optional<fs::path> origin_scores;
    std::optional<fs::path> reform_scores;

    tokenize::Scheme scheme = tokenize::Scheme::UnicodeBasic;
    lexical::Bm25Params bm25;
    std::size_t pool_size = 100;
    std::size_t export_depth = 30;
    std::vector<std::size_t> recall_levels{1, 3, 5, 10, 30, 50, 100};

    expand::LlmConfig llm;
    ScoringMode scoring_mode = ScoringMode::Precomputed;
    std::optional<semantic::ScoringConfig> origin_service;
    std::optional<semantic::ScoringConfig> reform_service;

    ensemble::GridSpec grid;
    std::optional<ensemble::EnsembleConfig> ensemble;  // fixed weights for evaluate-only runs
    std::uint64_t seed = 42;
    double validation_fraction = 0.2;
    std::string evaluation_slice = "heldout";  // heldout | validation | all

    static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
    static PipelineConfig load(const fs::path& path);

    fs::path index_path() const { return work_dir / "index.json"; }
    fs::path index_stats_path() const { return work_dir / "index_stats.json"; }
    fs::path expanded_queries_path() const { return work_dir / "queries.expanded.jsonl"; }
    fs::path expand_log_path() const { return work_dir / "expand_status.tsv"; }
    fs::path scores_dir() const { return work_dir / "scores"; }
    fs::path score_path(const std::string& scorer) const { return scores_dir() / (scorer + ".tsv"); }
    fs::path rankings_export_path() const { return work_dir / "rankings_top.tsv"; }
    fs::path tuned_config_path() const { return work_dir / "tuned.json"; }
    fs::path reports_dir() const { return work_dir / "reports"; }
};

struct CommandOptions {
    bool no_clobber = false;
    std::optional<int> variant;  // evaluate: 1, 2 or 3; all when unset
    std::ostream* log = nullptr;  // progress messages; silent when null
};

/// Replacement transports, mainly for tests. Unset members are built from config.
struct Services {
    std::shared_ptr<expand::ChatTransport> chat;
    std::shared_ptr<semantic::ScoringTransport> origin;
    std::shared_ptr<semantic::ScoringTransport> reform;
};

struct LengthStats {
    std::size_t count = 0;
    std::size_t min = 0;
    std::size_t max = 0;
    double average = 0.0;
};

LengthStats length_stats(const std::vector<std::size_t>& lengths);

struct IndexSummary {
    LengthStats articles;
    LengthStats queries;
    std::size_t vocabulary = 0;
    bool skipped = false;
};

struct ExpandSummary {
    std::size_t queries = 0;
    std::size_t parse_failures = 0;
    std::size_t failures = 0;  // neither a reply nor a cache entry
    std::size_t empty_reformulations = 0;
    std::size_t network_calls = 0;
    bool skipped = false;
};

struct ScoreSummary {
    std::size_t queries = 0;
    std::map<std::string, std::size_t> rows;  // scorer -> table rows
    bool skipped = false;
};

struct TuneSummary {
    std::vector<std::string> validation_ids;
    std::map<int, ensemble::TuneResult> variants;
    bool skipped = false;
};

struct VariantReport {
    int variant = 0;
    ensemble::EnsembleConfig config;
    eval::EvalReport report;
};

struct EvaluateSummary {
    std::vector<VariantReport> variants;
};

struct RunSummary {
    IndexSummary index;
    ExpandSummary expand;
    ScoreSummary score;
    TuneSummary tune;
    EvaluateSummary evaluate;
};

/// Deterministic split of query ids: returns (train, validation).
/// Ids are ordered by SHA-256 of "seed:id"; the first round(n * fraction) form
/// the validation slice. Throws std::invalid_argument if that slice is empty.
std::pair<std::vector<std::string>, std::vector<std::string>>
split_queries(std::vector<std::string> ids, std::uint64_t seed, double validation_fraction);

/// Scorers used by variant 1 (bm25+origin), 2 (bm25+reform) or 3 (all three).
ensemble::ScorerMask variant_mask(int variant);

IndexSummary cmd_index(const PipelineConfig& config, const CommandOptions& options = {});
ExpandSummary cmd_expand(const PipelineConfig& config, const CommandOptions& options = {},
                         const Services& services = {});
ScoreSummary cmd_score(const PipelineConfig& config, const CommandOptions& options = {},
                       const Services& services = {});
TuneSummary cmd_tune(const PipelineConfig& config, const CommandOptions& options = {});
EvaluateSummary cmd_evaluate(const PipelineConfig& config, const CommandOptions& options = {});
RunSummary run_all(const PipelineConfig& config, const CommandOptions& options = {},
                   const Services& services = {});

/// Loaded score tables and pools for the queries in `ids` (from the work dir).
std::vector<ensemble::QueryCandidates> load_candidates(const PipelineConfig& config,
                                                       const std::vector<std::string>& ids);

} // namespace statuterank::pipeline
