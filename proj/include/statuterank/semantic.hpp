#pragma once

#include "statuterank/http_client.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace statuterank::semantic {

using PairKey = std::pair<std::string, std::string>;  // (query_id, article_id)

/// Scores of one scorer ("origin", "reform", "bm25", "final") per (query, article).
class ScoreTable {
public:
    ScoreTable() = default;
    explicit ScoreTable(std::string scorer_name) : scorer_name_(std::move(scorer_name)) {}

    /// Throws std::invalid_argument on a duplicate key or a non-finite score.
    void insert(std::string query_id, std::string article_id, double score);

    std::optional<double> find(const std::string& query_id, const std::string& article_id) const;

    const std::string& scorer_name() const noexcept { return scorer_name_; }
    const std::map<PairKey, double>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    bool operator==(const ScoreTable&) const = default;

private:
    std::string scorer_name_;
    std::map<PairKey, double> entries_;
};

/// Stored score, or 0.0 for unscored pairs.
double get_score(const ScoreTable& table, const std::string& query_id, const std::string& article_id);

/// TSV `query_id<TAB>article_id<TAB>score`, no header. Throws DataError with the line number.
ScoreTable parse_scores(std::istream& in, std::string scorer_name);
ScoreTable load_scores(const std::filesystem::path& path, std::string scorer_name);
/// Scores are written with enough digits to round-trip exactly.
void write_scores(std::ostream& out, const ScoreTable& table);
void save_scores(const std::filesystem::path& path, const ScoreTable& table);

struct ScorePair {
    std::string query_id;
    std::string article_id;
    std::string query_text;
    std::string article_text;
};

/// Scores one batch of (query, article) texts; must return one score per pair, in order.
class ScoringTransport {
public:
    virtual ~ScoringTransport() = default;
    virtual std::vector<double> score(std::span<const ScorePair> batch) = 0;
};

/// POST {"pairs":[{"query","article"}]} -> {"scores":[...]}.
class HttpScoringTransport final : public ScoringTransport {
public:
    explicit HttpScoringTransport(http::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<double> score(std::span<const ScorePair> batch) override;

private:
    http::Endpoint endpoint_;
};

struct ScoringConfig {
    http::Endpoint endpoint;
    std::size_t batch_size = 32;
    std::size_t max_in_flight = 1;

    static ScoringConfig from_json(const nlohmann::json& j);
};

/// Scores every pair in batches of `batch_size`, up to `max_in_flight` batches at
/// a time. The merged table does not depend on batching or scheduling.
///
/// Throws std::invalid_argument for an empty pair list or duplicate keys, and
/// TransportError when a batch fails, returns the wrong number of scores, or
/// returns a score outside [0, 1]. The message names the failing batch.
ScoreTable request_scores(std::span<const ScorePair> pairs, ScoringTransport& transport,
                          std::string scorer_name, std::size_t batch_size = 32,
                          std::size_t max_in_flight = 1);

ScoreTable request_scores(std::span<const ScorePair> pairs, const ScoringConfig& config,
                          std::string scorer_name);

} // namespace statuterank::semantic
