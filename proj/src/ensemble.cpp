#include "statuterank/ensemble.hpp"

#include "statuterank/evalmetrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace statuterank::ensemble {

using nlohmann::json;

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

double fused_value(const EnsembleConfig& c, double r_ori, double r_bm25, double r_reform) {
    return c.alpha * r_ori + c.beta * r_bm25 + c.gamma * r_reform;
}

bool ranks_before(const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.article_id < b.article_id;
}

long steps_in_unit(double step, const char* what) {
    if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in (0, 1]");
    const double n = 1.0 / step;
    const long rounded = std::lround(n);
    if (std::abs(n - static_cast<double>(rounded)) > 1e-6)
        throw std::invalid_argument(std::string(what) + " must divide 1 evenly");
    return rounded;
}

} // namespace

void EnsembleConfig::validate() const {
    if (!in_unit(alpha) || !in_unit(beta) || !in_unit(gamma))
        throw std::invalid_argument("ensemble weights must lie in [0, 1]");
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
        throw std::invalid_argument("ensemble weights must sum to 1");
    if (!in_unit(threshold)) throw std::invalid_argument("ensemble threshold must lie in [0, 1]");
}

json EnsembleConfig::to_json() const {
    return {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"threshold", threshold}};
}

EnsembleConfig EnsembleConfig::from_json(const json& j) {
    EnsembleConfig c{j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("gamma").get<double>(),
                     j.at("threshold").get<double>()};
    c.validate();
    return c;
}

std::vector<ScoredId> minmax_normalize(std::span<const ScoredId> scores) {
    std::vector<ScoredId> out(scores.begin(), scores.end());
    if (out.empty()) return out;
    auto [lo, hi] = std::minmax_element(out.begin(), out.end(),
                                        [](const ScoredId& a, const ScoredId& b) { return a.score < b.score; });
    const double min = lo->score, max = hi->score;
    for (auto& s : out) s.score = max == min ? 0.0 : (s.score - min) / (max - min);
    return out;
}

double fuse(const EnsembleConfig& config, double r_ori, double r_bm25, double r_reform) {
    config.validate();
    return fused_value(config, r_ori, r_bm25, r_reform);
}

std::set<std::string> select_relevant(std::span<const ScoredId> ranking, double threshold) {
    if (ranking.empty()) throw std::invalid_argument("select_relevant: empty ranking");
    std::set<std::string> selected;
    for (const auto& s : ranking)
        if (s.score > threshold) selected.insert(s.article_id);
    if (selected.empty()) selected.insert(ranking.front().article_id);
    return selected;
}

std::vector<QueryCandidates> normalize_pools(std::span<const CandidatePool> pools,
                                             const semantic::ScoreTable& origin,
                                             const semantic::ScoreTable& bm25,
                                             const semantic::ScoreTable& reform) {
    std::vector<QueryCandidates> out;
    out.reserve(pools.size());
    for (const auto& pool : pools) {
        if (pool.article_ids.empty())
            throw std::invalid_argument("empty candidate pool for query \"" + pool.query_id + "\"");
        std::unordered_set<std::string> seen;
        std::vector<ScoredId> o, b, r;
        for (const auto& id : pool.article_ids) {
            if (!seen.insert(id).second)
                throw std::invalid_argument("duplicate candidate \"" + id + "\" for query \"" + pool.query_id + "\"");
            o.push_back({id, semantic::get_score(origin, pool.query_id, id)});
            b.push_back({id, semantic::get_score(bm25, pool.query_id, id)});
            r.push_back({id, semantic::get_score(reform, pool.query_id, id)});
        }
        o = minmax_normalize(o);
        b = minmax_normalize(b);
        r = minmax_normalize(r);
        QueryCandidates q{pool.query_id, {}};
        for (std::size_t i = 0; i < pool.article_ids.size(); ++i)
            q.candidates.push_back({pool.article_ids[i], o[i].score, b[i].score, r[i].score});
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<ScoredId> fuse_query(const EnsembleConfig& config, const QueryCandidates& query) {
    config.validate();
    std::vector<ScoredId> ranking;
    ranking.reserve(query.candidates.size());
    for (const auto& c : query.candidates)
        ranking.push_back({c.article_id, fused_value(config, c.origin, c.bm25, c.reform)});
    std::sort(ranking.begin(), ranking.end(), ranks_before);
    return ranking;
}

FusedRanking fuse_rankings(const EnsembleConfig& config, std::span<const QueryCandidates> queries) {
    FusedRanking out;
    for (const auto& q : queries) {
        RankedQuery rq;
        rq.ranking = fuse_query(config, q);
        rq.selected = select_relevant(rq.ranking, config.threshold);
        out.emplace(q.query_id, std::move(rq));
    }
    return out;
}

semantic::ScoreTable to_score_table(const FusedRanking& ranking) {
    semantic::ScoreTable table("final");
    for (const auto& [query_id, rq] : ranking)
        for (const auto& s : rq.ranking) table.insert(query_id, s.article_id, s.score);
    return table;
}

void GridSpec::validate() const {
    steps_in_unit(weight_step, "grid weight_step");
    steps_in_unit(threshold_step, "grid threshold_step");
}

json GridSpec::to_json() const { return {{"weight_step", weight_step}, {"threshold_step", threshold_step}}; }

GridSpec GridSpec::from_json(const json& j) {
    GridSpec g;
    g.weight_step = j.value("weight_step", g.weight_step);
    g.threshold_step = j.value("threshold_step", g.threshold_step);
    g.validate();
    return g;
}

std::vector<std::array<double, 3>> weight_grid(const GridSpec& spec, const ScorerMask& mask) {
    const long n = steps_in_unit(spec.weight_step, "grid weight_step");
    const double dn = static_cast<double>(n);
    std::vector<std::array<double, 3>> points;
    for (long i = 0; i <= n; ++i) {
        if (i > 0 && !mask.origin) break;
        for (long j = 0; i + j <= n; ++j) {
            const long k = n - i - j;
            if ((j > 0 && !mask.bm25) || (k > 0 && !mask.reform)) continue;
            points.push_back({static_cast<double>(i) / dn, static_cast<double>(j) / dn, static_cast<double>(k) / dn});
        }
    }
    if (points.empty()) throw std::invalid_argument("scorer mask admits no weights");
    return points;
}

std::vector<double> threshold_grid(const GridSpec& spec) {
    const long n = steps_in_unit(spec.threshold_step, "grid threshold_step");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) out.push_back(static_cast<double>(k) / static_cast<double>(n));
    return out;
}

namespace {

const std::set<std::string>& gold_for(const corpus::GoldLabels& gold, const std::string& query_id) {
    auto it = gold.find(query_id);
    if (it == gold.end() || it->second.empty())
        throw std::invalid_argument("no gold labels for query \"" + query_id + "\"");
    return it->second;
}

} // namespace

double evaluate_f2(const EnsembleConfig& config, std::span<const QueryCandidates> queries,
                   const corpus::GoldLabels& gold) {
    if (queries.empty()) throw std::invalid_argument("evaluate_f2: no queries");
    double sum = 0.0;
    for (const auto& q : queries) {
        auto selected = select_relevant(fuse_query(config, q), config.threshold);
        sum += eval::prf2(selected, gold_for(gold, q.query_id)).f2;
    }
    return sum / static_cast<double>(queries.size());
}

TuneResult grid_search(std::span<const QueryCandidates> validation, const corpus::GoldLabels& gold,
                       const GridSpec& spec, const ScorerMask& mask, unsigned threads) {
    if (validation.empty()) throw std::invalid_argument("grid_search: empty validation set");
    spec.validate();
    const auto weights = weight_grid(spec, mask);
    const auto thresholds = threshold_grid(spec);

    struct QueryView {
        const QueryCandidates* query;
        const std::set<std::string>* gold;
    };
    std::vector<QueryView> views;
    for (const auto& q : validation) {
        if (q.candidates.empty()) throw std::invalid_argument("empty candidate pool for \"" + q.query_id + "\"");
        views.push_back({&q, &gold_for(gold, q.query_id)});
    }

    struct PointBest {
        double f2 = -1.0;
        double threshold = 0.0;
    };
    std::vector<PointBest> best(weights.size());

    auto evaluate_point = [&](std::size_t w) {
        const EnsembleConfig cfg{weights[w][0], weights[w][1], weights[w][2], 0.0};
        // Per query: fused scores sorted best-first and the running count of gold hits.
        std::vector<std::vector<double>> sorted_scores(views.size());
        std::vector<std::vector<std::size_t>> hits_prefix(views.size());
        for (std::size_t qi = 0; qi < views.size(); ++qi) {
            std::vector<ScoredId> ranking;
            for (const auto& c : views[qi].query->candidates)
                ranking.push_back({c.article_id, fused_value(cfg, c.origin, c.bm25, c.reform)});
            std::sort(ranking.begin(), ranking.end(), ranks_before);
            auto& scores = sorted_scores[qi];
            auto& prefix = hits_prefix[qi];
            prefix.push_back(0);
            for (const auto& s : ranking) {
                scores.push_back(s.score);
                prefix.push_back(prefix.back() + (views[qi].gold->contains(s.article_id) ? 1 : 0));
            }
        }

        PointBest pb;
        for (double t : thresholds) {
            double sum = 0.0;
            for (std::size_t qi = 0; qi < views.size(); ++qi) {
                const auto& scores = sorted_scores[qi];
                // Scores are descending: count of entries strictly above t.
                auto above = static_cast<std::size_t>(
                    std::partition_point(scores.begin(), scores.end(), [t](double s) { return s > t; }) -
                    scores.begin());
                const std::size_t chosen = above == 0 ? 1 : above;
                sum += eval::prf2_counts(hits_prefix[qi][chosen], chosen, views[qi].gold->size()).f2;
            }
            const double f2 = sum / static_cast<double>(views.size());
            if (f2 > pb.f2) pb = {f2, t};
        }
        best[w] = pb;
    };

    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, weights.size()));
    if (workers <= 1) {
        for (std::size_t w = 0; w < weights.size(); ++w) evaluate_point(w);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i) {
            pool.emplace_back([&] {
                for (std::size_t w = next++; w < weights.size(); w = next++) evaluate_point(w);
            });
        }
    }

    // Ordered reduction: weight points are already in lexicographic order.
    TuneResult result;
    result.f2 = -1.0;
    for (std::size_t w = 0; w < weights.size(); ++w) {
        if (best[w].f2 > result.f2) {
            result.f2 = best[w].f2;
            result.config = {weights[w][0], weights[w][1], weights[w][2], best[w].threshold};
        }
    }
    result.points_evaluated = weights.size() * thresholds.size();
    return result;
}

} // namespace statuterank::ensemble
