#include "statuterank/ensemble.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace statuterank;
using namespace statuterank::ensemble;

namespace {

std::vector<ScoredId> scored(std::initializer_list<std::pair<const char*, double>> xs) {
    std::vector<ScoredId> out;
    for (auto [id, s] : xs) out.push_back({id, s});
    return out;
}

std::vector<std::string> ids_of(const std::vector<ScoredId>& xs) {
    std::vector<std::string> out;
    for (const auto& x : xs) out.push_back(x.article_id);
    return out;
}

} // namespace

TEST(MinMax, ScalesToUnitInterval) {
    auto n = minmax_normalize(scored({{"a", 2.0}, {"b", 4.0}, {"c", 3.0}}));
    EXPECT_EQ(n[0].score, 0.0);
    EXPECT_EQ(n[1].score, 1.0);
    EXPECT_EQ(n[2].score, 0.5);
    EXPECT_EQ(ids_of(n), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(MinMax, ConstantAndSingletonInputsBecomeZero) {
    for (const auto& s : minmax_normalize(scored({{"a", 0.7}, {"b", 0.7}}))) EXPECT_EQ(s.score, 0.0);
    EXPECT_EQ(minmax_normalize(scored({{"a", 12.5}}))[0].score, 0.0);
    EXPECT_TRUE(minmax_normalize(std::vector<ScoredId>{}).empty());
}

TEST(Fuse, WeightedSumWithValidation) {
    EXPECT_DOUBLE_EQ(fuse({0.5, 0.3, 0.2, 0.5}, 1.0, 0.5, 0.0), 0.65);
    EXPECT_THROW(fuse({0.5, 0.5, 0.5, 0.5}, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(fuse({1.2, -0.2, 0.0, 0.5}, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(fuse({1.0, 0.0, 0.0, 1.5}, 1, 1, 1), std::invalid_argument);
}

TEST(Select, StrictlyAboveThresholdWithTopOneFallback) {
    auto ranking = scored({{"x", 0.9}, {"y", 0.5}, {"z", 0.2}});
    EXPECT_EQ(select_relevant(ranking, 0.5), (std::set<std::string>{"x"}));
    EXPECT_EQ(select_relevant(ranking, 0.1), (std::set<std::string>{"x", "y", "z"}));
    EXPECT_EQ(select_relevant(ranking, 0.95), (std::set<std::string>{"x"}));
    EXPECT_THROW(select_relevant(std::vector<ScoredId>{}, 0.5), std::invalid_argument);
}

TEST(NormalizePools, MissingScoresCountAsZeroBeforeScaling) {
    semantic::ScoreTable origin("origin"), bm25("bm25"), reform("reform");
    origin.insert("q", "a", 0.9);
    origin.insert("q", "b", 0.1);
    bm25.insert("q", "a", 3.0);
    bm25.insert("q", "b", 7.0);
    bm25.insert("q", "c", 5.0);
    std::vector<CandidatePool> pools{{"q", {"a", "b", "c"}}};
    auto qc = normalize_pools(pools, origin, bm25, reform);
    ASSERT_EQ(qc.size(), 1u);
    const auto& c = qc[0].candidates;
    EXPECT_EQ(c[0].origin, 1.0);
    EXPECT_DOUBLE_EQ(c[1].origin, 0.1 / 0.9);
    EXPECT_EQ(c[2].origin, 0.0);
    EXPECT_EQ(c[0].bm25, 0.0);
    EXPECT_EQ(c[1].bm25, 1.0);
    EXPECT_EQ(c[2].bm25, 0.5);
    for (const auto& x : c) EXPECT_EQ(x.reform, 0.0);

    std::vector<CandidatePool> dup{{"q", {"a", "a"}}};
    EXPECT_THROW(normalize_pools(dup, origin, bm25, reform), std::invalid_argument);
    std::vector<CandidatePool> empty{{"q", {}}};
    EXPECT_THROW(normalize_pools(empty, origin, bm25, reform), std::invalid_argument);
}

TEST(FuseRankings, TiesResolvedByArticleId) {
    QueryCandidates q{"q", {{"b", 0.5, 0, 0}, {"a", 0.5, 0, 0}, {"c", 1.0, 0, 0}}};
    auto r = fuse_query({1.0, 0.0, 0.0, 0.5}, q);
    EXPECT_EQ(ids_of(r), (std::vector<std::string>{"c", "a", "b"}));
    std::vector<QueryCandidates> qs{q};
    auto fused = fuse_rankings({1.0, 0.0, 0.0, 0.5}, qs);
    EXPECT_EQ(fused.at("q").selected, (std::set<std::string>{"c"}));
    auto table = to_score_table(fused);
    EXPECT_EQ(table.scorer_name(), "final");
    EXPECT_EQ(table.find("q", "a"), 0.5);
}

TEST(Grid, SimplexPointsInLexicographicOrder) {
    auto g = weight_grid({0.5, 0.25});
    std::vector<std::array<double, 3>> want{{0, 0, 1}, {0, 0.5, 0.5}, {0, 1, 0}, {0.5, 0, 0.5}, {0.5, 0.5, 0}, {1, 0, 0}};
    EXPECT_EQ(g, want);
    EXPECT_EQ(weight_grid({}).size(), 231u);  // (n + 1)(n + 2) / 2 with n = 20
    EXPECT_EQ(threshold_grid({0.5, 0.25}), (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
    EXPECT_EQ(threshold_grid({}).size(), 100u);
    for (const auto& w : weight_grid({})) EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
}

TEST(Grid, MaskedVariantsStayOnTheirEdge) {
    auto v1 = weight_grid({}, {true, true, false});
    EXPECT_EQ(v1.size(), 21u);
    for (const auto& w : v1) EXPECT_EQ(w[2], 0.0);
    auto v2 = weight_grid({}, {false, true, true});
    EXPECT_EQ(v2.size(), 21u);
    for (const auto& w : v2) EXPECT_EQ(w[0], 0.0);
    EXPECT_EQ(weight_grid({}, {false, false, true}).size(), 1u);
    EXPECT_THROW(weight_grid({}, {false, false, false}), std::invalid_argument);
}

TEST(Grid, StepsMustDivideOne) {
    EXPECT_THROW(GridSpec({0.3, 0.01}).validate(), std::invalid_argument);
    EXPECT_THROW(GridSpec({0.05, 0.0}).validate(), std::invalid_argument);
    EXPECT_NO_THROW(GridSpec({1.0, 1.0}).validate());
}

TEST(GridSearch, UnitStepPicksASimplexCorner) {
    std::mt19937 rng(5);
    auto d = gen::oracle_pools(rng, 6, 20, "bm25");
    auto r = grid_search(d.queries, d.gold, {1.0, 0.01});
    EXPECT_EQ(r.config.alpha + r.config.beta + r.config.gamma, 1.0);
    EXPECT_EQ(r.config.beta, 1.0);
    EXPECT_EQ(r.f2, 1.0);
}

TEST(GridSearch, EmptyValidationIsAnError) {
    EXPECT_THROW(grid_search({}, {}, {}), std::invalid_argument);
}

TEST(GridSearchProperty, FastPathAgreesWithDirectEvaluation) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        auto d = gen::oracle_pools(rng, 4, 15, "origin");
        // Scramble so no scorer is perfect.
        for (auto& q : d.queries)
            for (auto& c : q.candidates) c.origin = gen::uniform(rng);
        GridSpec spec{0.1, 0.05};
        auto best = grid_search(d.queries, d.gold, spec, {}, 3);
        EXPECT_NEAR(evaluate_f2(best.config, d.queries, d.gold), best.f2, 1e-12);
        for (const auto& w : weight_grid(spec))
            for (double t : threshold_grid(spec))
                ASSERT_LE(evaluate_f2({w[0], w[1], w[2], t}, d.queries, d.gold), best.f2 + 1e-12);
        // Thread count does not change the answer.
        auto single = grid_search(d.queries, d.gold, spec, {}, 1);
        EXPECT_EQ(single.config, best.config);
        EXPECT_EQ(single.f2, best.f2);
    }
}

// Rescaling one scorer's raw values by a positive affine map leaves the fused
// order unchanged, because each scorer is min-max normalised per query first.
TEST(NormalizeProperty, FusedOrderInvariantUnderAffineRescaling) {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        auto d = gen::oracle_pools(rng, 3, 12, "reform");
        EnsembleConfig cfg{0.2, 0.3, 0.5, 0.4};
        const double a = gen::uniform(rng, 0.01, 100.0), b = gen::uniform(rng, -50.0, 50.0);
        semantic::ScoreTable scaled("bm25");
        for (const auto& [k, v] : d.bm25.entries()) scaled.insert(k.first, k.second, a * v + b);
        auto before = normalize_pools(d.pools, d.origin, d.bm25, d.reform);
        auto after = normalize_pools(d.pools, d.origin, scaled, d.reform);
        for (std::size_t q = 0; q < before.size(); ++q) {
            auto r1 = fuse_query(cfg, before[q]), r2 = fuse_query(cfg, after[q]);
            for (std::size_t i = 0; i < r1.size(); ++i) {
                if (r1[i].article_id != r2[i].article_id) ASSERT_NEAR(r1[i].score, r2[i].score, 1e-9);
            }
        }
    }
}

TEST(NormalizeProperty, MatchesLongDoubleOracle) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoredId> xs;
        std::vector<double> raw;
        int n = std::uniform_int_distribution<int>(1, 30)(rng);
        for (int i = 0; i < n; ++i) {
            double v = trial % 10 == 0 ? 3.0 : gen::uniform(rng, -1e3, 1e3);
            xs.push_back({std::to_string(i), v});
            raw.push_back(v);
        }
        auto got = minmax_normalize(xs);
        auto want = oracle::minmax(raw);
        for (int i = 0; i < n; ++i) {
            ASSERT_GE(got[i].score, 0.0);
            ASSERT_LE(got[i].score, 1.0);
            ASSERT_NEAR(got[i].score, want[i], 1e-12);
        }
    }
}

TEST(EnsembleConfig, JsonRoundTrip) {
    EnsembleConfig c{0.25, 0.5, 0.25, 0.37};
    EXPECT_EQ(EnsembleConfig::from_json(c.to_json()), c);
    EXPECT_THROW(EnsembleConfig::from_json({{"alpha", 1}, {"beta", 1}, {"gamma", 0}, {"threshold", 0}}),
                 std::invalid_argument);
}
