// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.
#include "statuterank/ensemble.hpp"
#include "statuterank/evalmetrics.hpp"
#include "statuterank/lexical.hpp"
#include "statuterank/pipeline.hpp"

#include "generators.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace statuterank;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int digits = 6) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

std::string sci(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::scientific << v;
    return s.str();
}

const fs::path kToyDir = STATUTERANK_TOY_DIR;

pipeline::PipelineConfig toy_config(const fs::path& work_dir) {
    auto c = pipeline::PipelineConfig::load(kToyDir / "config.json");
    c.work_dir = work_dir;
    return c;
}

// ---------------------------------------------------------------------------

Outcome bm25_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(20240601);
    std::size_t scores_checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        auto articles = gen::corpus(rng, 20, 30);
        lexical::Bm25Params params{gen::uniform(rng, 0.5, 2.0), gen::uniform(rng)};
        if (trial % 2 == 0) params = {};
        auto index = lexical::InvertedIndex::build(articles, tokenize::Scheme::UnicodeBasic);
        std::vector<oracle::Doc> docs;
        std::vector<std::string> ids;
        for (const auto& a : articles) {
            docs.push_back(tokenize::tokenize(a.text, tokenize::Scheme::UnicodeBasic));
            ids.push_back(a.id);
        }
        for (int q = 0; q < 5; ++q) {
            auto query = gen::tokens(rng, 32, 1, 6);
            auto expected = oracle::bm25(docs, query, params.k1, params.b);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const double got = lexical::bm25_score(index, params, query, ids[i]);
                worst = std::max(worst, std::abs(got - expected[i]));
                ++scores_checked;
            }
            const std::size_t k = 1 + rng() % 25;
            auto want = oracle::rank(ids, expected, k);
            auto got = lexical::top_k(index, params, query, k);
            if (got.size() != want.size()) return fail("top_k length differs on trial " + std::to_string(trial));
            for (std::size_t i = 0; i < got.size(); ++i)
                if (got[i].article_id != want[i].first)
                    return fail("top_k order differs on trial " + std::to_string(trial) + " at rank " + std::to_string(i + 1));
        }
    }
    const double secs = seconds_since(t0);
    std::string detail = std::to_string(scores_checked) + " scores, max |diff| " + sci(worst) + ", " +
                         num(secs, 2) + " s";
    if (worst > 1e-9) return fail(detail);
    if (secs >= 10.0) return fail("too slow: " + detail);
    return pass(detail);
}

Outcome metric_hand_checks() {
    const double f = eval::f2_measure(0.8, 0.9);
    if (std::abs(f - 0.878049) > 1e-6) return fail("F2(0.8, 0.9) = " + num(f, 9));
    for (double p : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        if (std::abs(eval::f2_measure(p, p) - p) > 1e-15) return fail("F2(P, P) != P at P=" + num(p, 2));
    }
    if (eval::f2_measure(0.0, 0.0) != 0.0) return fail("F2(0, 0) != 0");
    return pass("F2(0.8, 0.9) = " + num(f, 6) + "; F2(P, P) = P; F2(0, 0) = 0");
}

Outcome fusion_identity() {
    testutil::TempDir work;
    auto c = toy_config(work.path());
    pipeline::cmd_index(c);
    pipeline::cmd_expand(c);
    pipeline::cmd_score(c);
    const auto origin = semantic::load_scores(c.score_path("origin"), "origin");
    const auto bm25 = semantic::load_scores(c.score_path("bm25"), "bm25");

    std::vector<std::string> ids;
    for (const auto& q : corpus::load_queries(c.expanded_queries_path())) ids.push_back(q.id);
    const auto candidates = pipeline::load_candidates(c, ids);
    const auto fused = ensemble::fuse_rankings({1.0, 0.0, 0.0, 0.5}, candidates);

    std::size_t compared = 0;
    for (const auto& qc : candidates) {
        std::vector<std::pair<std::string, double>> expected;
        for (const auto& cand : qc.candidates)
            expected.emplace_back(cand.article_id, semantic::get_score(origin, qc.query_id, cand.article_id));
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        const auto& ranking = fused.at(qc.query_id).ranking;
        if (ranking.size() != expected.size()) return fail("pool size mismatch for " + qc.query_id);
        for (std::size_t i = 0; i < ranking.size(); ++i)
            if (ranking[i].article_id != expected[i].first)
                return fail("order differs for " + qc.query_id + " at rank " + std::to_string(i + 1));
        ++compared;
    }
    return pass(std::to_string(compared) + " toy queries, fused order equals origin order");
}

Outcome normalization_properties() {
    std::mt19937 rng(77);
    const std::array<std::string, 3> scorers{"origin", "bm25", "reform"};
    for (int trial = 0; trial < 100; ++trial) {
        auto d = gen::oracle_pools(rng, 4, 25, scorers[trial % 3]);
        for (const auto& q : d.queries)
            for (const auto& c : q.candidates)
                for (double v : {c.origin, c.bm25, c.reform})
                    if (v < 0.0 || v > 1.0) return fail("normalised value out of [0,1] on trial " + std::to_string(trial));

        // Constant input.
        std::vector<ensemble::ScoredId> flat;
        const double level = gen::uniform(rng, -100, 100);
        for (int i = 0; i < 10; ++i) flat.push_back({std::to_string(i), level});
        for (const auto& s : ensemble::minmax_normalize(flat))
            if (s.score != 0.0) return fail("constant input not mapped to 0");

        // Positive affine map of one scorer's raw values.
        const double a = std::exp(gen::uniform(rng, -5, 5)), b = gen::uniform(rng, -100, 100);
        const auto& target = scorers[rng() % 3];
        auto transformed = [&](const semantic::ScoreTable& t) {
            if (t.scorer_name() != target) return t;
            semantic::ScoreTable out(t.scorer_name());
            for (const auto& [k, v] : t.entries()) out.insert(k.first, k.second, a * v + b);
            return out;
        };
        auto before = ensemble::normalize_pools(d.pools, d.origin, d.bm25, d.reform);
        auto after = ensemble::normalize_pools(d.pools, transformed(d.origin), transformed(d.bm25),
                                               transformed(d.reform));
        const ensemble::EnsembleConfig cfg{0.3, 0.3, 0.4, 0.5};
        for (std::size_t q = 0; q < before.size(); ++q) {
            auto r1 = ensemble::fuse_query(cfg, before[q]);
            auto r2 = ensemble::fuse_query(cfg, after[q]);
            for (std::size_t i = 0; i < r1.size(); ++i)
                if (r1[i].article_id != r2[i].article_id)
                    return fail("argsort changed under affine map of " + target + " on trial " + std::to_string(trial));
        }
    }
    return pass("100 randomized trials: bounds, constant input, affine invariance");
}

Outcome grid_oracle_recovery() {
    std::mt19937 rng(4242);
    auto d = gen::oracle_pools(rng, 20, 100, "reform");
    const ensemble::GridSpec spec;  // default steps
    const auto t0 = std::chrono::steady_clock::now();
    auto best = ensemble::grid_search(d.queries, d.gold, spec);
    const double secs = seconds_since(t0);
    if (best.f2 != 1.0) return fail("tuned validation F2 = " + num(best.f2));
    if (secs >= 30.0) return fail("grid search took " + num(secs, 2) + " s");

    std::size_t points = 0;
    for (const auto& w : ensemble::weight_grid(spec))
        for (double t : ensemble::threshold_grid(spec)) {
            const double f = ensemble::evaluate_f2({w[0], w[1], w[2], t}, d.queries, d.gold);
            if (f > best.f2) return fail("grid point beats the returned config");
            ++points;
        }
    const double direct = ensemble::evaluate_f2(best.config, d.queries, d.gold);
    if (direct != best.f2) return fail("returned config re-evaluates to " + num(direct));
    return pass("F2 = 1.0 at alpha=" + num(best.config.alpha, 2) + " beta=" + num(best.config.beta, 2) +
                " gamma=" + num(best.config.gamma, 2) + " threshold=" + num(best.config.threshold, 2) + "; " +
                std::to_string(points) + " points checked; search " + num(secs, 2) + " s");
}

Outcome expansion_uplift() {
    testutil::TempDir work;
    auto c = toy_config(work.path());
    pipeline::cmd_index(c);
    pipeline::cmd_expand(c);
    const auto index = lexical::InvertedIndex::load(c.index_path());
    const auto queries = corpus::load_queries(c.expanded_queries_path());
    const auto gold = corpus::load_qrels(c.qrels);

    std::map<std::string, std::vector<std::string>> original, expanded;
    for (const auto& q : queries) {
        if (!gold.contains(q.id)) continue;
        for (const auto& s : lexical::top_k(index, c.bm25, lexical::query_tokens(q, c.scheme), index.doc_count()))
            original[q.id].push_back(s.article_id);
        for (const auto& s : lexical::top_k(index, c.bm25, lexical::expanded_query_tokens(q, c.scheme), index.doc_count()))
            expanded[q.id].push_back(s.article_id);
    }
    const auto o5 = eval::recall_at_k(original, gold, 5).macro;
    const auto e5 = eval::recall_at_k(expanded, gold, 5).macro;
    if (e5 < o5) return fail("recall@5 expanded " + num(e5, 4) + " < original " + num(o5, 4));
    for (const auto* run : {&original, &expanded}) {
        double prev_macro = 0.0, prev_micro = 0.0;
        for (std::size_t k = 1; k <= index.doc_count(); ++k) {
            auto r = eval::recall_at_k(*run, gold, k);
            if (r.macro < prev_macro || r.micro < prev_micro) return fail("recall@k decreases at k=" + std::to_string(k));
            prev_macro = r.macro;
            prev_micro = r.micro;
        }
    }
    return pass("macro recall@5 original " + num(o5, 4) + " -> expanded " + num(e5, 4) + "; monotone in k");
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testutil::read_file(e.path());
    return out;
}

Outcome offline_determinism() {
    testutil::TempDir a, b;
    const auto t0 = std::chrono::steady_clock::now();
    auto ra = pipeline::run_all(toy_config(a.path()));
    auto rb = pipeline::run_all(toy_config(b.path()));
    const double secs = seconds_since(t0);
    const auto calls = ra.expand.network_calls + rb.expand.network_calls;
    if (calls != 0) return fail(std::to_string(calls) + " network calls");
    const auto ta = read_tree(toy_config(a.path()).reports_dir());
    const auto tb = read_tree(toy_config(b.path()).reports_dir());
    if (ta.empty()) return fail("no reports written");
    if (ta != tb) return fail("reports differ between runs");
    // Everything else in the work dir should be reproducible too.
    if (read_tree(a.path()) != read_tree(b.path())) return fail("work-dir outputs differ between runs");
    if (secs >= 60.0) return fail("two runs took " + num(secs, 2) + " s");
    return pass("2 runs, 0 network calls, " + std::to_string(ta.size()) + " identical report files, " +
                num(secs, 2) + " s");
}

Outcome variant_ordering_golden() {
    testutil::TempDir work;
    auto c = toy_config(work.path());
    auto r = pipeline::run_all(c);
    std::map<int, double> f2;
    for (const auto& v : r.evaluate.variants) f2[v.variant] = v.report.macro_f2;
    const std::string detail = "F2 (1) " + num(f2[1], 4) + ", (2) " + num(f2[2], 4) + ", (3) " + num(f2[3], 4);
    if (f2[3] < f2[1] || f2[3] < f2[2]) return fail(detail);

    const fs::path golden = kToyDir / "golden";
    if (!fs::exists(golden)) return fail("missing golden directory " + golden.string());
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(golden)) {
        const auto produced = c.reports_dir() / e.path().filename();
        if (!fs::exists(produced)) return fail("no report " + e.path().filename().string());
        if (testutil::read_file(produced) != testutil::read_file(e.path()))
            return fail("report " + e.path().filename().string() + " differs from golden");
        ++files;
    }
    if (files == 0) return fail("golden directory is empty");
    return pass(detail + "; " + std::to_string(files) + " golden files match");
}

Outcome coliee_reproduction() {
    const char* path = std::getenv("STATUTERANK_COLIEE_CONFIG");
    if (!path || !*path) return {Verdict::Skip, "set STATUTERANK_COLIEE_CONFIG to a COLIEE 2022 config to run"};
    auto c = pipeline::PipelineConfig::load(path);
    pipeline::cmd_index(c, {true, std::nullopt, nullptr});
    auto ex = pipeline::cmd_expand(c, {true, std::nullopt, nullptr});
    if (ex.failures > 0) return fail(std::to_string(ex.failures) + " queries without cached expansions");
    const auto index = lexical::InvertedIndex::load(c.index_path());
    const auto queries = corpus::load_queries(c.expanded_queries_path());
    const auto gold = corpus::load_qrels(c.qrels);
    std::map<std::string, std::vector<std::string>> original, expanded;
    corpus::GoldLabels used;
    for (const auto& q : queries) {
        if (!gold.contains(q.id)) continue;
        used[q.id] = gold.at(q.id);
        for (const auto& s : lexical::top_k(index, c.bm25, lexical::query_tokens(q, c.scheme), 100))
            original[q.id].push_back(s.article_id);
        for (const auto& s : lexical::top_k(index, c.bm25, lexical::expanded_query_tokens(q, c.scheme), 100))
            expanded[q.id].push_back(s.article_id);
    }
    const double o = eval::recall_at_k(original, used, 100).macro;
    const double e = eval::recall_at_k(expanded, used, 100).macro;
    const std::string detail = "recall@100 original " + num(o, 4) + " (target 0.8394), expanded " + num(e, 4) +
                               " (target 0.9098)";
    if (std::abs(o - 0.8394) > 0.03 || std::abs(e - 0.9098) > 0.03) return fail(detail);
    return pass(detail);
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"bm25-oracle-equivalence", bm25_oracle},
        {"metric-hand-checks", metric_hand_checks},
        {"fusion-identity", fusion_identity},
        {"normalization-properties", normalization_properties},
        {"grid-search-oracle-recovery", grid_oracle_recovery},
        {"expansion-uplift", expansion_uplift},
        {"offline-determinism", offline_determinism},
        {"variant-ordering-golden", variant_ordering_golden},
        {"coliee-reproduction", coliee_reproduction},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
        if (o.verdict == Verdict::Fail) ++failures;
        std::cout << tag << "  " << name << "  " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
