#include "statuterank/pipeline.hpp"

#include "statuterank/digest.hpp"
#include "statuterank/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace statuterank::pipeline {

using nlohmann::json;

namespace {

void log_line(const CommandOptions& options, const std::string& line) {
    if (options.log) *options.log << line << '\n';
}

void require_exists(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw Error(what + " not found: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json rounded(double v) { return json::parse(fixed(v, 6)); }

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

// Expanded queries when cmd_expand has run, else the configured (possibly pre-expanded) file.
std::vector<corpus::QueryRecord> current_queries(const PipelineConfig& config) {
    if (fs::exists(config.expanded_queries_path())) return corpus::load_queries(config.expanded_queries_path());
    require_exists(config.queries, "queries file");
    return corpus::load_queries(config.queries);
}

std::vector<std::string> labelled_ids(const std::vector<corpus::QueryRecord>& queries,
                                      const corpus::GoldLabels& gold) {
    std::vector<std::string> ids;
    for (const auto& q : queries)
        if (gold.contains(q.id)) ids.push_back(q.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

semantic::ScoreTable load_table_or_empty(const PipelineConfig& config, const std::string& scorer, bool required) {
    const auto path = config.score_path(scorer);
    if (!fs::exists(path)) {
        if (required) throw Error("missing score table for scorer \"" + scorer + "\": " + path.string());
        return semantic::ScoreTable(scorer);
    }
    return semantic::load_scores(path, scorer);
}

std::vector<ensemble::QueryCandidates> candidates_for(const PipelineConfig& config,
                                                      const std::vector<std::string>& ids,
                                                      const ensemble::ScorerMask& required) {
    auto bm25 = load_table_or_empty(config, "bm25", true);
    auto origin = load_table_or_empty(config, "origin", required.origin);
    auto reform = load_table_or_empty(config, "reform", required.reform);

    std::map<std::string, std::vector<std::string>> members;
    for (const auto& [key, score] : bm25.entries()) members[key.first].push_back(key.second);

    std::vector<ensemble::CandidatePool> pools;
    for (const auto& id : ids) {
        auto it = members.find(id);
        if (it == members.end()) throw Error("no candidate pool for query \"" + id + "\" (run score first)");
        pools.push_back({id, it->second});
    }
    return ensemble::normalize_pools(pools, origin, bm25, reform);
}

corpus::GoldLabels restrict_gold(const corpus::GoldLabels& gold, const std::vector<std::string>& ids) {
    corpus::GoldLabels out;
    for (const auto& id : ids) {
        auto it = gold.find(id);
        if (it != gold.end()) out.emplace(id, it->second);
    }
    return out;
}

json length_stats_json(const LengthStats& s) {
    return {{"count", s.count}, {"min", s.min}, {"max", s.max}, {"average", rounded(s.average)}};
}

ensemble::EnsembleConfig project(const ensemble::EnsembleConfig& c, int variant) {
    auto out = c;
    if (variant == 1) out.gamma = 0.0;
    if (variant == 2) out.alpha = 0.0;
    const double sum = out.alpha + out.beta + out.gamma;
    if (sum <= 0.0) {
        out.alpha = 0.0;
        out.beta = 1.0;
        out.gamma = 0.0;
    } else {
        out.alpha /= sum;
        out.beta /= sum;
        out.gamma /= sum;
    }
    return out;
}

std::string variant_label(int variant) {
    switch (variant) {
    case 1: return "(1) bm25 expanded + origin";
    case 2: return "(2) bm25 expanded + reform";
    default: return "(3) bm25 expanded + origin + reform";
    }
}

} // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    PipelineConfig c;
    try {
        const auto& paths = j.at("paths");
        c.corpus = resolve(base_dir, paths.at("corpus").get<std::string>());
        c.queries = resolve(base_dir, paths.at("queries").get<std::string>());
        c.qrels = resolve(base_dir, paths.at("qrels").get<std::string>());
        c.cache_dir = resolve(base_dir, paths.value("cache_dir", std::string("llm_cache")));
        c.work_dir = resolve(base_dir, paths.value("work_dir", std::string("work")));

        c.scheme = tokenize::parse_scheme(j.value("tokenizer", std::string("unicode-basic")));
        if (j.contains("bm25")) {
            c.bm25.k1 = j["bm25"].value("k1", c.bm25.k1);
            c.bm25.b = j["bm25"].value("b", c.bm25.b);
        }
        c.bm25.validate();
        c.pool_size = j.value("candidate_pool_size", c.pool_size);
        if (c.pool_size == 0) throw std::invalid_argument("candidate_pool_size must be >= 1");
        c.export_depth = j.value("export_depth", c.export_depth);
        if (c.export_depth == 0) throw std::invalid_argument("export_depth must be >= 1");
        c.recall_levels = j.value("recall_levels", c.recall_levels);
        if (std::find(c.recall_levels.begin(), c.recall_levels.end(), 0u) != c.recall_levels.end())
            throw std::invalid_argument("recall_levels must be >= 1");

        c.llm = expand::LlmConfig::from_json(j.at("llm"));

        const auto& scoring = j.at("scoring");
        const auto mode = scoring.value("mode", std::string("precomputed"));
        if (mode == "precomputed") {
            c.scoring_mode = ScoringMode::Precomputed;
            if (scoring.contains("origin_scores"))
                c.origin_scores = resolve(base_dir, scoring["origin_scores"].get<std::string>());
            if (scoring.contains("reform_scores"))
                c.reform_scores = resolve(base_dir, scoring["reform_scores"].get<std::string>());
        } else if (mode == "service") {
            c.scoring_mode = ScoringMode::Service;
            c.origin_service = semantic::ScoringConfig::from_json(scoring.at("origin"));
            c.reform_service = semantic::ScoringConfig::from_json(scoring.at("reform"));
        } else {
            throw std::invalid_argument("scoring.mode must be \"precomputed\" or \"service\"");
        }

        if (j.contains("grid")) c.grid = ensemble::GridSpec::from_json(j["grid"]);
        c.grid.validate();
        if (j.contains("ensemble")) c.ensemble = ensemble::EnsembleConfig::from_json(j["ensemble"]);
        if (j.contains("split")) {
            c.seed = j["split"].value("seed", c.seed);
            c.validation_fraction = j["split"].value("validation_fraction", c.validation_fraction);
        }
        if (!(c.validation_fraction > 0.0 && c.validation_fraction <= 1.0))
            throw std::invalid_argument("split.validation_fraction must be in (0, 1]");
        if (j.contains("evaluation")) c.evaluation_slice = j["evaluation"].value("slice", c.evaluation_slice);
        if (c.evaluation_slice != "heldout" && c.evaluation_slice != "validation" && c.evaluation_slice != "all")
            throw std::invalid_argument("evaluation.slice must be heldout, validation or all");
    } catch (const json::exception& e) {
        throw Error(std::string("invalid config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw Error(std::string("invalid config: ") + e.what());
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    require_exists(path, "config file");
    return from_json(read_json(path), fs::absolute(path).parent_path());
}

LengthStats length_stats(const std::vector<std::size_t>& lengths) {
    LengthStats s;
    s.count = lengths.size();
    if (lengths.empty()) return s;
    s.min = *std::min_element(lengths.begin(), lengths.end());
    s.max = *std::max_element(lengths.begin(), lengths.end());
    std::size_t total = 0;
    for (auto l : lengths) total += l;
    s.average = static_cast<double>(total) / static_cast<double>(lengths.size());
    return s;
}

std::pair<std::vector<std::string>, std::vector<std::string>>
split_queries(std::vector<std::string> ids, std::uint64_t seed, double validation_fraction) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<std::pair<std::uint64_t, std::string>> keyed;
    for (auto& id : ids) keyed.emplace_back(sha256_prefix64(std::to_string(seed) + ":" + id), std::move(id));
    std::sort(keyed.begin(), keyed.end());

    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(keyed.size()) * validation_fraction));
    if (n_val == 0) throw std::invalid_argument("validation slice is empty");

    std::vector<std::string> train, validation;
    for (std::size_t i = 0; i < keyed.size(); ++i) (i < n_val ? validation : train).push_back(keyed[i].second);
    std::sort(train.begin(), train.end());
    std::sort(validation.begin(), validation.end());
    return {train, validation};
}

ensemble::ScorerMask variant_mask(int variant) {
    switch (variant) {
    case 1: return {true, true, false};
    case 2: return {false, true, true};
    case 3: return {true, true, true};
    }
    throw std::invalid_argument("variant must be 1, 2 or 3");
}

std::vector<ensemble::QueryCandidates> load_candidates(const PipelineConfig& config,
                                                       const std::vector<std::string>& ids) {
    return candidates_for(config, ids, ensemble::ScorerMask{});
}

IndexSummary cmd_index(const PipelineConfig& config, const CommandOptions& options) {
    require_exists(config.corpus, "corpus file");
    IndexSummary summary;
    if (options.no_clobber && fs::exists(config.index_path()) && fs::exists(config.index_stats_path())) {
        log_line(options, "index: " + config.index_path().string() + " exists, skipping");
        summary.skipped = true;
        return summary;
    }

    const auto articles = corpus::load_corpus(config.corpus);
    const auto index = lexical::InvertedIndex::build(articles, config.scheme);
    index.save(config.index_path());

    std::vector<std::size_t> article_lengths, query_lengths;
    for (std::uint32_t d = 0; d < index.doc_count(); ++d) article_lengths.push_back(index.doc_length(d));
    if (fs::exists(config.queries)) {
        for (const auto& q : corpus::load_queries(config.queries))
            query_lengths.push_back(lexical::query_tokens(q, config.scheme).size());
    }
    summary.articles = length_stats(article_lengths);
    summary.queries = length_stats(query_lengths);
    summary.vocabulary = index.vocabulary_size();

    json stats = {{"tokenizer", tokenize::scheme_name(config.scheme)},
                  {"vocabulary", summary.vocabulary},
                  {"articles", length_stats_json(summary.articles)},
                  {"queries", length_stats_json(summary.queries)}};
    write_text(config.index_stats_path(), stats.dump(2) + "\n");

    std::ostringstream table;
    table << "tokens per item   count    min    max  average\n";
    auto row = [&](const char* label, const LengthStats& s) {
        table << std::left << std::setw(16) << label << std::right << std::setw(7) << s.count << std::setw(7)
              << s.min << std::setw(7) << s.max << std::setw(9) << fixed(s.average, 2) << '\n';
    };
    row("articles", summary.articles);
    row("queries", summary.queries);
    log_line(options, "index: " + std::to_string(index.doc_count()) + " articles, vocabulary " +
                          std::to_string(summary.vocabulary) + " -> " + config.index_path().string());
    log_line(options, table.str());
    return summary;
}

ExpandSummary cmd_expand(const PipelineConfig& config, const CommandOptions& options, const Services& services) {
    require_exists(config.queries, "queries file");
    if (config.llm.mode == "fixture") require_exists(config.cache_dir, "LLM fixture cache");

    ExpandSummary summary;
    if (options.no_clobber && fs::exists(config.expanded_queries_path())) {
        log_line(options, "expand: " + config.expanded_queries_path().string() + " exists, skipping");
        summary.skipped = true;
        return summary;
    }

    std::shared_ptr<expand::ChatTransport> transport = services.chat;
    if (!transport) {
        if (config.llm.mode == "fixture")
            transport = std::make_shared<expand::OfflineTransport>();
        else
            transport = std::make_shared<expand::HttpChatTransport>(config.llm.endpoint);
    }
    expand::LlmClient client(config.llm, transport, config.cache_dir);

    auto queries = corpus::load_queries(config.queries);
    summary.queries = queries.size();

    struct Outcome {
        std::string terms_status = "ok";
        std::string reform_status = "ok";
        std::string message;
    };
    std::vector<Outcome> outcomes(queries.size());

    auto work = [&](std::size_t i) {
        auto& q = queries[i];
        auto& o = outcomes[i];
        try {
            auto r = client.extract_terms(q);
            if (r.parse_ok) {
                q.set_terms(r.parsed_terms);
            } else {
                q.set_terms({});
                o.terms_status = "parse-failure";
            }
        } catch (const Error& e) {
            o.terms_status = "error";
            o.message = e.what();
        }
        try {
            auto r = client.reformulate(q);
            q.reformulated_text = r.raw_text;
            if (r.raw_text.empty()) o.reform_status = "empty";
        } catch (const Error& e) {
            o.reform_status = "error";
            if (o.message.empty()) o.message = e.what();
        }
    };

    const std::size_t workers = std::min(config.llm.max_in_flight, std::max<std::size_t>(1, queries.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < queries.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < queries.size(); i = next++) work(i);
            });
    }

    std::ostringstream status;
    status << "query_id\tterms\treformulation\tmessage\n";
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.terms_status == "parse-failure") ++summary.parse_failures;
        if (o.terms_status == "error" || o.reform_status == "error") ++summary.failures;
        if (queries[i].reformulated_text.empty()) ++summary.empty_reformulations;
        std::string message = o.message;
        std::replace(message.begin(), message.end(), '\t', ' ');
        std::replace(message.begin(), message.end(), '\n', ' ');
        status << queries[i].id << '\t' << o.terms_status << '\t' << o.reform_status << '\t' << message << '\n';
    }
    summary.network_calls = client.network_calls();

    corpus::save_queries(config.expanded_queries_path(), queries);
    write_text(config.expand_log_path(), status.str());
    log_line(options, "expand: " + std::to_string(summary.queries) + " queries, " +
                          std::to_string(summary.parse_failures) + " parse failures, " +
                          std::to_string(summary.failures) + " failures, " +
                          std::to_string(summary.network_calls) + " network calls -> " +
                          config.expanded_queries_path().string());
    return summary;
}

ScoreSummary cmd_score(const PipelineConfig& config, const CommandOptions& options, const Services& services) {
    require_exists(config.index_path(), "index (run index first)");
    require_exists(config.corpus, "corpus file");
    if (config.scoring_mode == ScoringMode::Precomputed) {
        if (!config.origin_scores || !config.reform_scores)
            throw Error("precomputed scoring needs scoring.origin_scores and scoring.reform_scores");
        require_exists(*config.origin_scores, "origin score table");
        require_exists(*config.reform_scores, "reform score table");
    }

    ScoreSummary summary;
    if (options.no_clobber && fs::exists(config.score_path("bm25")) && fs::exists(config.score_path("origin")) &&
        fs::exists(config.score_path("reform"))) {
        log_line(options, "score: tables exist in " + config.scores_dir().string() + ", skipping");
        summary.skipped = true;
        return summary;
    }

    const auto index = lexical::InvertedIndex::load(config.index_path());
    if (index.scheme() != config.scheme)
        throw Error("index was built with tokenizer \"" + std::string(tokenize::scheme_name(index.scheme())) +
                    "\" but the config uses \"" + std::string(tokenize::scheme_name(config.scheme)) + "\"");
    const auto articles = corpus::load_corpus(config.corpus);
    std::map<std::string, const corpus::Article*> article_by_id;
    for (const auto& a : articles) article_by_id[a.id] = &a;
    const auto queries = current_queries(config);
    summary.queries = queries.size();

    semantic::ScoreTable bm25("bm25");
    std::vector<ensemble::CandidatePool> pools;
    std::ostringstream exported;
    for (const auto& q : queries) {
        const auto tokens = lexical::expanded_query_tokens(q, config.scheme);
        const auto ranked = lexical::top_k(index, config.bm25, tokens, std::max(config.pool_size, config.export_depth));
        ensemble::CandidatePool pool{q.id, {}};
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (r < config.pool_size) {
                bm25.insert(q.id, ranked[r].article_id, ranked[r].score);
                pool.article_ids.push_back(ranked[r].article_id);
            }
            if (r < config.export_depth) exported << q.id << '\t' << ranked[r].article_id << '\t' << (r + 1) << '\n';
        }
        pools.push_back(std::move(pool));
    }

    semantic::ScoreTable origin("origin"), reform("reform");
    if (config.scoring_mode == ScoringMode::Precomputed) {
        const auto all_origin = semantic::load_scores(*config.origin_scores, "origin");
        const auto all_reform = semantic::load_scores(*config.reform_scores, "reform");
        for (std::size_t i = 0; i < queries.size(); ++i) {
            for (const auto& id : pools[i].article_ids) {
                if (auto s = all_origin.find(queries[i].id, id)) origin.insert(queries[i].id, id, *s);
                if (queries[i].reformulated_text.empty()) continue;
                if (auto s = all_reform.find(queries[i].id, id)) reform.insert(queries[i].id, id, *s);
            }
        }
    } else {
        std::vector<semantic::ScorePair> origin_pairs, reform_pairs;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            for (const auto& id : pools[i].article_ids) {
                const auto& text = article_by_id.at(id)->text;
                origin_pairs.push_back({queries[i].id, id, queries[i].original_text, text});
                if (!queries[i].reformulated_text.empty())
                    reform_pairs.push_back({queries[i].id, id, queries[i].reformulated_text, text});
            }
        }
        auto score_with = [&](std::vector<semantic::ScorePair>& pairs,
                              const std::shared_ptr<semantic::ScoringTransport>& override_transport,
                              const semantic::ScoringConfig& cfg, const std::string& name) {
            if (pairs.empty()) return semantic::ScoreTable(name);
            if (override_transport)
                return semantic::request_scores(pairs, *override_transport, name, cfg.batch_size, cfg.max_in_flight);
            return semantic::request_scores(pairs, cfg, name);
        };
        origin = score_with(origin_pairs, services.origin, *config.origin_service, "origin");
        reform = score_with(reform_pairs, services.reform, *config.reform_service, "reform");
    }

    semantic::save_scores(config.score_path("bm25"), bm25);
    semantic::save_scores(config.score_path("origin"), origin);
    semantic::save_scores(config.score_path("reform"), reform);
    write_text(config.rankings_export_path(), exported.str());

    summary.rows = {{"bm25", bm25.size()}, {"origin", origin.size()}, {"reform", reform.size()}};
    log_line(options, "score: " + std::to_string(queries.size()) + " queries, pool " +
                          std::to_string(config.pool_size) + "; rows bm25=" + std::to_string(bm25.size()) +
                          " origin=" + std::to_string(origin.size()) + " reform=" + std::to_string(reform.size()) +
                          " -> " + config.scores_dir().string());
    return summary;
}

TuneSummary cmd_tune(const PipelineConfig& config, const CommandOptions& options) {
    require_exists(config.qrels, "qrels file");
    for (const char* scorer : {"bm25", "origin", "reform"})
        require_exists(config.score_path(scorer), std::string("score table ") + scorer + " (run score first)");

    TuneSummary summary;
    if (options.no_clobber && fs::exists(config.tuned_config_path())) {
        log_line(options, "tune: " + config.tuned_config_path().string() + " exists, skipping");
        summary.skipped = true;
        return summary;
    }

    const auto queries = current_queries(config);
    const auto gold = corpus::load_qrels(config.qrels);
    auto [train, validation] = split_queries(labelled_ids(queries, gold), config.seed, config.validation_fraction);
    summary.validation_ids = validation;

    const auto candidates = load_candidates(config, validation);
    json variants = json::object();
    for (int v : {1, 2, 3}) {
        auto result = ensemble::grid_search(candidates, gold, config.grid, variant_mask(v));
        json entry = result.config.to_json();
        entry["validation_f2"] = result.f2;
        variants[std::to_string(v)] = std::move(entry);
        summary.variants.emplace(v, result);
    }

    const auto& best = summary.variants.at(3);
    json out = best.config.to_json();
    out["grid"] = config.grid.to_json();
    out["validation_f2"] = best.f2;
    out["seed"] = config.seed;
    out["validation_fraction"] = config.validation_fraction;
    out["validation_queries"] = validation;
    out["variants"] = std::move(variants);
    write_text(config.tuned_config_path(), out.dump(2) + "\n");

    log_line(options, "tune: " + std::to_string(validation.size()) + " validation queries; alpha=" +
                          fixed(best.config.alpha, 2) + " beta=" + fixed(best.config.beta, 2) + " gamma=" +
                          fixed(best.config.gamma, 2) + " threshold=" + fixed(best.config.threshold, 2) +
                          " validation F2=" + fixed(best.f2, 4) + " -> " + config.tuned_config_path().string());
    return summary;
}

EvaluateSummary cmd_evaluate(const PipelineConfig& config, const CommandOptions& options) {
    require_exists(config.qrels, "qrels file");
    require_exists(config.index_path(), "index (run index first)");

    std::vector<int> wanted{1, 2, 3};
    if (options.variant) {
        variant_mask(*options.variant);
        wanted = {*options.variant};
    }

    const auto queries = current_queries(config);
    const auto gold = corpus::load_qrels(config.qrels);
    const auto labelled = labelled_ids(queries, gold);

    std::map<int, ensemble::EnsembleConfig> configs;
    std::vector<std::string> validation;
    if (fs::exists(config.tuned_config_path())) {
        const auto tuned = read_json(config.tuned_config_path());
        for (int v : wanted) configs[v] = ensemble::EnsembleConfig::from_json(tuned.at("variants").at(std::to_string(v)));
        validation = tuned.at("validation_queries").get<std::vector<std::string>>();
    } else if (config.ensemble) {
        for (int v : wanted) configs[v] = project(*config.ensemble, v);
    } else {
        throw Error("no tuned config at " + config.tuned_config_path().string() +
                    " and no fixed \"ensemble\" weights in the config");
    }

    std::vector<std::string> eval_ids;
    if (config.evaluation_slice == "all") {
        eval_ids = labelled;
    } else {
        if (validation.empty()) validation = split_queries(labelled, config.seed, config.validation_fraction).second;
        const bool want_validation = config.evaluation_slice == "validation";
        for (const auto& id : labelled) {
            bool in_val = std::binary_search(validation.begin(), validation.end(), id);
            if (in_val == want_validation) eval_ids.push_back(id);
        }
    }
    if (eval_ids.empty()) throw Error("evaluation slice \"" + config.evaluation_slice + "\" has no labelled queries");
    const auto eval_gold = restrict_gold(gold, eval_ids);

    EvaluateSummary summary;
    fs::create_directories(config.reports_dir());
    for (int v : wanted) {
        const auto candidates = candidates_for(config, eval_ids, variant_mask(v));
        const auto fused = ensemble::fuse_rankings(configs[v], candidates);
        std::map<std::string, std::set<std::string>> predicted;
        for (const auto& [id, rq] : fused) predicted[id] = rq.selected;
        auto report = eval::evaluate(predicted, eval_gold);

        json j = report.to_json();
        j["variant"] = v;
        j["label"] = variant_label(v);
        j["slice"] = config.evaluation_slice;
        j["config"] = configs[v].to_json();
        json selections = json::object();
        for (const auto& [id, sel] : predicted) selections[id] = sel;
        j["selected"] = std::move(selections);

        const auto stem = "variant" + std::to_string(v);
        write_text(config.reports_dir() / (stem + ".json"), j.dump(2) + "\n");
        write_text(config.reports_dir() / (stem + ".txt"), report.to_table(variant_label(v)));
        semantic::save_scores(config.reports_dir() / ("final_" + stem + ".tsv"), ensemble::to_score_table(fused));
        summary.variants.push_back({v, configs[v], std::move(report)});
    }

    // Side-by-side variant table.
    std::ostringstream table;
    table << "Retrieval system variant (" << config.evaluation_slice << " slice, " << eval_ids.size()
          << " queries)\n";
    table << std::left << std::setw(40) << "variant" << std::right << std::setw(8) << "F2" << std::setw(8) << "P"
          << std::setw(8) << "R" << '\n';
    for (const auto& vr : summary.variants) {
        table << std::left << std::setw(40) << variant_label(vr.variant) << std::right << std::setw(8)
              << fixed(vr.report.macro_f2, 4) << std::setw(8) << fixed(vr.report.macro_precision, 4)
              << std::setw(8) << fixed(vr.report.macro_recall, 4) << '\n';
    }

    // Recall@k of BM25 with original vs term-expanded queries over all labelled queries.
    const auto index = lexical::InvertedIndex::load(config.index_path());
    const auto all_gold = restrict_gold(gold, labelled);
    std::map<std::string, std::vector<std::string>> original_rank, expanded_rank;
    const std::size_t depth = *std::max_element(config.recall_levels.begin(), config.recall_levels.end());
    for (const auto& q : queries) {
        if (!all_gold.contains(q.id)) continue;
        for (const auto& s : lexical::top_k(index, config.bm25, lexical::query_tokens(q, config.scheme), depth))
            original_rank[q.id].push_back(s.article_id);
        for (const auto& s : lexical::top_k(index, config.bm25, lexical::expanded_query_tokens(q, config.scheme), depth))
            expanded_rank[q.id].push_back(s.article_id);
    }
    json recall = json::array();
    std::ostringstream recall_table;
    recall_table << "BM25 recall@k over " << all_gold.size() << " labelled queries\n";
    recall_table << std::setw(6) << "k" << std::setw(16) << "origin macro" << std::setw(16) << "expanded macro"
                 << std::setw(16) << "origin micro" << std::setw(16) << "expanded micro" << '\n';
    for (auto k : config.recall_levels) {
        auto o = eval::recall_at_k(original_rank, all_gold, k);
        auto e = eval::recall_at_k(expanded_rank, all_gold, k);
        recall.push_back({{"k", k},
                          {"origin", {{"macro", rounded(o.macro)}, {"micro", rounded(o.micro)}}},
                          {"expanded", {{"macro", rounded(e.macro)}, {"micro", rounded(e.micro)}}}});
        recall_table << std::setw(6) << k << std::setw(16) << fixed(o.macro, 4) << std::setw(16) << fixed(e.macro, 4)
                     << std::setw(16) << fixed(o.micro, 4) << std::setw(16) << fixed(e.micro, 4) << '\n';
    }
    write_text(config.reports_dir() / "recall_at_k.json", json{{"levels", recall}}.dump(2) + "\n");
    write_text(config.reports_dir() / "recall_at_k.txt", recall_table.str());
    if (!options.variant) write_text(config.reports_dir() / "variants.txt", table.str());

    log_line(options, table.str());
    log_line(options, recall_table.str());
    return summary;
}

RunSummary run_all(const PipelineConfig& config, const CommandOptions& options, const Services& services) {
    RunSummary s;
    s.index = cmd_index(config, options);
    s.expand = cmd_expand(config, options, services);
    if (s.expand.failures > 0)
        throw Error(std::to_string(s.expand.failures) + " queries could not be expanded (see " +
                    config.expand_log_path().string() + ")");
    s.score = cmd_score(config, options, services);
    s.tune = cmd_tune(config, options);
    CommandOptions eval_options = options;
    eval_options.variant.reset();
    s.evaluate = cmd_evaluate(config, eval_options);
    return s;
}

} // namespace statuterank::pipeline
