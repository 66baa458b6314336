#include "statuterank/semantic.hpp"

#include "statuterank/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <stdexcept>

namespace statuterank::semantic {

using nlohmann::json;

void ScoreTable::insert(std::string query_id, std::string article_id, double score) {
    if (!std::isfinite(score))
        throw std::invalid_argument("non-finite score for (" + query_id + ", " + article_id + ")");
    PairKey key{std::move(query_id), std::move(article_id)};
    if (entries_.contains(key))
        throw std::invalid_argument("duplicate score for (" + key.first + ", " + key.second + ")");
    entries_.emplace(std::move(key), score);
}

std::optional<double> ScoreTable::find(const std::string& query_id, const std::string& article_id) const {
    auto it = entries_.find(PairKey{query_id, article_id});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

double get_score(const ScoreTable& table, const std::string& query_id, const std::string& article_id) {
    return table.find(query_id, article_id).value_or(0.0);
}

namespace {

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace

ScoreTable parse_scores(std::istream& in, std::string scorer_name) {
    ScoreTable table(std::move(scorer_name));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
            throw DataError("expected query_id<TAB>article_id<TAB>score", line_no);
        std::string query_id = line.substr(0, t1);
        std::string article_id = line.substr(t1 + 1, t2 - t1 - 1);
        auto score = parse_double(std::string_view(line).substr(t2 + 1));
        if (query_id.empty() || article_id.empty()) throw DataError("empty id", line_no);
        if (!score) throw DataError("unparseable score \"" + line.substr(t2 + 1) + "\"", line_no);
        try {
            table.insert(std::move(query_id), std::move(article_id), *score);
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what(), line_no);
        }
    }
    return table;
}

ScoreTable load_scores(const std::filesystem::path& path, std::string scorer_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_scores(in, std::move(scorer_name));
}

void write_scores(std::ostream& out, const ScoreTable& table) {
    char buf[64];
    for (const auto& [key, score] : table.entries()) {
        std::snprintf(buf, sizeof buf, "%.17g", score);
        out << key.first << '\t' << key.second << '\t' << buf << '\n';
    }
}

void save_scores(const std::filesystem::path& path, const ScoreTable& table) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    write_scores(out, table);
}

std::vector<double> HttpScoringTransport::score(std::span<const ScorePair> batch) {
    json pairs = json::array();
    for (const auto& p : batch) pairs.push_back({{"query", p.query_text}, {"article", p.article_text}});
    json reply = http::post_json(endpoint_, {{"pairs", std::move(pairs)}});
    try {
        return reply.at("scores").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected scoring reply: ") + e.what());
    }
}

ScoringConfig ScoringConfig::from_json(const json& j) {
    ScoringConfig c;
    c.endpoint = http::Endpoint::from_json(j, "/score");
    c.batch_size = j.value("batch_size", std::size_t{32});
    c.max_in_flight = j.value("max_in_flight", std::size_t{1});
    if (c.batch_size == 0) throw std::invalid_argument("scoring batch_size must be >= 1");
    if (c.max_in_flight == 0) throw std::invalid_argument("scoring max_in_flight must be >= 1");
    return c;
}

ScoreTable request_scores(std::span<const ScorePair> pairs, ScoringTransport& transport,
                          std::string scorer_name, std::size_t batch_size, std::size_t max_in_flight) {
    if (pairs.empty()) throw std::invalid_argument("request_scores: no pairs");
    if (batch_size == 0) throw std::invalid_argument("request_scores: batch_size must be >= 1");
    max_in_flight = std::max<std::size_t>(1, max_in_flight);

    std::set<PairKey> seen;
    for (const auto& p : pairs) {
        if (!seen.emplace(p.query_id, p.article_id).second)
            throw std::invalid_argument("request_scores: duplicate pair (" + p.query_id + ", " +
                                        p.article_id + ")");
    }

    const std::size_t batches = (pairs.size() + batch_size - 1) / batch_size;
    std::vector<std::vector<double>> results(batches);

    auto run_batch = [&](std::size_t b) {
        auto batch = pairs.subspan(b * batch_size, std::min(batch_size, pairs.size() - b * batch_size));
        auto describe = [&] {
            return "batch " + std::to_string(b + 1) + "/" + std::to_string(batches) + " (pairs " +
                   std::to_string(b * batch_size) + ".." + std::to_string(b * batch_size + batch.size() - 1) + ")";
        };
        std::vector<double> scores;
        try {
            scores = transport.score(batch);
        } catch (const TransportError& e) {
            throw TransportError(describe() + ": " + e.what());
        }
        if (scores.size() != batch.size())
            throw TransportError(describe() + ": expected " + std::to_string(batch.size()) +
                                 " scores, got " + std::to_string(scores.size()));
        for (double s : scores) {
            if (!std::isfinite(s) || s < 0.0 || s > 1.0)
                throw TransportError(describe() + ": score outside [0, 1]");
        }
        results[b] = std::move(scores);
    };

    // Windows of max_in_flight concurrent batches; results land in their own slots.
    for (std::size_t start = 0; start < batches; start += max_in_flight) {
        const std::size_t end = std::min(batches, start + max_in_flight);
        if (end - start == 1) {
            run_batch(start);
            continue;
        }
        std::vector<std::future<void>> inflight;
        for (std::size_t b = start; b < end; ++b) inflight.push_back(std::async(std::launch::async, run_batch, b));
        for (auto& f : inflight) f.wait();
        for (auto& f : inflight) f.get();
    }

    ScoreTable table(std::move(scorer_name));
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < results[b].size(); ++i) {
            const auto& p = pairs[b * batch_size + i];
            table.insert(p.query_id, p.article_id, results[b][i]);
        }
    }
    return table;
}

ScoreTable request_scores(std::span<const ScorePair> pairs, const ScoringConfig& config,
                          std::string scorer_name) {
    HttpScoringTransport transport(config.endpoint);
    return request_scores(pairs, transport, std::move(scorer_name), config.batch_size, config.max_in_flight);
}

} // namespace statuterank::semantic
