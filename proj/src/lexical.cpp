#include "statuterank/lexical.hpp"

#include "statuterank/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace statuterank::lexical {

using nlohmann::json;

void Bm25Params::validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) throw std::invalid_argument("bm25: k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("bm25: b must be in [0, 1]");
}

tokenize::TokenSequence article_tokens(const corpus::Article& article, tokenize::Scheme scheme) {
    if (article.tokens) return *article.tokens;
    return tokenize::tokenize(article.text, scheme);
}

tokenize::TokenSequence query_tokens(const corpus::QueryRecord& query, tokenize::Scheme scheme) {
    if (query.tokens) return *query.tokens;
    return tokenize::tokenize(query.original_text, scheme);
}

tokenize::TokenSequence expanded_query_tokens(const corpus::QueryRecord& query, tokenize::Scheme scheme) {
    auto tokens = query_tokens(query, scheme);
    for (const auto& term : query.terms) {
        auto extra = tokenize::tokenize(term, scheme);
        tokens.insert(tokens.end(), extra.begin(), extra.end());
    }
    return tokens;
}

InvertedIndex InvertedIndex::build(std::span<const corpus::Article> articles, tokenize::Scheme scheme) {
    if (articles.empty()) throw std::invalid_argument("cannot index an empty corpus");
    if (articles.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("corpus too large");

    InvertedIndex index;
    index.scheme_ = scheme;
    index.ids_.reserve(articles.size());
    index.lengths_.reserve(articles.size());

    for (std::uint32_t doc = 0; doc < articles.size(); ++doc) {
        const auto& article = articles[doc];
        auto tokens = article_tokens(article, scheme);
        index.ids_.push_back(article.id);
        index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));

        std::map<std::string, std::uint32_t> counts;
        for (auto& t : tokens) ++counts[std::move(t)];
        // Documents are visited in order, so every postings list stays sorted.
        for (auto& [term, tf] : counts) index.postings_[term].push_back({doc, tf});
    }
    index.finalize();
    return index;
}

void InvertedIndex::finalize() {
    by_id_.clear();
    for (std::uint32_t doc = 0; doc < ids_.size(); ++doc) {
        if (!by_id_.emplace(ids_[doc], doc).second)
            throw std::invalid_argument("duplicate article id \"" + ids_[doc] + "\"");
    }
    std::uint64_t total = 0;
    for (auto len : lengths_) total += len;
    if (total == 0) throw std::invalid_argument("corpus contains no tokens");
    avg_doc_length_ = static_cast<double>(total) / static_cast<double>(ids_.size());
}

std::optional<std::uint32_t> InvertedIndex::find(std::string_view article_id) const {
    auto it = by_id_.find(std::string(article_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

bool InvertedIndex::operator==(const InvertedIndex& other) const {
    return scheme_ == other.scheme_ && ids_ == other.ids_ && lengths_ == other.lengths_ &&
           postings_ == other.postings_;
}

json InvertedIndex::to_json() const {
    json docs = json::array();
    for (std::size_t i = 0; i < ids_.size(); ++i) docs.push_back({{"id", ids_[i]}, {"length", lengths_[i]}});
    json postings = json::object();
    for (const auto& [term, list] : postings_) {
        json entries = json::array();
        for (const auto& p : list) entries.push_back({p.doc, p.tf});
        postings[term] = std::move(entries);
    }
    return {{"format", "statuterank-index"},
            {"version", kFormatVersion},
            {"scheme", tokenize::scheme_name(scheme_)},
            {"documents", std::move(docs)},
            {"postings", std::move(postings)}};
}

InvertedIndex InvertedIndex::from_json(const json& j) {
    try {
        if (j.at("format") != "statuterank-index") throw DataError("not a statuterank index");
        if (j.at("version").get<int>() != kFormatVersion)
            throw DataError("unsupported index version " + j.at("version").dump());

        InvertedIndex index;
        index.scheme_ = tokenize::parse_scheme(j.at("scheme").get<std::string>());
        for (const auto& d : j.at("documents")) {
            index.ids_.push_back(d.at("id").get<std::string>());
            index.lengths_.push_back(d.at("length").get<std::uint32_t>());
        }
        if (index.ids_.empty()) throw DataError("index has no documents");
        for (const auto& [term, entries] : j.at("postings").items()) {
            auto& list = index.postings_[term];
            for (const auto& e : entries) {
                Posting p{e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()};
                if (p.doc >= index.ids_.size() || p.tf == 0)
                    throw DataError("invalid posting for term \"" + term + "\"");
                if (!list.empty() && list.back().doc >= p.doc)
                    throw DataError("unsorted postings for term \"" + term + "\"");
                list.push_back(p);
            }
        }
        index.finalize();
        return index;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed index: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed index: ") + e.what());
    }
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json().dump() << '\n';
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

double idf(std::size_t doc_count, std::size_t doc_freq) {
    const double m = static_cast<double>(doc_count);
    const double df = static_cast<double>(doc_freq);
    return std::log(1.0 + (m - df + 0.5) / (df + 0.5));
}

namespace {

double term_weight(double idf_value, double tf, double k1, double b, double dl, double avgdl) {
    return idf_value * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
}

} // namespace

double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  const tokenize::TokenSequence& query_tokens, std::string_view article_id) {
    params.validate();
    auto doc = index.find(article_id);
    if (!doc) throw std::out_of_range("unknown article id \"" + std::string(article_id) + "\"");
    const double dl = index.doc_length(*doc);
    double score = 0.0;
    for (const auto& token : query_tokens) {
        auto list = index.postings(token);
        auto it = std::lower_bound(list.begin(), list.end(), *doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (it == list.end() || it->doc != *doc) continue;
        score += term_weight(idf(index.doc_count(), list.size()), it->tf, params.k1, params.b, dl,
                             index.avg_doc_length());
    }
    return score;
}

std::vector<double> score_all(const InvertedIndex& index, const Bm25Params& params,
                              const tokenize::TokenSequence& query_tokens) {
    params.validate();
    std::vector<double> scores(index.doc_count(), 0.0);
    for (const auto& token : query_tokens) {
        auto list = index.postings(token);
        if (list.empty()) continue;
        const double w = idf(index.doc_count(), list.size());
        for (const auto& p : list) {
            scores[p.doc] += term_weight(w, p.tf, params.k1, params.b, index.doc_length(p.doc),
                                         index.avg_doc_length());
        }
    }
    return scores;
}

std::vector<ScoredArticle> top_k(const InvertedIndex& index, const Bm25Params& params,
                                 const tokenize::TokenSequence& query_tokens, std::size_t k) {
    if (k == 0) throw std::invalid_argument("top_k: k must be >= 1");
    auto scores = score_all(index, params, query_tokens);

    std::vector<std::uint32_t> order(scores.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.article_id(a) < index.article_id(b);
    };
    const std::size_t n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);

    std::vector<ScoredArticle> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({index.article_id(order[i]), scores[order[i]]});
    return out;
}

} // namespace statuterank::lexical
