#pragma once

#include "statuterank/corpus.hpp"
#include "statuterank/tokenize.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace statuterank::lexical {

/// Okapi BM25 free parameters.
struct Bm25Params {
    double k1 = 1.2;  // term-frequency saturation
    double b = 0.75;  // length normalization

    /// Throws std::invalid_argument unless k1 >= 0 and b in [0, 1].
    void validate() const;
};

struct Posting {
    std::uint32_t doc;  // dense document index, see InvertedIndex::article_id()
    std::uint32_t tf;

    bool operator==(const Posting&) const = default;
};

struct ScoredArticle {
    std::string article_id;
    double score;

    bool operator==(const ScoredArticle&) const = default;
};

/// Immutable term -> postings index over a statute corpus.
///
/// Documents are addressed internally by their position in the build input.
/// Postings lists are sorted by document index and every tf is >= 1.
class InvertedIndex {
public:
    static constexpr int kFormatVersion = 1;

    /// Throws std::invalid_argument for an empty corpus or a corpus whose
    /// articles all tokenize to nothing.
    static InvertedIndex build(std::span<const corpus::Article> articles, tokenize::Scheme scheme);

    tokenize::Scheme scheme() const noexcept { return scheme_; }
    std::size_t doc_count() const noexcept { return ids_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }

    const std::string& article_id(std::uint32_t doc) const { return ids_.at(doc); }
    std::uint32_t doc_length(std::uint32_t doc) const { return lengths_.at(doc); }
    std::optional<std::uint32_t> find(std::string_view article_id) const;

    /// Empty span for terms absent from the corpus.
    std::span<const Posting> postings(const std::string& term) const;
    std::size_t document_frequency(const std::string& term) const { return postings(term).size(); }
    std::size_t vocabulary_size() const noexcept { return postings_.size(); }

    nlohmann::json to_json() const;
    static InvertedIndex from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    bool operator==(const InvertedIndex& other) const;

private:
    InvertedIndex() = default;
    void finalize();

    tokenize::Scheme scheme_ = tokenize::Scheme::UnicodeBasic;
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> lengths_;
    std::map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    double avg_doc_length_ = 0.0;
};

/// Tokens of an article under `scheme`, preferring the record's own token list.
tokenize::TokenSequence article_tokens(const corpus::Article& article, tokenize::Scheme scheme);

/// Tokens of the original query text.
tokenize::TokenSequence query_tokens(const corpus::QueryRecord& query, tokenize::Scheme scheme);

/// Tokens of the term-expanded query: original query tokens followed by the
/// tokens of each extracted term, in order.
tokenize::TokenSequence expanded_query_tokens(const corpus::QueryRecord& query, tokenize::Scheme scheme);

/// ln(1 + (m - df + 0.5) / (df + 0.5)); always positive.
double idf(std::size_t doc_count, std::size_t doc_freq);

/// BM25 of a query against one article. Each query token occurrence contributes
/// independently; tokens absent from the corpus contribute 0.
/// Throws std::out_of_range for an unknown article id.
double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  const tokenize::TokenSequence& query_tokens, std::string_view article_id);

/// Scores for every document, indexed by document index.
std::vector<double> score_all(const InvertedIndex& index, const Bm25Params& params,
                              const tokenize::TokenSequence& query_tokens);

/// The min(k, m) best articles, descending by score, ties ascending by article id.
/// Throws std::invalid_argument for k == 0.
std::vector<ScoredArticle> top_k(const InvertedIndex& index, const Bm25Params& params,
                                 const tokenize::TokenSequence& query_tokens, std::size_t k);

} // namespace statuterank::lexical
