#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace statuterank::corpus {

/// One statute provision.
struct Article {
    std::string id;
    std::string text;
    /// Externally produced tokens ("tokens" field); bypasses the tokenizer when present.
    std::optional<std::vector<std::string>> tokens;

    bool operator==(const Article&) const = default;
};

/// A query together with its LLM expansion products.
///
/// `term_expanded_text` is always derived (original text followed by the terms)
/// and is never read from or written to disk.
struct QueryRecord {
    std::string id;
    std::string original_text;
    std::vector<std::string> terms;
    std::string term_expanded_text;
    std::string reformulated_text;
    std::optional<std::vector<std::string>> tokens;

    /// Replaces the terms and recomputes term_expanded_text.
    void set_terms(std::vector<std::string> new_terms);

    bool operator==(const QueryRecord&) const = default;
};

/// query_id -> set of relevant article ids. Every set is non-empty.
using GoldLabels = std::map<std::string, std::set<std::string>>;

std::vector<Article> parse_corpus(std::istream& in);
std::vector<Article> load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const std::vector<Article>& articles);
void save_corpus(const std::filesystem::path& path, const std::vector<Article>& articles);

std::vector<QueryRecord> parse_queries(std::istream& in);
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);
void write_queries(std::ostream& out, const std::vector<QueryRecord>& queries);
void save_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& queries);

GoldLabels parse_qrels(std::istream& in);
GoldLabels load_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const GoldLabels& gold);

/// Checks that every qrels query id exists in `queries`, every article id exists
/// in `articles`, and every gold set is non-empty. Throws ValidationError listing
/// all offenders.
void validate(const std::vector<Article>& articles, const std::vector<QueryRecord>& queries,
              const GoldLabels& gold);

} // namespace statuterank::corpus
