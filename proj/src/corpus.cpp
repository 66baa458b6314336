#include "statuterank/corpus.hpp"

#include "statuterank/error.hpp"
#include "statuterank/expand.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace statuterank::corpus {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Calls fn(object, line_no) for every non-blank line of a JSON-lines stream.
template <class Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (is_blank(line)) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        if (!record.is_object()) throw DataError("record is not a JSON object", line_no);
        fn(record, line_no);
    }
}

std::string required_string(const json& record, const char* field, std::size_t line_no) {
    auto it = record.find(field);
    if (it == record.end()) throw DataError(std::string("missing field \"") + field + "\"", line_no);
    if (!it->is_string()) throw DataError(std::string("field \"") + field + "\" is not a string", line_no);
    auto value = it->get<std::string>();
    if (value.empty()) throw DataError(std::string("field \"") + field + "\" is empty", line_no);
    return value;
}

std::optional<std::vector<std::string>> optional_strings(const json& record, const char* field,
                                                         std::size_t line_no) {
    auto it = record.find(field);
    if (it == record.end() || it->is_null()) return std::nullopt;
    if (!it->is_array()) throw DataError(std::string("field \"") + field + "\" is not an array", line_no);
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw DataError(std::string("field \"") + field + "\" holds a non-string", line_no);
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace

void QueryRecord::set_terms(std::vector<std::string> new_terms) {
    terms = std::move(new_terms);
    term_expanded_text = expand::term_expand_concat(original_text, terms);
}

std::vector<Article> parse_corpus(std::istream& in) {
    std::vector<Article> articles;
    std::unordered_set<std::string> seen;
    for_each_record(in, [&](const json& record, std::size_t line_no) {
        Article a;
        a.id = required_string(record, "id", line_no);
        a.text = required_string(record, "text", line_no);
        a.tokens = optional_strings(record, "tokens", line_no);
        if (!seen.insert(a.id).second) throw DataError("duplicate article id \"" + a.id + "\"", line_no);
        articles.push_back(std::move(a));
    });
    return articles;
}

std::vector<Article> load_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<Article>& articles) {
    for (const auto& a : articles) {
        json record = {{"id", a.id}, {"text", a.text}};
        if (a.tokens) record["tokens"] = *a.tokens;
        out << record.dump() << '\n';
    }
}

void save_corpus(const std::filesystem::path& path, const std::vector<Article>& articles) {
    auto out = open_output(path);
    write_corpus(out, articles);
}

std::vector<QueryRecord> parse_queries(std::istream& in) {
    std::vector<QueryRecord> queries;
    std::unordered_set<std::string> seen;
    for_each_record(in, [&](const json& record, std::size_t line_no) {
        QueryRecord q;
        q.id = required_string(record, "id", line_no);
        q.original_text = required_string(record, "original_text", line_no);
        q.set_terms(optional_strings(record, "terms", line_no).value_or(std::vector<std::string>{}));
        if (auto it = record.find("reformulated_text"); it != record.end() && !it->is_null()) {
            if (!it->is_string()) throw DataError("field \"reformulated_text\" is not a string", line_no);
            q.reformulated_text = it->get<std::string>();
        }
        q.tokens = optional_strings(record, "tokens", line_no);
        if (!seen.insert(q.id).second) throw DataError("duplicate query id \"" + q.id + "\"", line_no);
        queries.push_back(std::move(q));
    });
    return queries;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_queries(in);
}

void write_queries(std::ostream& out, const std::vector<QueryRecord>& queries) {
    for (const auto& q : queries) {
        json record = {{"id", q.id}, {"original_text", q.original_text}};
        if (!q.terms.empty()) record["terms"] = q.terms;
        if (!q.reformulated_text.empty()) record["reformulated_text"] = q.reformulated_text;
        if (q.tokens) record["tokens"] = *q.tokens;
        out << record.dump() << '\n';
    }
}

void save_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& queries) {
    auto out = open_output(path);
    write_queries(out, queries);
}

GoldLabels parse_qrels(std::istream& in) {
    GoldLabels gold;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw DataError("expected query_id<TAB>article_id", line_no);
        std::string query_id = line.substr(0, tab);
        std::string article_id = line.substr(tab + 1);
        if (query_id.empty() || article_id.empty()) throw DataError("empty id", line_no);
        gold[query_id].insert(article_id);
    }
    return gold;
}

GoldLabels load_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_qrels(in);
}

void write_qrels(std::ostream& out, const GoldLabels& gold) {
    for (const auto& [query_id, articles] : gold)
        for (const auto& article_id : articles) out << query_id << '\t' << article_id << '\n';
}

void validate(const std::vector<Article>& articles, const std::vector<QueryRecord>& queries,
              const GoldLabels& gold) {
    std::unordered_set<std::string> article_ids, query_ids;
    for (const auto& a : articles) article_ids.insert(a.id);
    for (const auto& q : queries) query_ids.insert(q.id);

    std::vector<std::string> problems;
    for (const auto& [query_id, relevant] : gold) {
        if (!query_ids.contains(query_id)) problems.push_back("unknown query \"" + query_id + "\"");
        if (relevant.empty()) problems.push_back("empty gold set for query \"" + query_id + "\"");
        for (const auto& article_id : relevant)
            if (!article_ids.contains(article_id))
                problems.push_back("unknown article \"" + article_id + "\" (query \"" + query_id + "\")");
    }
    if (problems.empty()) return;

    std::ostringstream msg;
    msg << "qrels validation failed:";
    for (const auto& p : problems) msg << "\n  " << p;
    throw ValidationError(msg.str());
}

} // namespace statuterank::corpus
