#include "statuterank/evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace statuterank::eval {

using nlohmann::json;

double f2_measure(double precision, double recall) {
    const double denom = 4.0 * precision + recall;
    return denom == 0.0 ? 0.0 : 5.0 * precision * recall / denom;
}

Prf2 prf2_counts(std::size_t hits, std::size_t predicted_size, std::size_t gold_size) {
    if (gold_size == 0) throw std::invalid_argument("prf2: empty gold set");
    if (hits > predicted_size || hits > gold_size) throw std::invalid_argument("prf2: hits exceed set sizes");
    Prf2 out;
    out.precision = predicted_size == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(predicted_size);
    out.recall = static_cast<double>(hits) / static_cast<double>(gold_size);
    out.f2 = f2_measure(out.precision, out.recall);
    return out;
}

Prf2 prf2(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
    std::size_t hits = 0;
    for (const auto& p : predicted) hits += gold.contains(p) ? 1 : 0;
    return prf2_counts(hits, predicted.size(), gold.size());
}

EvalReport macro_average(const std::map<std::string, Prf2>& per_query) {
    if (per_query.empty()) throw std::invalid_argument("macro_average: no queries");
    EvalReport r;
    r.per_query = per_query;
    for (const auto& [id, m] : per_query) {
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f2 += m.f2;
    }
    const double n = static_cast<double>(per_query.size());
    r.macro_precision /= n;
    r.macro_recall /= n;
    r.macro_f2 /= n;
    r.queries = per_query.size();
    return r;
}

EvalReport evaluate(const std::map<std::string, std::set<std::string>>& predicted,
                    const corpus::GoldLabels& gold) {
    static const std::set<std::string> kNone;
    std::map<std::string, Prf2> per_query;
    for (const auto& [query_id, relevant] : gold) {
        auto it = predicted.find(query_id);
        per_query[query_id] = prf2(it == predicted.end() ? kNone : it->second, relevant);
    }
    return macro_average(per_query);
}

namespace {

// Fixed-precision rendering keeps reports byte-stable across platforms.
std::string fixed(double v, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json rounded(double v) { return json::parse(fixed(v, 6)); }

} // namespace

json EvalReport::to_json() const {
    json pq = json::object();
    for (const auto& [id, m] : per_query)
        pq[id] = {{"f2", rounded(m.f2)}, {"precision", rounded(m.precision)}, {"recall", rounded(m.recall)}};
    return {{"queries", queries},
            {"macro_f2", rounded(macro_f2)},
            {"macro_precision", rounded(macro_precision)},
            {"macro_recall", rounded(macro_recall)},
            {"per_query", std::move(pq)}};
}

std::string EvalReport::to_table(const std::string& title) const {
    std::size_t width = std::string("macro").size();
    for (const auto& [id, m] : per_query) width = std::max(width, id.size());

    std::ostringstream out;
    auto row = [&](const std::string& label, const std::string& f2, const std::string& p, const std::string& r) {
        out << label << std::string(width - label.size() + 2, ' ');
        for (const auto* cell : {&f2, &p, &r}) out << std::string(8 - std::min<std::size_t>(8, cell->size()), ' ') << *cell;
        out << '\n';
    };
    out << title << '\n';
    row("query", "F2", "P", "R");
    out << std::string(width + 2 + 24, '-') << '\n';
    for (const auto& [id, m] : per_query) row(id, fixed(m.f2), fixed(m.precision), fixed(m.recall));
    out << std::string(width + 2 + 24, '-') << '\n';
    row("macro", fixed(macro_f2), fixed(macro_precision), fixed(macro_recall));
    return out.str();
}

RecallAtK recall_at_k(const std::map<std::string, std::vector<std::string>>& rankings,
                      const corpus::GoldLabels& gold, std::size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (gold.empty()) throw std::invalid_argument("recall_at_k: no gold queries");
    double macro_sum = 0.0;
    std::size_t hits_total = 0, gold_total = 0;
    for (const auto& [query_id, relevant] : gold) {
        auto it = rankings.find(query_id);
        if (it == rankings.end())
            throw std::invalid_argument("recall_at_k: no ranking for query \"" + query_id + "\"");
        if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty gold set for \"" + query_id + "\"");
        const auto& ranked = it->second;
        const std::size_t depth = std::min(k, ranked.size());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < depth; ++i) hits += relevant.contains(ranked[i]) ? 1 : 0;
        macro_sum += static_cast<double>(hits) / static_cast<double>(relevant.size());
        hits_total += hits;
        gold_total += relevant.size();
    }
    return {macro_sum / static_cast<double>(gold.size()),
            static_cast<double>(hits_total) / static_cast<double>(gold_total)};
}

} // namespace statuterank::eval
