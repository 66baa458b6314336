// Populates an LLM response cache from a JSONL file of recorded replies, so a
// pipeline config can run in fixture mode. Each input line is
//   {"query_id": "...", "kind": "term-extraction" | "reformulation", "text": "..."}
#include "statuterank/corpus.hpp"
#include "statuterank/error.hpp"
#include "statuterank/expand.hpp"
#include "statuterank/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <map>

namespace se = statuterank::expand;

namespace {

class ReplayTransport final : public se::ChatTransport {
public:
    std::map<std::string, std::string> replies;  // rendered prompt -> reply

    std::string complete(const std::string&, const std::string& prompt) override {
        auto it = replies.find(prompt);
        if (it == replies.end()) throw statuterank::TransportError("no recorded reply for prompt");
        return it->second;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"seed an LLM response cache from recorded replies"};
    std::string config_path, responses_path;
    app.add_option("--config", config_path, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--responses", responses_path, "recorded replies (JSONL)")->required()->check(CLI::ExistingFile);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = statuterank::pipeline::PipelineConfig::load(config_path);
        const auto queries = statuterank::corpus::load_queries(config.queries);
        std::map<std::string, const statuterank::corpus::QueryRecord*> by_id;
        for (const auto& q : queries) by_id[q.id] = &q;

        auto transport = std::make_shared<ReplayTransport>();
        std::vector<std::pair<se::PromptKind, const statuterank::corpus::QueryRecord*>> jobs;
        std::ifstream in(responses_path);
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            auto j = nlohmann::json::parse(line);
            auto q = by_id.find(j.at("query_id").get<std::string>());
            if (q == by_id.end()) throw statuterank::DataError("unknown query id", n);
            const auto kind_name = j.at("kind").get<std::string>();
            se::PromptKind kind;
            if (kind_name == "term-extraction")
                kind = se::PromptKind::TermExtraction;
            else if (kind_name == "reformulation")
                kind = se::PromptKind::Reformulation;
            else
                throw statuterank::DataError("unknown kind " + kind_name, n);
            transport->replies[config.llm.prompt(kind).render(q->second->original_text)] =
                j.at("text").get<std::string>();
            jobs.emplace_back(kind, q->second);
        }

        std::filesystem::create_directories(config.cache_dir);
        se::LlmClient client(config.llm, transport, config.cache_dir);
        for (const auto& [kind, q] : jobs) {
            if (kind == se::PromptKind::TermExtraction)
                client.extract_terms(*q);
            else
                client.reformulate(*q);
        }
        std::cout << "seeded " << client.network_calls() << " new entries (" << jobs.size() << " replies) in "
                  << config.cache_dir.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "seed_llm_cache: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
