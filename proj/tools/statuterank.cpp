// Command-line front end for the retrieval pipeline.
#include "statuterank/error.hpp"
#include "statuterank/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace sp = statuterank::pipeline;

namespace {

enum ExitCode { kOk = 0, kError = 1, kPartial = 2 };

struct Args {
    std::string config;
    std::string work_dir;
    bool no_clobber = false;
    bool quiet = false;
    int variant = 0;
};

void add_common(CLI::App* sub, Args& args) {
    sub->add_option("--config", args.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--work-dir", args.work_dir, "override paths.work_dir");
    sub->add_flag("--no-clobber", args.no_clobber, "skip steps whose outputs already exist");
    sub->add_flag("-q,--quiet", args.quiet, "suppress progress output");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"statuterank: statute article retrieval with LLM query expansion"};
    app.require_subcommand(1);
    Args args;

    auto* index = app.add_subcommand("index", "tokenize the corpus and build the BM25 index");
    auto* expand = app.add_subcommand("expand", "extract legal terms and reformulate queries with the LLM");
    auto* score = app.add_subcommand("score", "build candidate pools and per-scorer score tables");
    auto* tune = app.add_subcommand("tune", "grid-search ensemble weights and threshold on validation queries");
    auto* evaluate = app.add_subcommand("evaluate", "fuse, select and report F2/P/R and recall@k");
    auto* run_all = app.add_subcommand("run-all", "index, expand, score, tune and evaluate");
    for (auto* sub : {index, expand, score, tune, evaluate, run_all}) add_common(sub, args);
    evaluate->add_option("--variant", args.variant, "evaluate only variant 1, 2 or 3")->check(CLI::Range(1, 3));

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = sp::PipelineConfig::load(args.config);
        if (!args.work_dir.empty()) config.work_dir = std::filesystem::absolute(args.work_dir);
        sp::CommandOptions options;
        options.no_clobber = args.no_clobber;
        options.log = args.quiet ? nullptr : &std::cerr;
        if (args.variant != 0) options.variant = args.variant;

        if (index->parsed()) {
            sp::cmd_index(config, options);
        } else if (expand->parsed()) {
            auto s = sp::cmd_expand(config, options);
            if (s.failures > 0) {
                std::cerr << "statuterank: " << s.failures << " queries could not be expanded, see "
                          << config.expand_log_path().string() << '\n';
                return kPartial;
            }
        } else if (score->parsed()) {
            sp::cmd_score(config, options);
        } else if (tune->parsed()) {
            sp::cmd_tune(config, options);
        } else if (evaluate->parsed()) {
            sp::cmd_evaluate(config, options);
        } else if (run_all->parsed()) {
            sp::run_all(config, options);
        }
    } catch (const statuterank::DataError& e) {
        std::cerr << "statuterank: data error: " << e.what() << '\n';
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "statuterank: " << e.what() << '\n';
        return kError;
    }
    return kOk;
}
