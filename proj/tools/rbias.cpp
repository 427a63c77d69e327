// rbias: retrievability and usefulness audit of a typed document collection.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rbias/pipeline.hpp"

namespace {

struct Flag {
    const char* name;
    const char* help;
};

constexpr Flag value_flags[] = {
    {"corpus", "Corpus file (.jsonl or .tsv)"},
    {"log", "Interaction log (.tsv with header, or .jsonl)"},
    {"queries", "Query set file written by gen-queries (alternative to --log)"},
    {"categories", "Comma-separated record types to process (default: all in corpus)"},
    {"cutoffs", "Comma-separated rank cutoffs (default 10,20,30,40,50,100)"},
    {"depth", "Retrieval depth k (default 100)"},
    {"compare-cutoff", "Cutoff used by compare (default 100)"},
    {"k1", "BM25 k1 (default 1.2)"},
    {"b", "BM25 b (default 0.75)"},
    {"weights", "Query weights: uniform or popularity"},
    {"population", "Population: all-docs or retrieved-only"},
    {"rbo-p", "RBO persistence p (default 0.9)"},
    {"jaccard-k", "Comma-separated top-k depths for Jaccard"},
    {"out", "Output bundle directory"},
    {"seed", "Seed for all sampling"},
    {"workers", "Retrieval threads (results do not depend on it)"},
    {"min-cf", "Minimum collection frequency for sampled queries"},
    {"max-n", "Maximum sampled queries per kind (0 = no cap)"},
    {"zipf-s", "Zipf skew of the synthetic query log"},
    {"zipf-m", "Occurrences in the synthetic query log (0 = none)"},
    {"docs-per-category", "Documents per category for gen-corpus"},
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Retrievability bias audit toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rbias::version));

    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;
    for (const auto& f : value_flags) {
        options.emplace_back(f.name, app.add_option(std::string("--") + f.name, values[f.name], f.help));
    }
    std::string config_path;
    app.add_option("--config", config_path, "Flat key=value config file (flags take precedence)");
    bool record_timings = false;
    bool write_results = false;
    auto* timings_opt = app.add_flag("--record-timings", record_timings, "Add wall-clock timings to manifest.json");
    auto* results_opt = app.add_flag("--write-results", write_results, "audit: also write per-query result TSVs");

    struct Command {
        const char* name;
        const char* help;
        void (*run)(const rbias::RunConfig&);
    };
    const Command commands[] = {
        {"index", "Build and persist one index per category", rbias::cmd_index},
        {"gen-queries", "Sample unigram/bigram queries and an optional Zipf log", rbias::cmd_genqueries},
        {"audit", "Retrievability sweep, inequality tables and Lorenz curves", rbias::cmd_audit},
        {"usefulness", "Usefulness from export events with Gini and Lorenz curves", rbias::cmd_usefulness},
        {"compare", "Compare repeated vs unique query sets", rbias::cmd_compare},
        {"gen-corpus", "Write a seeded synthetic typed corpus", rbias::cmd_gencorpus},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& cmd : commands) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->fallthrough();
        subs.emplace_back(sub, &cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        rbias::RunConfig cfg;
        if (!config_path.empty()) {
            rbias::apply_config_file(cfg, config_path);
        }
        for (const auto& [name, opt] : options) {
            if (opt->count() > 0) {
                rbias::apply_setting(cfg, name, values[name]);
            }
        }
        if (timings_opt->count() > 0) {
            cfg.record_timings = record_timings;
        }
        if (results_opt->count() > 0) {
            cfg.write_results = write_results;
        }
        for (const auto& [sub, cmd] : subs) {
            if (sub->parsed()) {
                cmd->run(cfg);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
