// Library walk-through: retrievability and inequality for each record type
// of a small corpus and log.
//
//   audit_demo demo/data/corpus.jsonl demo/data/log.tsv

#include <iostream>

#include "rbias/inequality.hpp"
#include "rbias/rankcompare.hpp"
#include "rbias/retrievability.hpp"

int main(int argc, char** argv)
{
    if (argc != 3) {
        std::cerr << "usage: audit_demo <corpus.jsonl> <log.tsv>\n";
        return 2;
    }
    try {
        const auto corpus = rbias::ingest_corpus(argv[1]);
        const auto log = rbias::parse_log(argv[2]);
        rbias::BatchOptions options;
        options.k = 10;

        for (const auto& category : corpus.categories()) {
            auto [repeated, unique] = rbias::build_query_sets(log.entries, category);
            const auto index = rbias::build_index(corpus, {}, category);
            const auto sweep = rbias::retrievability_sweep(index, {}, unique, {1, 3, 10}, options);

            std::cout << category.name() << ": " << index.doc_count() << " documents, "
                      << repeated.occurrence_count() << " searches, " << unique.entries.size() << " distinct\n";
            for (const auto& v : sweep.vectors) {
                if (v.scores.positive_count() == 0) {
                    std::cout << "  c=" << v.cutoff << "  nothing retrieved\n";
                    continue;
                }
                const auto report = rbias::inequality_report(v.scores, rbias::PopulationMode::all_docs, v.cutoff);
                std::cout << "  c=" << v.cutoff << "  gini=" << rbias::format_fixed(report.gini, 4)
                          << "  retrieved=" << rbias::format_fixed(report.stats.pct_retrieved, 1) << "%\n";
            }

            const auto exports = rbias::extract_exports(log.entries, category);
            if (!exports.empty()) {
                const auto u = rbias::compute_usefulness(exports, index.doc_count(), category);
                std::cout << "  usefulness gini=" << rbias::format_fixed(rbias::inequality_report(u.scores).gini, 4)
                          << " over " << u.event_count << " exports\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
