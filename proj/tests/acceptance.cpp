// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rbias/pipeline.hpp"

using namespace rbias;
using testutil::slurp;
using testutil::snapshot;
using testutil::TempDir;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        for (auto c : split(line, ',')) {
            cells.emplace_back(c);
        }
        rows.push_back(cells);
    }
    return rows;
}

ScoreVector read_vector(const std::filesystem::path& path, std::size_t collection_size)
{
    std::ifstream in(path, std::ios::binary);
    return read_score_vector_tsv(in, collection_size, path.string());
}

const std::vector<std::string> category_names = {"publication", "dataset", "variable"};
const std::vector<std::size_t> sweep_cutoffs = {10, 20, 30, 40, 50, 100};

/// Seeded desk-scale pipeline: gen-corpus, gen-queries, audit, compare.
struct DeskRun {
    std::filesystem::path root;
    std::filesystem::path corpus_dir;
    std::filesystem::path queries_dir;
    std::filesystem::path audit_dir;
    std::filesystem::path compare_dir;
    double seconds = 0.0;
};

DeskRun desk_run(const TempDir& dir, const std::string& tag, std::size_t workers)
{
    const auto start = std::chrono::steady_clock::now();
    DeskRun run;
    run.root = dir.path() / tag;
    std::filesystem::create_directories(run.root);
    run.corpus_dir = run.root / "corpus";
    run.queries_dir = run.root / "queries";
    run.audit_dir = run.root / "audit";
    run.compare_dir = run.root / "compare";

    RunConfig cfg;
    cfg.seed = 42;
    cfg.workers = workers;
    cfg.docs_per_category = 1000;
    cfg.out = run.corpus_dir.string();
    cmd_gencorpus(cfg);

    cfg.corpus = (run.corpus_dir / "corpus.jsonl").string();
    cfg.min_cf = 2;
    cfg.max_n = 1000;
    cfg.zipf_s = 1.5;
    cfg.zipf_m = 20000;
    cfg.out = run.queries_dir.string();
    cmd_genqueries(cfg);

    cfg.log = (run.queries_dir / "synthetic_log.tsv").string();
    cfg.cutoffs = sweep_cutoffs;
    cfg.depth = 100;
    cfg.out = run.audit_dir.string();
    cmd_audit(cfg);

    cfg.compare_cutoff = 100;
    cfg.jaccard_k = {10, 50, 100};
    cfg.out = run.compare_dir.string();
    cmd_compare(cfg);

    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

// Seeded regression fixtures of the desk-scale run (seed 42).
const char* const frozen_gini_by_cutoff =
    "cutoff,gini_publication,gini_dataset,gini_variable,retrieved_publication,pct_publication,retrieved_dataset,pct_dataset,retrieved_variable,pct_variable\n"
    "10,0.4951556181213207,0.6335870189546238,0.8361072124756336,853,85.3,653,65.3,272,27.200000000000003\n"
    "20,0.370636195995785,0.5129899425287356,0.7223064312736444,987,98.7,818,81.8,432,43.2\n"
    "30,0.32252781371280725,0.4397897245762712,0.6393358925143954,996,99.6,917,91.7,555,55.50000000000001\n"
    "40,0.2967597975415763,0.39008178752107925,0.5865091053048298,998,99.8,954,95.39999999999999,633,63.3\n"
    "50,0.2841943560492345,0.35080312884513976,0.5556008230452675,1000,100,982,98.2,684,68.4\n"
    "100,0.24472868539715575,0.28462292309222964,0.43375540765391013,1000,100,999,99.9,858,85.8\n";
const char* const frozen_jaccard =
    "k,publication,dataset,variable\n"
    "10,0.1111111111111111,0.17647058823529413,0.25\n"
    "50,0.16279069767441862,0.12359550561797752,0.35135135135135137\n"
    "100,0.11731843575418995,0.14942528735632185,0.22699386503067484\n";
const char* const frozen_correlation =
    "measure,publication,dataset,variable\n"
    "kendall_tau,0.5301376597766616,0.5960325943207906,0.6421023287938068\n"
    "spearman_rho,0.686145980354859,0.7464681197612975,0.7614150753580416\n"
    "rbo,0.2679139897480167,0.5362258686098327,0.6250426964061713\n";

Outcome criterion_1()
{
    Outcome o;
    o.require(gini(std::vector<double>{5, 5, 5, 5}) == 0.0, "[5,5,5,5]");
    o.require(std::abs(gini(std::vector<double>{0, 0, 10}) - 0.6667) < 5e-5, "[0,0,10]");
    o.require(std::abs(gini(std::vector<double>{1, 2, 3, 4}) - 0.25) < 1e-12, "[1,2,3,4]");
    Rng rng(1001);
    double worst = 0.0;
    for (int round = 0; round < 1000; ++round) {
        const std::size_t n = 1 + rng.below(200);
        std::vector<double> v(n);
        for (auto& x : v) {
            x = rng.below(3) == 0 ? 0.0 : rng.next_double() * 100.0;
        }
        v[rng.below(n)] += 1.0;
        worst = std::max(worst, std::abs(gini(v) - oracle::gini_pairwise(v)));
    }
    o.require(worst <= 1e-9, "max |gini - oracle| = " + format_double(worst));
    if (o.pass) {
        o.detail = "1000 vectors, max deviation " + format_double(worst);
    }
    return o;
}

Outcome criterion_2()
{
    Outcome o;
    Rng rng(2002);
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h"};
    for (int round = 0; round < 100 && o.pass; ++round) {
        Corpus corpus;
        std::vector<oracle::Doc> docs;
        const std::size_t n_docs = 1 + rng.below(20);
        for (std::size_t i = 0; i < n_docs; ++i) {
            std::string body;
            for (std::uint64_t t = 0, len = 1 + rng.below(8); t < len; ++t) {
                body += vocab[rng.below(vocab.size())] + " ";
            }
            auto id = "doc" + std::to_string(100 + rng.below(900)) + "-" + std::to_string(i);
            corpus.add({id, Category::dataset(), "", body, {}});
            docs.push_back({id, oracle::tokens(body)});
        }
        auto index = build_index(corpus);
        QuerySet qs;
        std::vector<std::vector<std::string>> token_queries;
        std::set<std::string> used;
        for (std::uint64_t q = 0, n_q = 1 + rng.below(20); q < n_q; ++q) {
            std::string text = vocab[rng.below(vocab.size())];
            if (rng.below(2) == 0) {
                text += " " + vocab[rng.below(vocab.size())];
            }
            if (used.insert(text).second) {
                qs.entries.push_back({text, 1, 1.0});
                token_queries.push_back(oracle::tokens(text));
            }
        }
        const std::vector<double> weights(qs.entries.size(), 1.0);
        const std::vector<std::size_t> cutoffs = {1, 2, 3, 5, 10, 20};
        BatchOptions opt;
        opt.k = 20;
        auto results = batch_search(index, {}, qs, opt);
        auto sweep = accumulate(index, results, weights, cutoffs, opt.k);
        for (auto c : cutoffs) {
            const auto& got = sweep.at(c).scores;
            double mass = 0.0;
            for (const auto& [doc, s] : got.scores) {
                mass += s;
            }
            double expected_mass = 0.0;
            for (const auto& r : results) {
                expected_mass += static_cast<double>(std::min(c, r.hits.size()));
            }
            o.require(mass == expected_mass, "mass identity, round " + std::to_string(round) + " c=" +
                                                 std::to_string(c));
            auto brute = oracle::retrievability(docs, token_queries, weights, c);
            std::map<std::string, double> brute_positive;
            for (const auto& [doc, s] : brute) {
                if (s > 0.0) {
                    brute_positive[doc] = s;
                }
            }
            o.require(got.scores == brute_positive, "brute force mismatch, round " + std::to_string(round) +
                                                        " c=" + std::to_string(c));
        }
    }
    if (o.pass) {
        o.detail = "100 instances, mass identity and brute force exact";
    }
    return o;
}

Outcome criterion_3()
{
    Outcome o;
    Corpus corpus;
    corpus.add({"d1", Category::dataset(), "", "a b", {}});
    corpus.add({"d2", Category::dataset(), "", "a a b", {}});
    corpus.add({"d3", Category::dataset(), "", "c", {}});
    auto index = build_index(corpus);
    // Hand derivation: N=3, df(a)=2, avgdl=(2+3+1)/3=2, d2 has tf=2 and len=3.
    const double hand = std::log(1.6) * (2.0 * 2.2) / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / 2.0));
    const double score = bm25_score(index, {}, {"a"}, "d2");
    o.require(std::abs(hand - 0.566580) < 5e-7, "hand derivation");
    o.require(std::abs(score - hand) < 0.0005, "score(d2,[a]) = " + format_fixed(score, 6));
    auto hits = search(index, {}, {"a"}, 10);
    o.require(hits.size() == 2 && index.doc_id(hits[0].doc) == "d2" && index.doc_id(hits[1].doc) == "d1",
              "ranking is not [d2, d1]");
    if (o.pass) {
        o.detail = "score(d2,[a]) = " + format_fixed(score, 6) + " (hand-derived, avgdl = 2), ranking [d2, d1]";
    }
    return o;
}

Outcome criterion_4()
{
    Outcome o;
    std::size_t perms = 0;
    for (std::size_t n = 2; n <= 6; ++n) {
        std::vector<double> x(n);
        std::iota(x.begin(), x.end(), 1.0);
        std::vector<double> y = x;
        do {
            ++perms;
            o.require(kendall_tau_b(x, y) == oracle::kendall_tau_b(x, y), "tau mismatch");
            o.require(spearman_rho(x, y) == oracle::spearman_rho(x, y), "rho mismatch");
        } while (std::next_permutation(y.begin(), y.end()));
    }
    auto list = [](std::vector<std::string> ids) { return RankedDocList::from_order(std::move(ids)); };
    const auto s = list({"a", "b", "c", "d", "e"});
    const auto disjoint = list({"v", "w", "x", "y", "z"});
    for (double p : {0.5, 0.9, 0.99}) {
        o.require(rbo(s, s, p) == 1.0, "identical lists, p=" + format_double(p));
        o.require(rbo(s, disjoint, p) == 0.0, "disjoint lists, p=" + format_double(p));
    }
    const double swap = rbo(list({"a", "b"}), list({"b", "a"}), 0.9);
    o.require(std::abs(swap - 0.4737) <= 1e-4, "RBO([a,b],[b,a]) = " + format_double(swap));
    if (o.pass) {
        o.detail = std::to_string(perms) + " permutations exact, RBO([a,b],[b,a]) = " + format_fixed(swap, 4);
    }
    return o;
}

Outcome criterion_5(const DeskRun& run)
{
    Outcome o;
    auto corpus = ingest_corpus((run.corpus_dir / "corpus.jsonl").string());
    auto log = parse_log((run.queries_dir / "synthetic_log.tsv").string());
    for (const auto& name : category_names) {
        const auto c = Category::parse(name);
        auto [qr, qu] = build_query_sets(log.entries, c);
        auto weighted = apply_weights(qu, qr, WeightScheme::popularity);
        auto index = build_index(corpus, {}, c);
        BatchOptions opt;
        auto vr = retrievability_sweep(index, {}, qr, sweep_cutoffs, opt);
        auto vu = retrievability_sweep(index, {}, weighted, sweep_cutoffs, opt);
        for (auto cut : sweep_cutoffs) {
            o.require(vr.at(cut).scores.scores == vu.at(cut).scores.scores,
                      name + ": vectors differ at c=" + std::to_string(cut));
        }
        auto report = compare_querysets(vr.at(100).scores, vu.at(100).scores, {10, 100, 1000}, 0.9);
        for (const auto& [k, j] : report.jaccard) {
            o.require(j == 1.0, name + ": Jaccard@" + std::to_string(k) + " = " + format_double(j));
        }
        o.require(report.kendall == 1.0, name + ": tau = " + format_double(report.kendall));
        o.require(report.spearman == 1.0, name + ": rho = " + format_double(report.spearman));
        o.require(report.rbo == 1.0, name + ": RBO = " + format_double(report.rbo));
    }
    if (o.pass) {
        o.detail = "3 categories, 6 cutoffs, all measures 1";
    }
    return o;
}

Outcome criterion_6(const DeskRun& run)
{
    Outcome o;
    auto manifest = nlohmann::json::parse(slurp(run.queries_dir / "manifest.json"));
    const auto base = manifest["counts"]["base"].get<std::size_t>();
    o.require(base == 2000, "base query count " + std::to_string(base));
    o.require(manifest["counts"]["zipf_occurrences"].get<std::size_t>() == 20000, "Zipf occurrences");

    auto gini_rows = read_csv(run.audit_dir / "gini_by_cutoff.csv");
    o.require(gini_rows.size() == sweep_cutoffs.size() + 1, "gini_by_cutoff rows");
    std::ostringstream summary;
    for (std::size_t ci = 0; ci < category_names.size() && o.pass; ++ci) {
        const auto& name = category_names[ci];
        o.require(gini_rows[0][1 + ci] == "gini_" + name, "column order");
        const double g10 = parse_double(gini_rows[1][1 + ci]);
        const double g100 = parse_double(gini_rows.back()[1 + ci]);
        o.require(g100 < g10, name + ": Gini c=100 " + format_double(g100) + " !< c=10 " + format_double(g10));
        summary << name << " G10=" << format_fixed(g10, 4) << " G100=" << format_fixed(g100, 4) << "; ";
        const std::size_t pct_col = 1 + category_names.size() + 2 * ci + 1;
        double prev = -1.0;
        for (std::size_t r = 1; r < gini_rows.size(); ++r) {
            const double pct = parse_double(gini_rows[r][pct_col]);
            o.require(pct >= prev, name + ": %-retrieved decreases at c=" + gini_rows[r][0]);
            prev = pct;
        }
    }

    auto jac = read_csv(run.compare_dir / "jaccard.csv");
    for (std::size_t r = 1; r < jac.size(); ++r) {
        for (std::size_t ci = 1; ci < jac[r].size(); ++ci) {
            o.require(!jac[r][ci].empty() && parse_double(jac[r][ci]) < 1.0,
                      jac[0][ci] + ": Jaccard@" + jac[r][0] + " = " + jac[r][ci]);
        }
    }
    auto corr = read_csv(run.compare_dir / "correlation.csv");
    for (std::size_t ci = 1; ci < corr[3].size(); ++ci) {
        o.require(!corr[3][ci].empty() && parse_double(corr[3][ci]) < 1.0, corr[0][ci] + ": RBO = " + corr[3][ci]);
    }

    const auto gini_text = slurp(run.audit_dir / "gini_by_cutoff.csv");
    const auto jaccard_text = slurp(run.compare_dir / "jaccard.csv");
    const auto correlation_text = slurp(run.compare_dir / "correlation.csv");
    if (std::string(frozen_gini_by_cutoff).empty()) {
        std::cerr << "-- unfrozen fixtures --\n" << gini_text << jaccard_text << correlation_text;
        o.require(false, "regression fixtures not frozen");
    } else {
        o.require(gini_text == frozen_gini_by_cutoff, "gini_by_cutoff.csv differs from frozen fixture");
        o.require(jaccard_text == frozen_jaccard, "jaccard.csv differs from frozen fixture");
        o.require(correlation_text == frozen_correlation, "correlation.csv differs from frozen fixture");
    }
    o.require(run.seconds < 60.0, "runtime " + format_fixed(run.seconds, 2) + " s");
    if (o.pass) {
        o.detail = summary.str() + "Jaccard and RBO < 1, fixtures match, pipeline " + format_fixed(run.seconds, 2) + " s";
    }
    return o;
}

using Snapshot = std::map<std::string, std::string>;

Outcome criterion_7(const Snapshot& one, const Snapshot& eight)
{
    Outcome o;
    o.require(one.size() > 10, "bundles are missing");
    for (const auto& [path, bytes] : one) {
        auto it = eight.find(path);
        o.require(it != eight.end() && it->second == bytes, path + " differs between 1 and 8 workers");
    }
    o.require(one.size() == eight.size(), "file sets differ");
    if (o.pass) {
        o.detail = std::to_string(one.size()) + " files byte-identical with 1 and 8 workers";
    }
    return o;
}

Outcome criterion_8(const DeskRun& run)
{
    Outcome o;
    std::size_t checked = 0;
    for (const auto& name : category_names) {
        std::vector<ScoreVector> sweep;
        for (auto c : sweep_cutoffs) {
            sweep.push_back(read_vector(run.audit_dir / name / ("retrievability_c" + std::to_string(c) + ".tsv"), 1000));
        }
        auto corpus_ids = ingest_corpus((run.corpus_dir / "corpus.jsonl").string());
        for (const auto& doc : corpus_ids.documents()) {
            if (doc.category.name() != name) {
                continue;
            }
            ++checked;
            for (std::size_t i = 1; i < sweep.size(); ++i) {
                o.require(sweep[i].get(doc.doc_id) >= sweep[i - 1].get(doc.doc_id),
                          doc.doc_id + " decreases at c=" + std::to_string(sweep_cutoffs[i]));
            }
        }
    }
    o.require(checked == 3000, "checked " + std::to_string(checked) + " documents");
    if (o.pass) {
        o.detail = std::to_string(checked) + " documents non-decreasing over 6 cutoffs";
    }
    return o;
}

Outcome criterion_9(const TempDir& dir)
{
    Outcome o;
    SyntheticCorpusOptions opt;
    opt.docs_per_category = 200;
    auto corpus = generate_synthetic_corpus(opt);
    auto corpus_path = dir.write("useful_corpus.jsonl", corpus_to_jsonl(corpus));

    Rng rng(9009);
    std::map<std::string, std::size_t> expected;
    std::vector<LogEntry> known;
    std::vector<LogEntry> equal;
    for (const auto& doc : corpus.documents()) {
        const auto n = rng.below(6);
        for (std::uint64_t i = 0; i < n; ++i) {
            known.push_back({"t", "query " + std::to_string(rng.below(30)), doc.category, LogKind::export_event,
                             doc.doc_id});
        }
        if (n > 0) {
            expected[doc.doc_id] = n;
        }
        for (int i = 0; i < 3; ++i) {
            equal.push_back({"t", "q", doc.category, LogKind::export_event, doc.doc_id});
        }
    }
    for (std::size_t i = known.size(); i > 1; --i) {
        std::swap(known[i - 1], known[rng.below(i)]);
    }

    RunConfig cfg;
    cfg.corpus = corpus_path;
    cfg.log = dir.write("known.tsv", log_to_tsv(known));
    cfg.out = dir.file("useful_known");
    cmd_usefulness(cfg);
    for (const auto& c : corpus.categories()) {
        auto u = read_vector(std::filesystem::path(cfg.out) / c.name() / "usefulness.tsv", 200);
        for (const auto& doc : corpus.documents()) {
            if (doc.category != c) {
                continue;
            }
            auto it = expected.find(doc.doc_id);
            const double want = it == expected.end() ? 0.0 : static_cast<double>(it->second);
            o.require(u.get(doc.doc_id) == want, doc.doc_id + ": u = " + format_double(u.get(doc.doc_id)));
        }
    }

    cfg.log = dir.write("equal.tsv", log_to_tsv(equal));
    cfg.out = dir.file("useful_equal");
    cmd_usefulness(cfg);
    auto rows = read_csv(std::filesystem::path(cfg.out) / "usefulness.csv");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double g = parse_double(rows[r][5]);
        o.require(std::abs(g) <= 1e-12, rows[r][0] + ": equal-exports Gini = " + rows[r][5]);
    }
    if (o.pass) {
        o.detail = std::to_string(known.size()) + " export events reproduced exactly, equal-exports Gini 0";
    }
    return o;
}

}  // namespace

int main()
{
    int failures = 0;
    auto report = [&](int n, const std::string& name, double limit, const std::function<Outcome()>& body) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (limit > 0.0 && secs >= limit) {
            o.pass = false;
            o.detail = "runtime " + format_fixed(secs, 2) + " s over " + format_fixed(limit, 0) + " s";
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " " << name << ": " << o.detail << " ("
                  << format_fixed(secs, 2) << " s)" << std::endl;
    };

    TempDir dir("acceptance");
    std::optional<DeskRun> one;
    auto desk = [&]() -> const DeskRun& {
        if (!one) {
            one = desk_run(dir, "desk", 1);
        }
        return *one;
    };

    report(1, "gini-oracle", 5.0, criterion_1);
    report(2, "retrievability-mass", 10.0, criterion_2);
    report(3, "bm25-fixture", 0.0, criterion_3);
    report(4, "rank-measure-oracles", 0.0, criterion_4);
    report(5, "popularity-identity", 0.0, [&] { return criterion_5(desk()); });
    report(6, "desk-scale-trend", 60.0, [&] { return criterion_6(desk()); });
    report(7, "determinism", 0.0, [&] {
        const auto first = snapshot(desk().root);
        one = desk_run(dir, "desk", 8);
        return criterion_7(first, snapshot(one->root));
    });
    report(8, "monotone-sweep", 0.0, [&] { return criterion_8(desk()); });
    report(9, "usefulness", 0.0, [&] { return criterion_9(dir); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
