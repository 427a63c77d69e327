#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "corpus.hpp"
#include "engine.hpp"
#include "inequality.hpp"
#include "querylog.hpp"
#include "rankcompare.hpp"
#include "retrievability.hpp"
#include "synthetic.hpp"

namespace rbias {

inline constexpr std::string_view version = "1.0.0";

/// Every knob of a run. Values come from defaults, then a config file, then flags.
struct RunConfig {
    std::string corpus;
    std::string log;
    std::string queries;
    std::vector<std::string> categories;
    std::vector<std::size_t> cutoffs = {10, 20, 30, 40, 50, 100};
    std::size_t depth = 100;
    std::size_t compare_cutoff = 100;
    double k1 = 1.2;
    double b = 0.75;
    WeightScheme weights = WeightScheme::uniform;
    PopulationMode population = PopulationMode::all_docs;
    double rbo_p = 0.9;
    std::vector<std::size_t> jaccard_k = {1000, 5000, 10000, 20000, 50000};
    std::string out;
    std::uint64_t seed = 42;
    std::size_t workers = 1;
    std::uint64_t min_cf = 2;
    std::size_t max_n = 1000;
    double zipf_s = 1.5;
    std::size_t zipf_m = 0;
    std::size_t docs_per_category = 1000;
    bool record_timings = false;
    bool write_results = false;

    [[nodiscard]] Bm25Params bm25() const { return {k1, b}; }

    /// Deterministic echo of the effective configuration. Worker count is left
    /// out because it never changes results.
    [[nodiscard]] nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["corpus"] = corpus;
        j["log"] = log;
        j["queries"] = queries;
        j["categories"] = categories;
        j["cutoffs"] = cutoffs;
        j["depth"] = depth;
        j["compare_cutoff"] = compare_cutoff;
        j["k1"] = k1;
        j["b"] = b;
        j["weights"] = to_string(weights);
        j["population"] = to_string(population);
        j["rbo_p"] = rbo_p;
        j["jaccard_k"] = jaccard_k;
        j["seed"] = seed;
        j["min_cf"] = min_cf;
        j["max_n"] = max_n;
        j["zipf_s"] = zipf_s;
        j["zipf_m"] = zipf_m;
        j["docs_per_category"] = docs_per_category;
        return j;
    }
};

namespace detail {

template <typename T>
std::vector<T> parse_list(std::string_view s)
{
    std::vector<T> out;
    for (auto part : split(s, ',')) {
        auto item = trim(part);
        if (item.empty()) {
            continue;
        }
        if constexpr (std::is_same_v<T, std::string>) {
            out.emplace_back(item);
        } else {
            out.push_back(parse_integer<T>(item));
        }
    }
    return out;
}

inline bool parse_bool(std::string_view s)
{
    auto v = to_lower_ascii(trim(s));
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw Error("not a boolean: '" + std::string(s) + "'");
}

}  // namespace detail

/// Applies one `key=value` setting; keys are the long flag names without dashes.
inline void apply_setting(RunConfig& cfg, std::string_view raw_key, std::string_view raw_value)
{
    std::string key(trim(raw_key));
    std::replace(key.begin(), key.end(), '_', '-');
    const auto value = trim(raw_value);
    try {
        if (key == "corpus") {
            cfg.corpus = value;
        } else if (key == "log") {
            cfg.log = value;
        } else if (key == "queries") {
            cfg.queries = value;
        } else if (key == "categories") {
            cfg.categories = detail::parse_list<std::string>(value);
        } else if (key == "cutoffs") {
            cfg.cutoffs = detail::parse_list<std::size_t>(value);
        } else if (key == "depth") {
            cfg.depth = parse_integer<std::size_t>(value);
        } else if (key == "compare-cutoff") {
            cfg.compare_cutoff = parse_integer<std::size_t>(value);
        } else if (key == "k1") {
            cfg.k1 = parse_double(value);
        } else if (key == "b") {
            cfg.b = parse_double(value);
        } else if (key == "weights") {
            cfg.weights = parse_weight_scheme(value);
        } else if (key == "population") {
            cfg.population = parse_population_mode(value);
        } else if (key == "rbo-p") {
            cfg.rbo_p = parse_double(value);
        } else if (key == "jaccard-k") {
            cfg.jaccard_k = detail::parse_list<std::size_t>(value);
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "seed") {
            cfg.seed = parse_integer<std::uint64_t>(value);
        } else if (key == "workers") {
            cfg.workers = parse_integer<std::size_t>(value);
        } else if (key == "min-cf") {
            cfg.min_cf = parse_integer<std::uint64_t>(value);
        } else if (key == "max-n") {
            cfg.max_n = parse_integer<std::size_t>(value);
        } else if (key == "zipf-s") {
            cfg.zipf_s = parse_double(value);
        } else if (key == "zipf-m") {
            cfg.zipf_m = parse_integer<std::size_t>(value);
        } else if (key == "docs-per-category") {
            cfg.docs_per_category = parse_integer<std::size_t>(value);
        } else if (key == "record-timings") {
            cfg.record_timings = detail::parse_bool(value);
        } else if (key == "write-results") {
            cfg.write_results = detail::parse_bool(value);
        } else {
            throw Error("unknown setting");
        }
    } catch (const Error& e) {
        throw Error("setting '" + key + "': " + e.what());
    }
}

/// Flat `key=value` lines; blank lines and lines starting with '#' are skipped.
inline void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source = "<config>")
{
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(source, lineno, "expected key=value");
        }
        try {
            apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path)
{
    auto in = open_input(path);
    apply_config_text(cfg, in, path);
}

/// Output directory written under `<out>.partial` and moved into place on
/// commit; an uncommitted bundle is deleted.
class OutputBundle {
  public:
    explicit OutputBundle(std::string out) : m_final(std::move(out))
    {
        if (m_final.empty()) {
            throw Error("an output directory (--out) is required");
        }
        m_partial = m_final;
        m_partial += ".partial";
        std::error_code ec;
        std::filesystem::remove_all(m_partial, ec);
        std::filesystem::create_directories(m_partial, ec);
        if (ec) {
            throw Error("cannot create output directory '" + m_partial.string() + "': " + ec.message());
        }
    }

    OutputBundle(const OutputBundle&) = delete;
    OutputBundle& operator=(const OutputBundle&) = delete;

    ~OutputBundle()
    {
        if (!m_committed) {
            std::error_code ec;
            std::filesystem::remove_all(m_partial, ec);
        }
    }

    void write(const std::string& relative, const std::string& content)
    {
        auto path = m_partial / relative;
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        }
        write_file(path.string(), content);
        m_files.push_back(relative);
    }

    [[nodiscard]] std::vector<std::string> files() const
    {
        auto out = m_files;
        std::sort(out.begin(), out.end());
        return out;
    }

    void commit()
    {
        std::error_code ec;
        std::filesystem::remove_all(m_final, ec);
        std::filesystem::rename(m_partial, m_final, ec);
        if (ec) {
            throw Error("cannot move bundle into '" + m_final.string() + "': " + ec.message());
        }
        m_committed = true;
    }

  private:
    std::filesystem::path m_final;
    std::filesystem::path m_partial;
    std::vector<std::string> m_files;
    bool m_committed = false;
};

/// Category name made safe for file names.
inline std::string file_stem(const Category& c)
{
    auto name = c.name();
    for (auto& ch : name) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_';
        if (!ok) {
            ch = '_';
        }
    }
    return name;
}

namespace detail {

inline std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline nlohmann::ordered_json opt_json(const std::optional<double>& v)
{
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::optional<double> finite_or_absent(double v)
{
    return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
}

class Timer {
  public:
    void lap(const std::string& name)
    {
        auto now = std::chrono::steady_clock::now();
        m_laps[name] = std::chrono::duration<double>(now - m_last).count();
        m_last = now;
    }

    [[nodiscard]] nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [k, v] : m_laps) {
            j[k] = v;
        }
        return j;
    }

  private:
    std::chrono::steady_clock::time_point m_last = std::chrono::steady_clock::now();
    std::map<std::string, double> m_laps;
};

inline void write_manifest(OutputBundle& bundle,
                           const RunConfig& cfg,
                           std::string_view command,
                           const Timer& timer,
                           nlohmann::ordered_json extra = nlohmann::ordered_json::object())
{
    nlohmann::ordered_json m;
    m["tool"] = "rbias";
    m["version"] = version;
    m["command"] = command;
    m["config"] = cfg.to_json();
    for (auto& [k, v] : extra.items()) {
        m[k] = v;
    }
    m["files"] = bundle.files();
    if (cfg.record_timings) {
        m["timings_seconds"] = timer.to_json();
    }
    bundle.write("manifest.json", m.dump(2) + "\n");
}

inline Corpus load_corpus(const RunConfig& cfg)
{
    if (cfg.corpus.empty()) {
        throw Error("a corpus file (--corpus) is required");
    }
    return ingest_corpus(cfg.corpus);
}

/// Requested categories, or every category of the corpus.
inline std::vector<Category> selected_categories(const RunConfig& cfg, const Corpus& corpus)
{
    if (cfg.categories.empty()) {
        return corpus.categories();
    }
    std::vector<Category> out;
    for (const auto& name : cfg.categories) {
        auto c = Category::parse(name);
        if (std::find(out.begin(), out.end(), c) == out.end()) {
            out.push_back(std::move(c));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Repeated and unique query sets for one category from --log or --queries.
struct CategoryQueries {
    QuerySet repeated;
    QuerySet unique;
};

class QuerySource {
  public:
    explicit QuerySource(const RunConfig& cfg)
    {
        if (!cfg.log.empty()) {
            auto parsed = parse_log(cfg.log);
            m_rejected = parsed.rejected;
            for (const auto& why : parsed.rejections) {
                std::cerr << "warning: " << cfg.log << ": " << why << '\n';
            }
            m_entries = std::move(parsed.entries);
            m_from_log = true;
        } else if (!cfg.queries.empty()) {
            m_file = read_query_set(cfg.queries);
        } else {
            throw Error("a query source (--log or --queries) is required");
        }
    }

    [[nodiscard]] CategoryQueries for_category(const Category& c) const
    {
        if (m_from_log) {
            auto [r, u] = build_query_sets(m_entries, c);
            return {std::move(r), std::move(u)};
        }
        QuerySet r = *m_file;
        r.category = c;
        r.mode = QueryMode::repeated;
        for (auto& e : r.entries) {
            e.weight = 1.0;
        }
        auto u = dedup(r);
        return {std::move(r), std::move(u)};
    }

    [[nodiscard]] const std::vector<LogEntry>& entries() const noexcept { return m_entries; }
    [[nodiscard]] std::size_t rejected() const noexcept { return m_rejected; }

  private:
    bool m_from_log = false;
    std::vector<LogEntry> m_entries;
    std::optional<QuerySet> m_file;
    std::size_t m_rejected = 0;
};

inline double average_query_length(const QuerySet& qs)
{
    const auto n = qs.occurrence_count();
    if (n == 0) {
        return 0.0;
    }
    double tokens = 0.0;
    for (const auto& e : qs.entries) {
        tokens += static_cast<double>(analyze_text(e.text).size()) * static_cast<double>(e.multiplicity);
    }
    return tokens / static_cast<double>(n);
}

inline std::string csv_row(const std::vector<std::string>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += csv_cell(cells[i]);
    }
    out += '\n';
    return out;
}

inline void write_sweep(OutputBundle& bundle,
                        const std::string& dir,
                        const std::string& tag,
                        const CutoffSweep& sweep,
                        const Category& category,
                        WeightScheme scheme)
{
    nlohmann::ordered_json m;
    m["category"] = category.name();
    m["cutoffs"] = sweep.cutoffs;
    m["query_count"] = sweep.vectors.front().query_count;
    m["total_weight"] = sweep.vectors.front().total_weight;
    m["weight_scheme"] = to_string(scheme);
    m["collection_size"] = sweep.vectors.front().scores.collection_size;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& v : sweep.vectors) {
        auto name = "retrievability" + tag + "_c" + std::to_string(v.cutoff) + ".tsv";
        bundle.write(dir + "/" + name, score_vector_to_tsv(v.scores));
        files.push_back(name);
    }
    m["files"] = files;
    bundle.write(dir + "/sweep" + tag + ".json", m.dump(2) + "\n");
}

inline std::size_t retrieval_depth(const RunConfig& cfg)
{
    if (cfg.depth == 0) {
        throw Error("retrieval depth must be >= 1");
    }
    return cfg.depth;
}

}  // namespace detail

/// Builds and persists one index per category.
inline void cmd_index(const RunConfig& cfg)
{
    detail::Timer timer;
    auto corpus = detail::load_corpus(cfg);
    timer.lap("ingest");
    OutputBundle bundle(cfg.out);
    nlohmann::ordered_json indexes = nlohmann::ordered_json::array();
    for (const auto& c : detail::selected_categories(cfg, corpus)) {
        auto index = build_index(corpus, {}, c);
        std::ostringstream os;
        index.save(os);
        auto name = "index_" + file_stem(c) + ".idx";
        bundle.write(name, os.str());
        nlohmann::ordered_json entry;
        entry["category"] = c.name();
        entry["file"] = name;
        entry["documents"] = index.doc_count();
        entry["terms"] = index.term_count();
        entry["avg_doc_length"] = index.avg_doc_length();
        indexes.push_back(entry);
    }
    timer.lap("index");
    nlohmann::ordered_json extra;
    extra["indexes"] = indexes;
    extra["unknown_categories"] = corpus.unknown_category_count();
    detail::write_manifest(bundle, cfg, "index", timer, extra);
    bundle.commit();
}

/// Per category: a retrievability sweep, distribution statistics, Gini by
/// cutoff with retrieved counts, and Lorenz curves.
inline void cmd_audit(const RunConfig& cfg)
{
    detail::Timer timer;
    const auto depth = detail::retrieval_depth(cfg);
    const auto cutoffs = normalize_cutoffs(cfg.cutoffs, depth);
    cfg.bm25().validate();
    auto corpus = detail::load_corpus(cfg);
    const detail::QuerySource source(cfg);
    const auto categories = detail::selected_categories(cfg, corpus);
    timer.lap("load");

    OutputBundle bundle(cfg.out);
    std::string table1 = "category,documents,queries_raw,queries_unique,avg_query_length\n";
    std::string table2 =
        "category,cutoff,mean,geometric_mean,variance,stddev,count,positive_count,pct_retrieved\n";
    std::map<std::size_t, std::map<Category, std::optional<InequalityReport>>> by_cutoff;
    nlohmann::ordered_json audit = nlohmann::ordered_json::array();
    BatchOptions options;
    options.k = depth;
    options.workers = cfg.workers;

    for (const auto& c : categories) {
        const auto stem = file_stem(c);
        auto [repeated, unique] = source.for_category(c);
        auto queries = apply_weights(unique, repeated, cfg.weights);
        auto index = build_index(corpus, {}, c);
        table1 += detail::csv_row({c.name(), std::to_string(index.doc_count()),
                                   std::to_string(repeated.occurrence_count()),
                                   std::to_string(unique.entries.size()),
                                   format_double(detail::average_query_length(repeated))});
        nlohmann::ordered_json cat;
        cat["category"] = c.name();
        cat["documents"] = index.doc_count();
        cat["queries_raw"] = repeated.occurrence_count();
        cat["queries_unique"] = unique.entries.size();
        if (index.doc_count() == 0) {
            std::cerr << "warning: category '" << c.name() << "' has no documents\n";
            for (auto cut : cutoffs) {
                by_cutoff[cut][c] = std::nullopt;
            }
            audit.push_back(cat);
            continue;
        }
        if (cfg.write_results) {
            std::ostringstream os;
            os << "query_ordinal\trank\tdoc_id\tscore\n";
            batch_search(index, cfg.bm25(), queries, options,
                         [&](const RankedResult& r) { write_results_tsv(os, index, r); });
            bundle.write(stem + "/results.tsv", os.str());
        }
        auto sweep = retrievability_sweep(index, cfg.bm25(), queries, cutoffs, options);
        detail::write_sweep(bundle, stem, "", sweep, c, cfg.weights);

        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& v : sweep.vectors) {
            nlohmann::ordered_json row;
            row["cutoff"] = v.cutoff;
            if (v.scores.positive_count() == 0) {
                by_cutoff[v.cutoff][c] = std::nullopt;
                table2 += detail::csv_row({c.name(), std::to_string(v.cutoff), "", "", "", "", "", "0", "0"});
                row["gini"] = nullptr;
                rows.push_back(row);
                continue;
            }
            auto report = inequality_report(v.scores, cfg.population, v.cutoff);
            const auto& st = report.stats;
            table2 += detail::csv_row({c.name(), std::to_string(v.cutoff), format_double(st.mean),
                                       detail::opt_cell(st.geometric_mean), format_double(st.variance),
                                       format_double(st.stddev), std::to_string(st.count),
                                       std::to_string(st.positive_count), format_double(st.pct_retrieved)});
            bundle.write(stem + "/lorenz_c" + std::to_string(v.cutoff) + ".csv", lorenz_to_csv(report.lorenz));
            row["gini"] = report.gini;
            row["mean"] = st.mean;
            row["geometric_mean"] = detail::opt_json(st.geometric_mean);
            row["variance"] = st.variance;
            row["stddev"] = st.stddev;
            row["count"] = st.count;
            row["positive_count"] = st.positive_count;
            row["pct_retrieved"] = st.pct_retrieved;
            rows.push_back(row);
            by_cutoff[v.cutoff][c] = std::move(report);
        }
        cat["query_count"] = sweep.vectors.front().query_count;
        cat["total_weight"] = sweep.vectors.front().total_weight;
        cat["cutoffs"] = rows;
        audit.push_back(cat);
    }
    timer.lap("retrieve_and_analyze");

    std::vector<std::string> header = {"cutoff"};
    for (const auto& c : categories) {
        header.push_back("gini_" + c.name());
    }
    for (const auto& c : categories) {
        header.push_back("retrieved_" + c.name());
        header.push_back("pct_" + c.name());
    }
    std::string table3 = detail::csv_row(header);
    for (auto cut : cutoffs) {
        std::vector<std::string> row = {std::to_string(cut)};
        const auto& cells = by_cutoff[cut];
        for (const auto& c : categories) {
            auto it = cells.find(c);
            row.push_back(it != cells.end() && it->second ? format_double(it->second->gini) : "");
        }
        for (const auto& c : categories) {
            auto it = cells.find(c);
            if (it != cells.end() && it->second) {
                row.push_back(std::to_string(it->second->stats.positive_count));
                row.push_back(format_double(it->second->stats.pct_retrieved));
            } else {
                row.emplace_back("0");
                row.emplace_back("0");
            }
        }
        table3 += detail::csv_row(row);
    }

    bundle.write("query_sets.csv", table1);
    bundle.write("dist_stats.csv", table2);
    bundle.write("gini_by_cutoff.csv", table3);
    nlohmann::ordered_json doc;
    doc["population"] = to_string(cfg.population);
    doc["weights"] = to_string(cfg.weights);
    doc["categories"] = audit;
    bundle.write("audit.json", doc.dump(2) + "\n");
    nlohmann::ordered_json extra;
    extra["rejected_log_rows"] = source.rejected();
    detail::write_manifest(bundle, cfg, "audit", timer, extra);
    bundle.commit();
}

/// Usefulness from export events: per-category vectors, Gini and Lorenz curves.
inline void cmd_usefulness(const RunConfig& cfg)
{
    detail::Timer timer;
    if (cfg.log.empty()) {
        throw Error("usefulness needs an interaction log (--log)");
    }
    auto corpus = detail::load_corpus(cfg);
    const detail::QuerySource source(cfg);
    timer.lap("load");
    OutputBundle bundle(cfg.out);
    std::string table = "category,documents,export_events,exported_docs,unknown_targets,gini,mean,"
                        "geometric_mean,variance,stddev,pct_exported\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& c : detail::selected_categories(cfg, corpus)) {
        auto exports = extract_exports(source.entries(), c);
        std::size_t unknown = 0;
        std::erase_if(exports, [&](const ExportEvent& e) {
            const auto* doc = corpus.find(e.target_doc_id);
            const bool drop = doc == nullptr || doc->category != c;
            unknown += drop ? 1 : 0;
            return drop;
        });
        const auto n = corpus.count(c);
        nlohmann::ordered_json row;
        row["category"] = c.name();
        row["documents"] = n;
        row["export_events"] = exports.size();
        row["unknown_targets"] = unknown;
        if (exports.empty()) {
            table += detail::csv_row({c.name(), std::to_string(n), "0", "0", std::to_string(unknown), "", "", "",
                                      "", "", ""});
            row["gini"] = nullptr;
            rows.push_back(row);
            continue;
        }
        ExportWeight weight;
        if (cfg.weights == WeightScheme::popularity) {
            auto [repeated, unique] = source.for_category(c);
            auto counts = std::make_shared<std::unordered_map<std::string, double>>();
            for (const auto& e : repeated.entries) {
                (*counts)[e.text] = query_weight(e, WeightScheme::popularity);
            }
            weight = [counts](const ExportEvent& e) {
                auto it = counts->find(e.query);
                return it == counts->end() ? 1.0 : it->second;
            };
        }
        auto u = compute_usefulness(exports, n, c, weight);
        auto report = inequality_report(u.scores, cfg.population);
        const auto& st = report.stats;
        const auto stem = file_stem(c);
        bundle.write(stem + "/usefulness.tsv", score_vector_to_tsv(u.scores));
        bundle.write(stem + "/lorenz_usefulness.csv", lorenz_to_csv(report.lorenz));
        table += detail::csv_row({c.name(), std::to_string(n), std::to_string(u.event_count),
                                  std::to_string(st.positive_count), std::to_string(unknown),
                                  format_double(report.gini), format_double(st.mean),
                                  detail::opt_cell(st.geometric_mean), format_double(st.variance),
                                  format_double(st.stddev), format_double(st.pct_retrieved)});
        row["exported_docs"] = st.positive_count;
        row["gini"] = report.gini;
        row["mean"] = st.mean;
        row["geometric_mean"] = detail::opt_json(st.geometric_mean);
        row["variance"] = st.variance;
        row["stddev"] = st.stddev;
        row["pct_exported"] = st.pct_retrieved;
        rows.push_back(row);
    }
    timer.lap("usefulness");
    bundle.write("usefulness.csv", table);
    nlohmann::ordered_json doc;
    doc["population"] = to_string(cfg.population);
    doc["weights"] = to_string(cfg.weights);
    doc["categories"] = rows;
    bundle.write("usefulness.json", doc.dump(2) + "\n");
    detail::write_manifest(bundle, cfg, "usefulness", timer);
    bundle.commit();
}

/// Retrievability under the repeated set (uniform weights) against the unique
/// set (configured weights), compared at the compare cutoff.
inline void cmd_compare(const RunConfig& cfg)
{
    detail::Timer timer;
    const auto depth = detail::retrieval_depth(cfg);
    normalize_cutoffs({cfg.compare_cutoff}, depth);
    if (!(cfg.rbo_p > 0.0 && cfg.rbo_p < 1.0)) {
        throw Error("RBO persistence p must lie in (0, 1)");
    }
    if (cfg.jaccard_k.empty() || std::find(cfg.jaccard_k.begin(), cfg.jaccard_k.end(), 0) != cfg.jaccard_k.end()) {
        throw Error("Jaccard depths must be a non-empty list of positive integers");
    }
    cfg.bm25().validate();
    auto corpus = detail::load_corpus(cfg);
    const detail::QuerySource source(cfg);
    const auto categories = detail::selected_categories(cfg, corpus);
    timer.lap("load");

    OutputBundle bundle(cfg.out);
    BatchOptions options;
    options.k = depth;
    options.workers = cfg.workers;
    std::map<Category, std::optional<ComparisonReport>> reports;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& c : categories) {
        auto [repeated, unique] = source.for_category(c);
        auto weighted_unique = apply_weights(unique, repeated, cfg.weights);
        auto index = build_index(corpus, {}, c);
        nlohmann::ordered_json row;
        row["category"] = c.name();
        row["queries_raw"] = repeated.occurrence_count();
        row["queries_unique"] = unique.entries.size();
        if (repeated.entries.empty() || index.doc_count() == 0) {
            reports[c] = std::nullopt;
            rows.push_back(row);
            continue;
        }
        auto sweep_r = retrievability_sweep(index, cfg.bm25(), repeated, {cfg.compare_cutoff}, options);
        auto sweep_u = retrievability_sweep(index, cfg.bm25(), weighted_unique, {cfg.compare_cutoff}, options);
        const auto stem = file_stem(c);
        detail::write_sweep(bundle, stem, "_qr", sweep_r, c, WeightScheme::uniform);
        detail::write_sweep(bundle, stem, "_qu", sweep_u, c, cfg.weights);
        const auto& vr = sweep_r.vectors.front().scores;
        const auto& vu = sweep_u.vectors.front().scores;
        if (vr.positive_count() == 0 || vu.positive_count() == 0) {
            reports[c] = std::nullopt;
            rows.push_back(row);
            continue;
        }
        auto report = compare_querysets(vr, vu, cfg.jaccard_k, cfg.rbo_p);
        nlohmann::ordered_json jac = nlohmann::ordered_json::array();
        for (const auto& [k, j] : report.jaccard) {
            jac.push_back({{"k", k}, {"jaccard", j}});
        }
        row["jaccard"] = jac;
        row["kendall_tau"] = detail::opt_json(detail::finite_or_absent(report.kendall));
        row["spearman_rho"] = detail::opt_json(detail::finite_or_absent(report.spearman));
        row["rbo"] = report.rbo;
        row["ranked_r"] = report.size_r;
        row["ranked_u"] = report.size_u;
        row["conjoint"] = report.conjoint;
        rows.push_back(row);
        reports[c] = std::move(report);
    }
    timer.lap("compare");

    std::vector<std::string> header = {"k"};
    for (const auto& c : categories) {
        header.push_back(c.name());
    }
    std::string jaccard = detail::csv_row(header);
    for (std::size_t i = 0; i < cfg.jaccard_k.size(); ++i) {
        std::vector<std::string> row = {std::to_string(cfg.jaccard_k[i])};
        for (const auto& c : categories) {
            const auto& r = reports[c];
            row.push_back(r ? format_double(r->jaccard[i].second) : "");
        }
        jaccard += detail::csv_row(row);
    }
    header.front() = "measure";
    std::string correlation = detail::csv_row(header);
    auto measure_row = [&](const std::string& name, auto get) {
        std::vector<std::string> row = {name};
        for (const auto& c : categories) {
            const auto& r = reports[c];
            row.push_back(r ? detail::opt_cell(detail::finite_or_absent(get(*r))) : "");
        }
        correlation += detail::csv_row(row);
    };
    measure_row("kendall_tau", [](const ComparisonReport& r) { return r.kendall; });
    measure_row("spearman_rho", [](const ComparisonReport& r) { return r.spearman; });
    measure_row("rbo", [](const ComparisonReport& r) { return r.rbo; });

    bundle.write("jaccard.csv", jaccard);
    bundle.write("correlation.csv", correlation);
    nlohmann::ordered_json doc;
    doc["cutoff"] = cfg.compare_cutoff;
    doc["rbo_p"] = cfg.rbo_p;
    doc["weights_unique"] = to_string(cfg.weights);
    doc["categories"] = rows;
    bundle.write("compare.json", doc.dump(2) + "\n");
    detail::write_manifest(bundle, cfg, "compare", timer);
    bundle.commit();
}

/// Query-based sampling (unigrams, bigrams) plus, when zipf_m > 0, a Zipf
/// repeated set over their interleaving and a synthetic search log.
inline void cmd_genqueries(const RunConfig& cfg)
{
    detail::Timer timer;
    auto corpus = detail::load_corpus(cfg);
    auto categories = detail::selected_categories(cfg, corpus);
    Corpus scope;
    for (const auto& doc : corpus.documents()) {
        if (std::find(categories.begin(), categories.end(), doc.category) != categories.end()) {
            scope.add(doc);
        }
    }
    OutputBundle bundle(cfg.out);
    auto stats = corpus_stats(scope);
    auto unigrams = sample_unigram_queries(stats, cfg.min_cf, cfg.max_n);
    auto bigrams = sample_bigram_queries(scope, {}, cfg.min_cf, cfg.max_n);
    bundle.write("unigrams.tsv", query_set_to_tsv(unigrams));
    bundle.write("bigrams.tsv", query_set_to_tsv(bigrams));
    nlohmann::ordered_json counts;
    counts["unigrams"] = unigrams.entries.size();
    counts["bigrams"] = bigrams.entries.size();
    if (unigrams.entries.empty() && bigrams.entries.empty()) {
        std::cerr << "warning: thresholds filtered out every query; no Zipf log generated\n";
    } else if (cfg.zipf_m > 0) {
        auto base = interleave_query_sets({unigrams, bigrams}, Provenance::synthetic_zipf);
        auto zipf = generate_zipf_log(base, cfg.zipf_s, cfg.zipf_m, cfg.seed);
        bundle.write("zipf.tsv", query_set_to_tsv(zipf));
        bundle.write("synthetic_log.tsv", log_to_tsv(synthesize_search_log(zipf, categories, cfg.seed + 1)));
        counts["base"] = base.entries.size();
        counts["zipf_distinct"] = zipf.entries.size();
        counts["zipf_occurrences"] = zipf.occurrence_count();
    }
    timer.lap("generate");
    nlohmann::ordered_json extra;
    extra["counts"] = counts;
    detail::write_manifest(bundle, cfg, "gen-queries", timer, extra);
    bundle.commit();
}

/// Seeded synthetic typed corpus written as corpus.jsonl.
inline void cmd_gencorpus(const RunConfig& cfg)
{
    detail::Timer timer;
    SyntheticCorpusOptions opt;
    opt.docs_per_category = cfg.docs_per_category;
    opt.seed = cfg.seed;
    if (!cfg.categories.empty()) {
        opt.categories.clear();
        for (const auto& name : cfg.categories) {
            opt.categories.push_back(Category::parse(name));
        }
    }
    auto corpus = generate_synthetic_corpus(opt);
    OutputBundle bundle(cfg.out);
    bundle.write("corpus.jsonl", corpus_to_jsonl(corpus));
    timer.lap("generate");
    nlohmann::ordered_json extra;
    extra["documents"] = corpus.size();
    detail::write_manifest(bundle, cfg, "gen-corpus", timer, extra);
    bundle.commit();
}

}  // namespace rbias
