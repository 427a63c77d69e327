#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "corpus.hpp"

namespace rbias {

enum class LogKind : std::uint8_t { search, export_event };

struct LogEntry {
    std::string timestamp;
    std::string raw_query;
    Category category;
    LogKind kind = LogKind::search;
    std::string target_doc_id;
};

struct ParsedLog {
    std::vector<LogEntry> entries;
    std::size_t rejected = 0;
    /// Up to the first few rejection messages, for diagnostics.
    std::vector<std::string> rejections;
};

enum class QueryMode : std::uint8_t { repeated, unique };
enum class Provenance : std::uint8_t { log, sampled_unigram, sampled_bigram, synthetic_zipf };
enum class WeightScheme : std::uint8_t { uniform, popularity };

inline std::string to_string(QueryMode m) { return m == QueryMode::repeated ? "repeated" : "unique"; }

inline std::string to_string(Provenance p)
{
    switch (p) {
    case Provenance::log: return "log";
    case Provenance::sampled_unigram: return "sampled-unigram";
    case Provenance::sampled_bigram: return "sampled-bigram";
    case Provenance::synthetic_zipf: return "synthetic-zipf";
    }
    return "log";
}

inline std::string to_string(WeightScheme w) { return w == WeightScheme::uniform ? "uniform" : "popularity"; }

inline WeightScheme parse_weight_scheme(std::string_view s)
{
    if (s == "uniform") {
        return WeightScheme::uniform;
    }
    if (s == "popularity") {
        return WeightScheme::popularity;
    }
    throw Error("unknown weight scheme '" + std::string(s) + "' (expected uniform or popularity)");
}

struct QueryEntry {
    std::string text;
    std::size_t multiplicity = 1;
    double weight = 1.0;
};

/// Weighted queries of one category. In unique mode every multiplicity is 1
/// and texts are distinct; in repeated mode multiplicities count occurrences.
struct QuerySet {
    std::optional<Category> category;
    QueryMode mode = QueryMode::unique;
    Provenance provenance = Provenance::log;
    std::vector<QueryEntry> entries;

    [[nodiscard]] std::size_t occurrence_count() const
    {
        std::size_t n = 0;
        for (const auto& e : entries) {
            n += e.multiplicity;
        }
        return n;
    }

    void validate() const
    {
        std::unordered_map<std::string_view, int> seen;
        for (const auto& e : entries) {
            if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
                throw Error("query '" + e.text + "' has non-positive weight");
            }
            if (e.multiplicity == 0) {
                throw Error("query '" + e.text + "' has zero multiplicity");
            }
            if (mode == QueryMode::unique && e.multiplicity != 1) {
                throw Error("unique query set holds repeated query '" + e.text + "'");
            }
            if (!seen.emplace(e.text, 0).second) {
                throw Error("query set holds duplicate text '" + e.text + "'");
            }
        }
    }
};

struct ExportEvent {
    std::string query;
    std::string target_doc_id;
    Category category;
};

/// Trim, lowercase, collapse whitespace runs to one space.
inline std::string normalize_query(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
    }
    return out;
}

namespace detail {

constexpr std::size_t max_kept_rejections = 20;

inline void reject(ParsedLog& log, std::size_t line, const std::string& why)
{
    ++log.rejected;
    if (log.rejections.size() < max_kept_rejections) {
        log.rejections.push_back("line " + std::to_string(line) + ": " + why);
    }
}

/// Validates one row; returns the reason it is invalid, or nothing.
inline std::optional<std::string> check_entry(const LogEntry& e)
{
    if (e.kind == LogKind::export_event && trim(e.target_doc_id).empty()) {
        return "export row without target_doc_id";
    }
    if (e.kind == LogKind::search && trim(e.raw_query).empty()) {
        return "search row with empty query";
    }
    return std::nullopt;
}

inline std::optional<LogKind> parse_kind(std::string_view s)
{
    auto lower = to_lower_ascii(trim(s));
    if (lower == "search") {
        return LogKind::search;
    }
    if (lower == "export") {
        return LogKind::export_event;
    }
    return std::nullopt;
}

}  // namespace detail

/// Tab-separated log with a required header naming the columns
/// timestamp, kind, category, query, target_doc_id (any order).
inline ParsedLog read_log_tsv(std::istream& in, const std::string& source = "<stream>")
{
    static constexpr std::array<std::string_view, 5> columns = {
        "timestamp", "kind", "category", "query", "target_doc_id"};
    ParsedLog log;
    std::string raw;
    std::size_t lineno = 0;
    std::array<std::size_t, 5> pos{};
    std::size_t width = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = chomp(raw);
        if (!have_header) {
            if (trim(line).empty()) {
                continue;
            }
            auto names = split(line, '\t');
            width = names.size();
            for (std::size_t c = 0; c < columns.size(); ++c) {
                auto it = std::find_if(names.begin(), names.end(), [&](std::string_view n) {
                    return to_lower_ascii(trim(n)) == columns[c];
                });
                if (it == names.end()) {
                    throw ParseError(source, lineno,
                                     "log header lacks column '" + std::string(columns[c]) + "'");
                }
                pos[c] = static_cast<std::size_t>(it - names.begin());
            }
            have_header = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != width) {
            detail::reject(log, lineno, "expected " + std::to_string(width) + " columns");
            continue;
        }
        auto kind = detail::parse_kind(cols[pos[1]]);
        if (!kind) {
            detail::reject(log, lineno, "unknown kind '" + std::string(cols[pos[1]]) + "'");
            continue;
        }
        LogEntry e{std::string(cols[pos[0]]), std::string(cols[pos[3]]), Category::parse(cols[pos[2]]),
                   *kind, std::string(trim(cols[pos[4]]))};
        if (auto why = detail::check_entry(e)) {
            detail::reject(log, lineno, *why);
            continue;
        }
        log.entries.push_back(std::move(e));
    }
    return log;
}

/// One JSON object per line with the TSV column names as keys.
inline ParsedLog read_log_jsonl(std::istream& in, const std::string& /*source*/ = "<stream>")
{
    ParsedLog log;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto text = trim(raw);
        if (text.empty()) {
            continue;
        }
        auto obj = nlohmann::json::parse(text, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            detail::reject(log, lineno, "invalid JSON object");
            continue;
        }
        auto field = [&](const char* key) -> std::string {
            auto it = obj.find(key);
            return (it != obj.end() && it->is_string()) ? it->get<std::string>() : std::string();
        };
        auto kind = detail::parse_kind(field("kind"));
        if (!kind) {
            detail::reject(log, lineno, "unknown kind '" + field("kind") + "'");
            continue;
        }
        LogEntry e{field("timestamp"), field("query"), Category::parse(field("category")), *kind,
                   std::string(trim(field("target_doc_id")))};
        if (auto why = detail::check_entry(e)) {
            detail::reject(log, lineno, *why);
            continue;
        }
        log.entries.push_back(std::move(e));
    }
    return log;
}

inline ParsedLog parse_log(const std::string& path)
{
    auto in = open_input(path);
    if (path.ends_with(".jsonl") || path.ends_with(".json")) {
        return read_log_jsonl(in, path);
    }
    return read_log_tsv(in, path);
}

inline std::string log_to_tsv(const std::vector<LogEntry>& entries)
{
    std::string out = "timestamp\tkind\tcategory\tquery\ttarget_doc_id\n";
    for (const auto& e : entries) {
        out += e.timestamp;
        out += '\t';
        out += e.kind == LogKind::search ? "search" : "export";
        out += '\t';
        out += e.category.name();
        out += '\t';
        out += e.raw_query;
        out += '\t';
        out += e.target_doc_id;
        out += '\n';
    }
    return out;
}

/// Q_r keeps every search occurrence of the category (first-seen order),
/// Q_u the distinct normalized texts. Weights are uniform.
inline std::pair<QuerySet, QuerySet> build_query_sets(const std::vector<LogEntry>& entries,
                                                      const Category& category)
{
    QuerySet repeated{category, QueryMode::repeated, Provenance::log, {}};
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& e : entries) {
        if (e.kind != LogKind::search || e.category != category) {
            continue;
        }
        auto text = normalize_query(e.raw_query);
        auto [it, inserted] = slot.emplace(text, repeated.entries.size());
        if (inserted) {
            repeated.entries.push_back({std::move(text), 1, 1.0});
        } else {
            ++repeated.entries[it->second].multiplicity;
        }
    }
    QuerySet unique{category, QueryMode::unique, Provenance::log, {}};
    unique.entries.reserve(repeated.entries.size());
    for (const auto& e : repeated.entries) {
        unique.entries.push_back({e.text, 1, 1.0});
    }
    return {std::move(repeated), std::move(unique)};
}

/// Weight of a query given its entry in the repeated set.
inline double query_weight(const QueryEntry& repeated_entry, WeightScheme scheme)
{
    switch (scheme) {
    case WeightScheme::uniform: return 1.0;
    case WeightScheme::popularity: return static_cast<double>(repeated_entry.multiplicity);
    }
    throw Error("unknown weight scheme");
}

/// Assigns weights to the entries of `unique` from their counterparts in `repeated`.
inline QuerySet apply_weights(QuerySet unique, const QuerySet& repeated, WeightScheme scheme)
{
    std::unordered_map<std::string_view, const QueryEntry*> by_text;
    for (const auto& e : repeated.entries) {
        by_text.emplace(e.text, &e);
    }
    for (auto& e : unique.entries) {
        auto it = by_text.find(e.text);
        if (it == by_text.end()) {
            throw Error("query '" + e.text + "' has no occurrence in the repeated set");
        }
        e.weight = query_weight(*it->second, scheme);
    }
    return unique;
}

/// Collapses a repeated set into its unique counterpart.
inline QuerySet dedup(const QuerySet& repeated)
{
    QuerySet unique{repeated.category, QueryMode::unique, repeated.provenance, {}};
    std::unordered_map<std::string_view, int> seen;
    for (const auto& e : repeated.entries) {
        if (seen.emplace(e.text, 0).second) {
            unique.entries.push_back({e.text, 1, 1.0});
        }
    }
    return unique;
}

inline std::vector<ExportEvent> extract_exports(const std::vector<LogEntry>& entries,
                                                const Category& category)
{
    std::vector<ExportEvent> out;
    for (const auto& e : entries) {
        if (e.kind == LogKind::export_event && e.category == category) {
            out.push_back({normalize_query(e.raw_query), e.target_doc_id, e.category});
        }
    }
    return out;
}

namespace detail {

/// Frequency-descending, text-ascending, filtered by min_cf, capped at max_n (0 = no cap).
inline std::vector<QueryEntry> top_by_frequency(std::vector<std::pair<std::string, std::uint64_t>> counts,
                                                std::uint64_t min_cf,
                                                std::size_t max_n)
{
    std::erase_if(counts, [&](const auto& kv) { return kv.second < min_cf; });
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (max_n > 0 && counts.size() > max_n) {
        counts.resize(max_n);
    }
    std::vector<QueryEntry> out;
    out.reserve(counts.size());
    for (auto& [text, cf] : counts) {
        out.push_back({std::move(text), 1, 1.0});
    }
    return out;
}

}  // namespace detail

/// Query-based sampling of single terms by collection frequency.
inline QuerySet sample_unigram_queries(const CorpusStats& stats,
                                       std::uint64_t min_cf,
                                       std::size_t max_n,
                                       std::optional<Category> category = std::nullopt)
{
    std::vector<std::pair<std::string, std::uint64_t>> counts(stats.collection_frequency.begin(),
                                                              stats.collection_frequency.end());
    return {std::move(category), QueryMode::unique, Provenance::sampled_unigram,
            detail::top_by_frequency(std::move(counts), min_cf, max_n)};
}

/// Query-based sampling of adjacent term pairs, counted within each document.
inline QuerySet sample_bigram_queries(const Corpus& corpus,
                                      const AnalyzerConfig& config,
                                      std::uint64_t min_cf,
                                      std::size_t max_n,
                                      std::optional<Category> category = std::nullopt)
{
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& doc : corpus.documents()) {
        if (category && doc.category != *category) {
            continue;
        }
        auto tokens = analyze_text(document_text(doc), config);
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            ++freq[tokens[i - 1] + ' ' + tokens[i]];
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> counts(freq.begin(), freq.end());
    return {std::move(category), QueryMode::unique, Provenance::sampled_bigram,
            detail::top_by_frequency(std::move(counts), min_cf, max_n)};
}

/// Draws `total` occurrences from `base` with probability proportional to
/// rank^-skew, rank being the 1-based position in base order. Entries keep
/// base order; unsampled queries are dropped.
inline QuerySet generate_zipf_log(const QuerySet& base, double skew, std::size_t total, std::uint64_t seed)
{
    if (base.entries.empty()) {
        throw Error("Zipf sampling needs a non-empty base query set");
    }
    if (!(skew >= 0.0) || !std::isfinite(skew)) {
        throw Error("Zipf skew must be a finite non-negative number");
    }
    std::vector<double> cumulative(base.entries.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
        acc += std::pow(static_cast<double>(i + 1), -skew);
        cumulative[i] = acc;
    }
    std::vector<std::size_t> hits(base.entries.size(), 0);
    Rng rng(seed);
    for (std::size_t n = 0; n < total; ++n) {
        const double u = rng.next_double() * acc;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        auto idx = std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
        ++hits[idx];
    }
    QuerySet out{base.category, QueryMode::repeated, Provenance::synthetic_zipf, {}};
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i] > 0) {
            out.entries.push_back({base.entries[i].text, hits[i], 1.0});
        }
    }
    return out;
}

/// Round-robin merge of query sets (first of each, then second of each, ...);
/// a text already taken keeps its first slot.
inline QuerySet interleave_query_sets(const std::vector<QuerySet>& parts, Provenance provenance)
{
    QuerySet out{std::nullopt, QueryMode::unique, provenance, {}};
    std::unordered_map<std::string, int> seen;
    std::size_t longest = 0;
    for (const auto& part : parts) {
        longest = std::max(longest, part.entries.size());
    }
    for (std::size_t i = 0; i < longest; ++i) {
        for (const auto& part : parts) {
            if (i < part.entries.size() && seen.emplace(part.entries[i].text, 0).second) {
                out.entries.push_back({part.entries[i].text, 1, 1.0});
            }
        }
    }
    return out;
}

/// Expands a repeated set into search log rows, each occurrence assigned a
/// category drawn uniformly from `categories`, rows shuffled by `seed`.
inline std::vector<LogEntry> synthesize_search_log(const QuerySet& repeated,
                                                   const std::vector<Category>& categories,
                                                   std::uint64_t seed)
{
    if (categories.empty()) {
        throw Error("synthetic log needs at least one category");
    }
    std::vector<LogEntry> rows;
    rows.reserve(repeated.occurrence_count());
    Rng rng(seed);
    for (const auto& e : repeated.entries) {
        for (std::size_t m = 0; m < e.multiplicity; ++m) {
            rows.push_back({{}, e.text, categories[rng.below(categories.size())], LogKind::search, {}});
        }
    }
    for (std::size_t i = rows.size(); i > 1; --i) {
        std::swap(rows[i - 1], rows[rng.below(i)]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].timestamp = "synthetic-" + std::to_string(i);
    }
    return rows;
}

/// Header comments carry provenance, mode and category; then a
/// `query<TAB>multiplicity<TAB>weight` table.
inline std::string query_set_to_tsv(const QuerySet& qs)
{
    std::string out;
    out += "# provenance=" + to_string(qs.provenance) + '\n';
    out += "# mode=" + to_string(qs.mode) + '\n';
    out += "# category=" + (qs.category ? qs.category->name() : std::string("*")) + '\n';
    out += "query\tmultiplicity\tweight\n";
    for (const auto& e : qs.entries) {
        out += e.text;
        out += '\t';
        out += std::to_string(e.multiplicity);
        out += '\t';
        out += format_double(e.weight);
        out += '\n';
    }
    return out;
}

inline QuerySet read_query_set_tsv(std::istream& in, const std::string& source = "<stream>")
{
    QuerySet qs;
    std::string raw;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = chomp(raw);
        if (line.starts_with("#")) {
            auto kv = trim(line.substr(1));
            auto eq = kv.find('=');
            if (eq == std::string_view::npos) {
                continue;
            }
            auto key = trim(kv.substr(0, eq));
            auto value = trim(kv.substr(eq + 1));
            if (key == "mode") {
                qs.mode = value == "repeated" ? QueryMode::repeated : QueryMode::unique;
            } else if (key == "category") {
                qs.category = value == "*" ? std::nullopt : std::optional(Category::parse(value));
            } else if (key == "provenance") {
                for (auto p : {Provenance::log, Provenance::sampled_unigram, Provenance::sampled_bigram,
                               Provenance::synthetic_zipf}) {
                    if (value == to_string(p)) {
                        qs.provenance = p;
                    }
                }
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line.starts_with("query\t")) {
                continue;
            }
        }
        if (line.empty()) {
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != 3) {
            throw ParseError(source, lineno, "expected query, multiplicity, weight");
        }
        try {
            qs.entries.push_back({normalize_query(cols[0]), parse_integer<std::size_t>(cols[1]),
                                  parse_double(cols[2])});
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    qs.validate();
    return qs;
}

inline QuerySet read_query_set(const std::string& path)
{
    auto in = open_input(path);
    return read_query_set_tsv(in, path);
}

}  // namespace rbias
