#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "engine.hpp"
#include "querylog.hpp"

namespace rbias {

/// Sparse document scores. Documents missing from `scores` score 0;
/// `collection_size` counts every document of the population.
struct ScoreVector {
    std::optional<Category> category;
    std::size_t collection_size = 0;
    std::map<std::string, double> scores;

    [[nodiscard]] double get(std::string_view doc_id) const
    {
        auto it = scores.find(std::string(doc_id));
        return it == scores.end() ? 0.0 : it->second;
    }

    [[nodiscard]] std::size_t positive_count() const noexcept { return scores.size(); }

    [[nodiscard]] double total() const
    {
        double sum = 0.0;
        for (const auto& [doc, s] : scores) {
            sum += s;
        }
        return sum;
    }
};

struct RetrievabilityVector {
    std::size_t cutoff = 0;
    ScoreVector scores;
    std::size_t query_count = 0;
    double total_weight = 0.0;
};

/// Retrievability of one query run at several cutoffs, ascending.
struct CutoffSweep {
    std::vector<std::size_t> cutoffs;
    std::vector<RetrievabilityVector> vectors;

    [[nodiscard]] const RetrievabilityVector& at(std::size_t cutoff) const
    {
        for (const auto& v : vectors) {
            if (v.cutoff == cutoff) {
                return v;
            }
        }
        throw Error("cutoff " + std::to_string(cutoff) + " not in sweep");
    }
};

struct UsefulnessVector {
    ScoreVector scores;
    std::size_t event_count = 0;
};

/// 1 when a document at `rank` counts as retrieved within cutoff `c`.
inline int indicator(std::size_t rank, std::size_t c)
{
    if (rank == 0) {
        throw Error("ranks are 1-based");
    }
    return rank <= c ? 1 : 0;
}

/// Sorted, de-duplicated cutoffs, each in [1, depth].
inline std::vector<std::size_t> normalize_cutoffs(std::vector<std::size_t> cutoffs, std::size_t depth)
{
    if (cutoffs.empty()) {
        throw Error("at least one rank cutoff is required");
    }
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    if (cutoffs.front() == 0) {
        throw Error("rank cutoffs must be >= 1");
    }
    if (cutoffs.back() > depth) {
        throw Error("rank cutoff " + std::to_string(cutoffs.back()) + " exceeds retrieval depth " +
                    std::to_string(depth));
    }
    return cutoffs;
}

/// Single-pass accumulation of weighted retrievability at every cutoff.
/// Each hit lands in the bucket of the smallest cutoff admitting its rank;
/// finish() prefix-sums buckets, so per-cutoff values are cumulative.
class Accumulator {
  public:
    Accumulator(const InvertedIndex& index, std::vector<std::size_t> cutoffs, std::size_t depth)
        : m_index(&index), m_cutoffs(normalize_cutoffs(std::move(cutoffs), depth)), m_depth(depth),
          m_buckets(index.doc_count() * m_cutoffs.size(), 0.0)
    {}

    void add(const RankedResult& result, double weight)
    {
        if (!(weight > 0.0) || !std::isfinite(weight)) {
            throw Error("query weights must be positive and finite");
        }
        if (result.hits.size() > m_depth) {
            throw Error("result holds more hits than the retrieval depth");
        }
        const std::size_t width = m_cutoffs.size();
        for (std::size_t i = 0; i < result.hits.size(); ++i) {
            const std::size_t rank = i + 1;
            auto slot = static_cast<std::size_t>(
                std::lower_bound(m_cutoffs.begin(), m_cutoffs.end(), rank) - m_cutoffs.begin());
            if (slot == width) {
                break;
            }
            m_buckets[static_cast<std::size_t>(result.hits[i].doc) * width + slot] += weight;
        }
        ++m_query_count;
        m_total_weight += weight;
    }

    /// Pointwise sum with a partial accumulator over the same index and cutoffs.
    void merge(const Accumulator& other)
    {
        if (other.m_index != m_index || other.m_cutoffs != m_cutoffs) {
            throw Error("cannot merge accumulators of different runs");
        }
        for (std::size_t i = 0; i < m_buckets.size(); ++i) {
            m_buckets[i] += other.m_buckets[i];
        }
        m_query_count += other.m_query_count;
        m_total_weight += other.m_total_weight;
    }

    [[nodiscard]] CutoffSweep finish() const
    {
        CutoffSweep sweep;
        sweep.cutoffs = m_cutoffs;
        const std::size_t width = m_cutoffs.size();
        for (auto c : m_cutoffs) {
            RetrievabilityVector v;
            v.cutoff = c;
            v.scores.category = m_index->category();
            v.scores.collection_size = m_index->doc_count();
            v.query_count = m_query_count;
            v.total_weight = m_total_weight;
            sweep.vectors.push_back(std::move(v));
        }
        for (std::size_t doc = 0; doc < m_index->doc_count(); ++doc) {
            double running = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
                running += m_buckets[doc * width + j];
                if (running > 0.0) {
                    sweep.vectors[j].scores.scores.emplace_hint(sweep.vectors[j].scores.scores.end(),
                                                                m_index->doc_id(static_cast<DocNo>(doc)),
                                                                running);
                }
            }
        }
        return sweep;
    }

    [[nodiscard]] const std::vector<std::size_t>& cutoffs() const noexcept { return m_cutoffs; }

  private:
    const InvertedIndex* m_index;
    std::vector<std::size_t> m_cutoffs;
    std::size_t m_depth;
    std::vector<double> m_buckets;
    std::size_t m_query_count = 0;
    double m_total_weight = 0.0;
};

/// r_c(d) = sum over results of w_q * indicator(rank(d, q), c). `weights` is
/// indexed by RankedResult::entry.
inline CutoffSweep accumulate(const InvertedIndex& index,
                              std::span<const RankedResult> results,
                              std::span<const double> weights,
                              std::vector<std::size_t> cutoffs,
                              std::size_t depth)
{
    Accumulator acc(index, std::move(cutoffs), depth);
    for (const auto& r : results) {
        if (r.entry >= weights.size()) {
            throw Error("missing weight for query entry " + std::to_string(r.entry));
        }
        acc.add(r, weights[r.entry]);
    }
    return acc.finish();
}

/// Retrieves every query of `queries` and accumulates with the set's own weights.
inline CutoffSweep retrievability_sweep(const InvertedIndex& index,
                                        const Bm25Params& params,
                                        const QuerySet& queries,
                                        std::vector<std::size_t> cutoffs,
                                        const BatchOptions& options)
{
    Accumulator acc(index, std::move(cutoffs), options.k);
    batch_search(index, params, queries, options,
                 [&](const RankedResult& r) { acc.add(r, queries.entries[r.entry].weight); });
    return acc.finish();
}

using ExportWeight = std::function<double(const ExportEvent&)>;
using QueryDifficulty = std::function<double(std::string_view query)>;

/// u(d) = sum over export events targeting d of w_q * h(q), every export
/// counting as a binary relevance judgement.
inline UsefulnessVector compute_usefulness(const std::vector<ExportEvent>& exports,
                                           std::size_t collection_size,
                                           std::optional<Category> category = std::nullopt,
                                           const ExportWeight& weight = {},
                                           const QueryDifficulty& difficulty = {})
{
    UsefulnessVector out;
    out.scores.category = std::move(category);
    out.scores.collection_size = collection_size;
    for (const auto& e : exports) {
        const double w = weight ? weight(e) : 1.0;
        const double h = difficulty ? difficulty(e.query) : 1.0;
        const double g = w * h;
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw Error("usefulness weights must be positive and finite");
        }
        out.scores.scores[e.target_doc_id] += g;
        ++out.event_count;
    }
    if (out.scores.scores.size() > collection_size) {
        throw Error("more exported documents than the collection holds");
    }
    return out;
}

/// `doc_id<TAB>score` rows in doc_id order, preceded by a header row.
inline std::string score_vector_to_tsv(const ScoreVector& v)
{
    std::string out = "doc_id\tscore\n";
    for (const auto& [doc, s] : v.scores) {
        out += doc;
        out += '\t';
        out += format_double(s);
        out += '\n';
    }
    return out;
}

inline ScoreVector read_score_vector_tsv(std::istream& in, std::size_t collection_size,
                                         const std::string& source = "<stream>")
{
    ScoreVector v;
    v.collection_size = collection_size;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = chomp(raw);
        if (line.empty() || (lineno == 1 && line.starts_with("doc_id\t"))) {
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != 2) {
            throw ParseError(source, lineno, "expected doc_id and score");
        }
        v.scores[std::string(cols[0])] = parse_double(cols[1]);
    }
    return v;
}

}  // namespace rbias
