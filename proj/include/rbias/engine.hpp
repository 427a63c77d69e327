#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"
#include "querylog.hpp"

namespace rbias {

/// Dense document number. Numbers follow doc_id byte order, so ordering by
/// number is ordering by id.
using DocNo = std::uint32_t;

struct Posting {
    DocNo doc;
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const
    {
        if (!(k1 >= 0.0) || !std::isfinite(k1)) {
            throw Error("BM25 k1 must be a finite value >= 0");
        }
        if (!(b >= 0.0 && b <= 1.0)) {
            throw Error("BM25 b must lie in [0, 1]");
        }
    }
};

struct Hit {
    DocNo doc;
    double score;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Hits of one query occurrence; the hit at position i has rank i + 1.
struct RankedResult {
    std::size_t query_ordinal = 0;
    std::size_t entry = 0;
    std::vector<Hit> hits;
};

class InvertedIndex {
  public:
    static constexpr std::string_view format_tag = "rbias-index";
    static constexpr int format_version = 1;

    /// Indexes every document, or only those of `filter`.
    static InvertedIndex build(const Corpus& corpus,
                               const AnalyzerConfig& config = {},
                               std::optional<Category> filter = std::nullopt)
    {
        InvertedIndex index;
        index.m_category = std::move(filter);
        std::vector<const Document*> docs;
        for (const auto& doc : corpus.documents()) {
            if (!index.m_category || doc.category == *index.m_category) {
                docs.push_back(&doc);
            }
        }
        std::sort(docs.begin(), docs.end(),
                  [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });

        std::unordered_map<std::string, std::uint32_t> tf;
        std::vector<std::string_view> order;
        for (const auto* doc : docs) {
            auto docno = static_cast<DocNo>(index.m_doc_ids.size());
            auto tokens = analyze_text(document_text(*doc), config);
            index.m_doc_ids.push_back(doc->doc_id);
            index.m_doc_lengths.push_back(static_cast<std::uint32_t>(tokens.size()));
            index.m_total_length += tokens.size();

            tf.clear();
            order.clear();
            for (const auto& t : tokens) {
                auto [it, inserted] = tf.emplace(t, 0);
                ++it->second;
                if (inserted) {
                    order.push_back(it->first);
                }
            }
            for (auto term : order) {
                auto id = index.intern(term);
                index.m_postings[id].push_back({docno, tf.find(std::string(term))->second});
            }
        }
        index.finish();
        return index;
    }

    [[nodiscard]] std::size_t doc_count() const noexcept { return m_doc_ids.size(); }
    [[nodiscard]] std::size_t term_count() const noexcept { return m_terms.size(); }
    [[nodiscard]] double avg_doc_length() const noexcept { return m_avg_doc_length; }
    [[nodiscard]] const std::optional<Category>& category() const noexcept { return m_category; }

    [[nodiscard]] const std::string& doc_id(DocNo doc) const { return m_doc_ids.at(doc); }
    [[nodiscard]] std::uint32_t doc_length(DocNo doc) const { return m_doc_lengths.at(doc); }

    [[nodiscard]] std::optional<DocNo> find_doc(std::string_view doc_id) const
    {
        auto it = std::lower_bound(m_doc_ids.begin(), m_doc_ids.end(), doc_id);
        if (it == m_doc_ids.end() || *it != doc_id) {
            return std::nullopt;
        }
        return static_cast<DocNo>(it - m_doc_ids.begin());
    }

    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const
    {
        auto it = m_term_ids.find(std::string(term));
        if (it == m_term_ids.end()) {
            return {};
        }
        return m_postings[it->second];
    }

    [[nodiscard]] std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }

    [[nodiscard]] double idf(std::size_t df) const
    {
        const auto n = static_cast<double>(doc_count());
        const auto d = static_cast<double>(df);
        return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
    }

    /// Line-oriented text form: a version header, then documents, then terms
    /// in byte order with their postings.
    void save(std::ostream& out) const
    {
        out << format_tag << '\t' << format_version << '\n';
        out << "category\t" << (m_category ? m_category->name() : std::string("*")) << '\n';
        out << "documents\t" << m_doc_ids.size() << '\n';
        for (std::size_t i = 0; i < m_doc_ids.size(); ++i) {
            out << m_doc_ids[i] << '\t' << m_doc_lengths[i] << '\n';
        }
        std::vector<std::uint32_t> ids(m_terms.size());
        for (std::uint32_t i = 0; i < ids.size(); ++i) {
            ids[i] = i;
        }
        std::sort(ids.begin(), ids.end(), [&](auto a, auto b) { return m_terms[a] < m_terms[b]; });
        out << "terms\t" << m_terms.size() << '\n';
        for (auto id : ids) {
            out << m_terms[id];
            for (const auto& p : m_postings[id]) {
                out << '\t' << p.doc << ':' << p.tf;
            }
            out << '\n';
        }
    }

    static InvertedIndex load(std::istream& in, const std::string& source = "<stream>")
    {
        InvertedIndex index;
        std::string raw;
        std::size_t lineno = 0;
        auto next = [&]() -> std::string_view {
            if (!std::getline(in, raw)) {
                throw ParseError(source, lineno + 1, "unexpected end of index file");
            }
            ++lineno;
            return chomp(raw);
        };
        auto header = [&](std::string_view key) -> std::string_view {
            auto cols = split(next(), '\t');
            if (cols.size() != 2 || cols[0] != key) {
                throw ParseError(source, lineno, "expected '" + std::string(key) + "' header");
            }
            return cols[1];
        };
        try {
            auto version = header(format_tag);
            if (parse_integer<int>(version) != format_version) {
                throw ParseError(source, lineno, "unsupported index version " + std::string(version));
            }
            auto category = header("category");
            if (category != "*") {
                index.m_category = Category::parse(category);
            }
            auto ndocs = parse_integer<std::size_t>(header("documents"));
            for (std::size_t i = 0; i < ndocs; ++i) {
                auto cols = split(next(), '\t');
                if (cols.size() != 2) {
                    throw ParseError(source, lineno, "malformed document row");
                }
                if (!index.m_doc_ids.empty() && !(index.m_doc_ids.back() < cols[0])) {
                    throw ParseError(source, lineno, "document ids not strictly ascending");
                }
                index.m_doc_ids.emplace_back(cols[0]);
                index.m_doc_lengths.push_back(parse_integer<std::uint32_t>(cols[1]));
                index.m_total_length += index.m_doc_lengths.back();
            }
            auto nterms = parse_integer<std::size_t>(header("terms"));
            for (std::size_t i = 0; i < nterms; ++i) {
                auto cols = split(next(), '\t');
                auto id = index.intern(cols[0]);
                auto& list = index.m_postings[id];
                for (std::size_t c = 1; c < cols.size(); ++c) {
                    auto colon = cols[c].find(':');
                    if (colon == std::string_view::npos) {
                        throw ParseError(source, lineno, "malformed posting");
                    }
                    Posting p{parse_integer<DocNo>(cols[c].substr(0, colon)),
                              parse_integer<std::uint32_t>(cols[c].substr(colon + 1))};
                    if (p.doc >= ndocs || (!list.empty() && list.back().doc >= p.doc)) {
                        throw ParseError(source, lineno, "postings out of order or out of range");
                    }
                    list.push_back(p);
                }
            }
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(source, lineno, e.what());
        }
        index.finish();
        return index;
    }

  private:
    std::uint32_t intern(std::string_view term)
    {
        auto [it, inserted] = m_term_ids.emplace(std::string(term), static_cast<std::uint32_t>(m_terms.size()));
        if (inserted) {
            m_terms.emplace_back(term);
            m_postings.emplace_back();
        }
        return it->second;
    }

    void finish()
    {
        m_avg_doc_length = m_doc_ids.empty()
                               ? 0.0
                               : static_cast<double>(m_total_length) / static_cast<double>(m_doc_ids.size());
    }

    std::optional<Category> m_category;
    std::vector<std::string> m_doc_ids;
    std::vector<std::uint32_t> m_doc_lengths;
    std::uint64_t m_total_length = 0;
    double m_avg_doc_length = 0.0;
    std::unordered_map<std::string, std::uint32_t> m_term_ids;
    std::vector<std::string> m_terms;
    std::vector<std::vector<Posting>> m_postings;
};

inline InvertedIndex build_index(const Corpus& corpus,
                                 const AnalyzerConfig& config = {},
                                 std::optional<Category> filter = std::nullopt)
{
    return InvertedIndex::build(corpus, config, std::move(filter));
}

/// Contribution of one query-term occurrence to a document's score.
inline double bm25_term_weight(double idf, double tf, double doc_len, double avg_doc_len, const Bm25Params& p)
{
    const double norm = p.k1 * (1.0 - p.b + p.b * doc_len / avg_doc_len);
    return idf * (tf * (p.k1 + 1.0)) / (tf + norm);
}

inline double bm25_score(const InvertedIndex& index, const Bm25Params& params, const TokenList& query, DocNo doc)
{
    if (doc >= index.doc_count()) {
        throw Error("document number out of range");
    }
    const auto len = static_cast<double>(index.doc_length(doc));
    double score = 0.0;
    for (const auto& term : query) {
        auto list = index.postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), doc,
                                   [](const Posting& p, DocNo d) { return p.doc < d; });
        if (it == list.end() || it->doc != doc) {
            continue;
        }
        score += bm25_term_weight(index.idf(list.size()), it->tf, len, index.avg_doc_length(), params);
    }
    return score;
}

inline double bm25_score(const InvertedIndex& index,
                         const Bm25Params& params,
                         const TokenList& query,
                         std::string_view doc_id)
{
    auto doc = index.find_doc(doc_id);
    if (!doc) {
        throw Error("unknown document id '" + std::string(doc_id) + "'");
    }
    return bm25_score(index, params, query, *doc);
}

/// Term-at-a-time top-k retrieval with reusable scratch space. One Searcher
/// per thread; the index itself is shared read-only.
class Searcher {
  public:
    Searcher(const InvertedIndex& index, Bm25Params params) : m_index(&index), m_params(params)
    {
        m_params.validate();
        m_acc.assign(index.doc_count(), 0.0);
    }

    /// The k best documents with positive score, score descending, ties by doc id.
    [[nodiscard]] std::vector<Hit> search(const TokenList& query, std::size_t k)
    {
        if (k == 0) {
            throw Error("search depth k must be >= 1");
        }
        m_touched.clear();
        for (const auto& term : query) {
            auto list = m_index->postings(term);
            if (list.empty()) {
                continue;
            }
            const double idf = m_index->idf(list.size());
            for (const auto& p : list) {
                if (m_acc[p.doc] == 0.0) {
                    m_touched.push_back(p.doc);
                }
                m_acc[p.doc] += bm25_term_weight(idf, p.tf, m_index->doc_length(p.doc),
                                                 m_index->avg_doc_length(), m_params);
            }
        }
        std::vector<Hit> hits;
        hits.reserve(m_touched.size());
        for (auto doc : m_touched) {
            if (m_acc[doc] > 0.0) {
                hits.push_back({doc, m_acc[doc]});
            }
            m_acc[doc] = 0.0;
        }
        auto better = [](const Hit& a, const Hit& b) {
            return a.score != b.score ? a.score > b.score : a.doc < b.doc;
        };
        const auto keep = std::min(k, hits.size());
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), better);
        hits.resize(keep);
        return hits;
    }

  private:
    const InvertedIndex* m_index;
    Bm25Params m_params;
    std::vector<double> m_acc;
    std::vector<DocNo> m_touched;
};

inline std::vector<Hit> search(const InvertedIndex& index, const Bm25Params& params, const TokenList& query, std::size_t k)
{
    Searcher searcher(index, params);
    return searcher.search(query, k);
}

struct BatchOptions {
    std::size_t k = 100;
    std::size_t workers = 1;
    /// Queries retrieved between two in-order flushes to the sink.
    std::size_t chunk = 4096;
    AnalyzerConfig analyzer;
};

/// Runs every query of `queries` and hands results to `sink` in input order,
/// once per occurrence (an entry of multiplicity m is emitted m times with
/// consecutive ordinals). Output does not depend on `workers`.
inline void batch_search(const InvertedIndex& index,
                         const Bm25Params& params,
                         const QuerySet& queries,
                         const BatchOptions& options,
                         const std::function<void(const RankedResult&)>& sink)
{
    params.validate();
    if (options.k == 0) {
        throw Error("search depth k must be >= 1");
    }
    const std::size_t workers = std::max<std::size_t>(1, options.workers);
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
    std::vector<Searcher> searchers;
    searchers.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        searchers.emplace_back(index, params);
    }

    std::vector<std::vector<Hit>> buffer;
    std::size_t ordinal = 0;
    RankedResult result;
    for (std::size_t begin = 0; begin < queries.entries.size(); begin += chunk) {
        const std::size_t end = std::min(queries.entries.size(), begin + chunk);
        buffer.assign(end - begin, {});
        auto run = [&](std::size_t w) {
            for (std::size_t i = begin + w; i < end; i += workers) {
                auto tokens = analyze_text(queries.entries[i].text, options.analyzer);
                buffer[i - begin] = searchers[w].search(tokens, options.k);
            }
        };
        if (workers == 1) {
            run(0);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back(run, w);
            }
        }
        for (std::size_t i = begin; i < end; ++i) {
            result.entry = i;
            result.hits = std::move(buffer[i - begin]);
            for (std::size_t m = 0; m < queries.entries[i].multiplicity; ++m) {
                result.query_ordinal = ordinal++;
                sink(result);
            }
        }
    }
}

inline std::vector<RankedResult> batch_search(const InvertedIndex& index,
                                              const Bm25Params& params,
                                              const QuerySet& queries,
                                              const BatchOptions& options)
{
    std::vector<RankedResult> out;
    batch_search(index, params, queries, options, [&](const RankedResult& r) { out.push_back(r); });
    return out;
}

/// Batch results as `query_ordinal<TAB>rank<TAB>doc_id<TAB>score`, score to 6 decimals.
inline void write_results_tsv(std::ostream& out, const InvertedIndex& index, const RankedResult& result)
{
    for (std::size_t i = 0; i < result.hits.size(); ++i) {
        out << result.query_ordinal << '\t' << (i + 1) << '\t' << index.doc_id(result.hits[i].doc) << '\t'
            << format_fixed(result.hits[i].score, 6) << '\n';
    }
}

}  // namespace rbias
