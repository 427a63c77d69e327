#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "retrievability.hpp"

namespace rbias {

/// Documents by descending score, ties by doc_id ascending, zero scores excluded.
struct RankedDocList {
    std::vector<std::string> doc_ids;
    std::vector<double> scores;

    [[nodiscard]] std::size_t size() const noexcept { return doc_ids.size(); }
    [[nodiscard]] bool empty() const noexcept { return doc_ids.empty(); }

    /// Builds a list from ids already in rank order, scored by descending position.
    static RankedDocList from_order(std::vector<std::string> ids)
    {
        RankedDocList list;
        list.scores.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            list.scores.push_back(static_cast<double>(ids.size() - i));
        }
        list.doc_ids = std::move(ids);
        return list;
    }
};

inline RankedDocList rank_by_score(const ScoreVector& vector)
{
    std::vector<std::pair<const std::string*, double>> items;
    for (const auto& [doc, s] : vector.scores) {
        if (s > 0.0) {
            items.emplace_back(&doc, s);
        }
    }
    if (items.empty()) {
        throw Error("cannot rank a score vector without positive scores");
    }
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    RankedDocList out;
    out.doc_ids.reserve(items.size());
    out.scores.reserve(items.size());
    for (const auto& [doc, s] : items) {
        out.doc_ids.push_back(*doc);
        out.scores.push_back(s);
    }
    return out;
}

/// |top_k(S) ∩ top_k(T)| / |top_k(S) ∪ top_k(T)|, each list cut at min(k, size).
inline double jaccard_topk(const RankedDocList& s, const RankedDocList& t, std::size_t k)
{
    if (k == 0) {
        throw Error("Jaccard depth k must be >= 1");
    }
    if (s.empty() || t.empty()) {
        throw Error("Jaccard needs two non-empty lists");
    }
    const std::size_t ks = std::min(k, s.size());
    const std::size_t kt = std::min(k, t.size());
    std::unordered_set<std::string_view> top_s(s.doc_ids.begin(), s.doc_ids.begin() + static_cast<std::ptrdiff_t>(ks));
    std::size_t common = 0;
    for (std::size_t i = 0; i < kt; ++i) {
        common += top_s.contains(t.doc_ids[i]) ? 1 : 0;
    }
    return static_cast<double>(common) / static_cast<double>(ks + kt - common);
}

namespace detail {

inline std::uint64_t tied_pairs_in_runs(std::span<const double> sorted)
{
    std::uint64_t pairs = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
            continue;
        }
        pairs += static_cast<std::uint64_t>(run) * (run - 1) / 2;
        run = 1;
    }
    return pairs;
}

/// Sorts `v` ascending by merge sort, returning the number of inversions.
inline std::uint64_t count_inversions(std::vector<double>& v)
{
    std::vector<double> tmp(v.size());
    std::uint64_t swaps = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size());
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo;
            std::size_t j = mid;
            std::size_t out = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += mid - i;
                    tmp[out++] = v[j++];
                } else {
                    tmp[out++] = v[i++];
                }
            }
            while (i < mid) {
                tmp[out++] = v[i++];
            }
            while (j < hi) {
                tmp[out++] = v[j++];
            }
        }
        std::swap(v, tmp);
    }
    return swaps;
}

/// 1-based ranks with ties sharing the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> x)
{
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && x[order[j]] == x[order[i]]) {
            ++j;
        }
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t m = i; m < j; ++m) {
            ranks[order[m]] = r;
        }
        i = j;
    }
    return ranks;
}

inline void check_paired(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw Error("paired samples differ in length");
    }
    if (x.size() < 2) {
        throw Error("rank correlation needs at least 2 conjoint items");
    }
}

}  // namespace detail

/// Kendall's tau-b in O(n log n) (Knight's algorithm). NaN when either
/// sample is constant.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y)
{
    detail::check_paired(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }
    const auto n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = detail::tied_pairs_in_runs(xs);
    std::uint64_t n3 = 0;
    {
        std::size_t run = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
                ++run;
                continue;
            }
            n3 += static_cast<std::uint64_t>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    const std::uint64_t swaps = detail::count_inversions(ys);
    const std::uint64_t n2 = detail::tied_pairs_in_runs(ys);
    if (n0 == n1 || n0 == n2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto concordant_minus_discordant =
        static_cast<std::int64_t>(n0 - n1 - n2 + n3) - 2 * static_cast<std::int64_t>(swaps);
    return static_cast<double>(concordant_minus_discordant) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

/// Pearson correlation of average ranks. NaN when either sample is constant.
inline double spearman_rho(std::span<const double> x, std::span<const double> y)
{
    detail::check_paired(x, y);
    const auto rx = detail::average_ranks(x);
    const auto ry = detail::average_ranks(y);
    const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Scores of the documents present in both lists, in S order.
struct ConjointScores {
    std::vector<double> s;
    std::vector<double> t;
};

inline ConjointScores conjoint_scores(const RankedDocList& s, const RankedDocList& t)
{
    std::unordered_map<std::string_view, double> in_t;
    in_t.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        in_t.emplace(t.doc_ids[i], t.scores[i]);
    }
    ConjointScores out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (auto it = in_t.find(s.doc_ids[i]); it != in_t.end()) {
            out.s.push_back(s.scores[i]);
            out.t.push_back(it->second);
        }
    }
    return out;
}

/// tau-b over the scores of conjoint documents.
inline double kendall_tau(const RankedDocList& s, const RankedDocList& t)
{
    auto c = conjoint_scores(s, t);
    return kendall_tau_b(c.s, c.t);
}

inline double spearman_rho(const RankedDocList& s, const RankedDocList& t)
{
    auto c = conjoint_scores(s, t);
    return spearman_rho(c.s, c.t);
}

/// Rank-biased overlap truncated at `depth` (default: the shorter list) and
/// divided by the weight mass (1 - p^depth), so identical lists give exactly 1.
inline double rbo(const RankedDocList& s, const RankedDocList& t, double p = 0.9,
                  std::optional<std::size_t> depth = std::nullopt)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw Error("RBO persistence p must lie in (0, 1)");
    }
    if (s.empty() || t.empty()) {
        throw Error("RBO needs two non-empty lists");
    }
    const std::size_t d_max = depth.value_or(std::min(s.size(), t.size()));
    if (d_max == 0) {
        throw Error("RBO depth must be >= 1");
    }
    std::unordered_set<std::string_view> seen_s;
    std::unordered_set<std::string_view> seen_t;
    std::size_t overlap = 0;
    double weight = 1.0 - p;
    double weighted = 0.0;
    double mass = 0.0;
    for (std::size_t d = 1; d <= d_max; ++d) {
        // Past the end of a list its prefix stops growing.
        std::optional<std::string_view> a;
        std::optional<std::string_view> b;
        if (d <= s.size()) {
            a = s.doc_ids[d - 1];
        }
        if (d <= t.size()) {
            b = t.doc_ids[d - 1];
        }
        if (a && b && *a == *b) {
            ++overlap;
        } else {
            if (a && seen_t.contains(*a)) {
                ++overlap;
            }
            if (b && seen_s.contains(*b)) {
                ++overlap;
            }
        }
        if (a) {
            seen_s.insert(*a);
        }
        if (b) {
            seen_t.insert(*b);
        }
        const double agreement = static_cast<double>(overlap) / static_cast<double>(d);
        weighted += weight * agreement;
        mass += weight;
        weight *= p;
    }
    return weighted / mass;
}

struct ComparisonReport {
    std::optional<Category> category;
    std::vector<std::pair<std::size_t, double>> jaccard;
    double kendall = 0.0;
    double spearman = 0.0;
    double rbo = 0.0;
    double rbo_p = 0.9;
    std::size_t size_r = 0;
    std::size_t size_u = 0;
    std::size_t conjoint = 0;
};

/// Jaccard at every k plus tau-b, rho and RBO between the rankings induced by two score vectors.
inline ComparisonReport compare_querysets(const ScoreVector& vec_r,
                                          const ScoreVector& vec_u,
                                          const std::vector<std::size_t>& ks,
                                          double p = 0.9)
{
    if (vec_r.category != vec_u.category) {
        throw Error("compared score vectors belong to different categories");
    }
    const auto s = rank_by_score(vec_r);
    const auto t = rank_by_score(vec_u);
    ComparisonReport r;
    r.category = vec_r.category;
    for (auto k : ks) {
        r.jaccard.emplace_back(k, jaccard_topk(s, t, k));
    }
    auto c = conjoint_scores(s, t);
    r.conjoint = c.s.size();
    r.kendall = c.s.size() >= 2 ? kendall_tau_b(c.s, c.t) : std::numeric_limits<double>::quiet_NaN();
    r.spearman = c.s.size() >= 2 ? spearman_rho(c.s, c.t) : std::numeric_limits<double>::quiet_NaN();
    r.rbo = rbo(s, t, p);
    r.rbo_p = p;
    r.size_r = s.size();
    r.size_u = t.size();
    return r;
}

}  // namespace rbias
