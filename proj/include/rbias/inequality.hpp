#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "retrievability.hpp"

namespace rbias {

/// Which documents form the population: every document of the collection
/// (unscored ones as zeros) or only those with a positive score.
enum class PopulationMode : std::uint8_t { all_docs, retrieved_only };

inline std::string to_string(PopulationMode m) { return m == PopulationMode::all_docs ? "all-docs" : "retrieved-only"; }

inline PopulationMode parse_population_mode(std::string_view s)
{
    if (s == "all-docs" || s == "all_docs") {
        return PopulationMode::all_docs;
    }
    if (s == "retrieved-only" || s == "retrieved_only") {
        return PopulationMode::retrieved_only;
    }
    throw Error("unknown population mode '" + std::string(s) + "' (expected all-docs or retrieved-only)");
}

namespace detail {

inline std::vector<double> sorted_checked(std::span<const double> values)
{
    if (values.empty()) {
        throw Error("inequality of an empty population is undefined");
    }
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw Error("inequality measures need finite non-negative values");
        }
    }
    std::sort(v.begin(), v.end());
    return v;
}

inline double checked_total(std::span<const double> sorted)
{
    double total = 0.0;
    for (double x : sorted) {
        total += x;
    }
    if (!(total > 0.0)) {
        throw Error("inequality of a population with zero total is undefined");
    }
    return total;
}

}  // namespace detail

/// G = sum_i (2i - N - 1) v(i) / (N sum_j v(j)) over the values sorted ascending.
inline double gini(std::span<const double> values)
{
    const auto v = detail::sorted_checked(values);
    const double total = detail::checked_total(v);
    const auto n = static_cast<double>(v.size());
    double weighted = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * v[i];
    }
    return weighted / (n * total);
}

struct LorenzPoint {
    double x;
    double y;
};

/// Cumulative population share against cumulative value share, from (0,0) to (1,1).
struct LorenzCurve {
    std::vector<LorenzPoint> points;

    /// Trapezoidal area under the curve.
    [[nodiscard]] double area() const
    {
        double a = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) {
            a += (points[i].x - points[i - 1].x) * (points[i].y + points[i - 1].y) / 2.0;
        }
        return a;
    }
};

inline LorenzCurve lorenz(std::span<const double> values)
{
    const auto v = detail::sorted_checked(values);
    const double total = detail::checked_total(v);
    const auto n = static_cast<double>(v.size());
    LorenzCurve curve;
    curve.points.reserve(v.size() + 1);
    curve.points.push_back({0.0, 0.0});
    double running = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        running += v[i];
        curve.points.push_back({static_cast<double>(i + 1) / n, running / total});
    }
    return curve;
}

/// Values of the chosen population, implicit zeros included under all_docs.
inline std::vector<double> population_values(const ScoreVector& scores, PopulationMode mode)
{
    if (scores.collection_size < scores.scores.size()) {
        throw Error("collection size is smaller than the number of scored documents");
    }
    std::vector<double> out;
    const std::size_t zeros =
        mode == PopulationMode::all_docs ? scores.collection_size - scores.scores.size() : 0;
    out.reserve(zeros + scores.scores.size());
    out.assign(zeros, 0.0);
    for (const auto& [doc, s] : scores.scores) {
        out.push_back(s);
    }
    return out;
}

struct DistStats {
    double mean = 0.0;
    /// exp(mean(ln s)) over strictly positive scores; absent when none are positive.
    std::optional<double> geometric_mean;
    /// Population variance (divides by the population size).
    double variance = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
    std::size_t positive_count = 0;
    double pct_retrieved = 0.0;
};

inline DistStats dist_stats(const ScoreVector& scores, PopulationMode mode = PopulationMode::all_docs)
{
    if (scores.collection_size < scores.scores.size()) {
        throw Error("collection size is smaller than the number of scored documents");
    }
    DistStats st;
    st.positive_count = 0;
    double log_sum = 0.0;
    double total = 0.0;
    for (const auto& [doc, s] : scores.scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw Error("scores must be finite and non-negative");
        }
        if (s > 0.0) {
            ++st.positive_count;
            log_sum += std::log(s);
        }
        total += s;
    }
    st.count = mode == PopulationMode::all_docs ? scores.collection_size : st.positive_count;
    if (st.count == 0) {
        throw Error("distribution statistics of an empty population are undefined");
    }
    const auto n = static_cast<double>(st.count);
    st.mean = total / n;
    double sq = 0.0;
    for (const auto& [doc, s] : scores.scores) {
        if (mode == PopulationMode::all_docs || s > 0.0) {
            sq += (s - st.mean) * (s - st.mean);
        }
    }
    if (mode == PopulationMode::all_docs) {
        const auto implicit = static_cast<double>(scores.collection_size - scores.scores.size());
        sq += implicit * st.mean * st.mean;
    }
    st.variance = sq / n;
    st.stddev = std::sqrt(st.variance);
    if (st.positive_count > 0) {
        st.geometric_mean = std::exp(log_sum / static_cast<double>(st.positive_count));
    }
    st.pct_retrieved = scores.collection_size == 0
                           ? 0.0
                           : static_cast<double>(st.positive_count) / static_cast<double>(scores.collection_size) * 100.0;
    return st;
}

struct InequalityReport {
    std::optional<Category> category;
    std::size_t cutoff = 0;
    PopulationMode mode = PopulationMode::all_docs;
    double gini = 0.0;
    LorenzCurve lorenz;
    DistStats stats;
};

inline InequalityReport inequality_report(const ScoreVector& scores,
                                          PopulationMode mode = PopulationMode::all_docs,
                                          std::size_t cutoff = 0)
{
    const auto values = population_values(scores, mode);
    InequalityReport r;
    r.category = scores.category;
    r.cutoff = cutoff;
    r.mode = mode;
    r.gini = gini(values);
    r.lorenz = lorenz(values);
    r.stats = dist_stats(scores, mode);
    return r;
}

/// Plot-ready `x,y` rows with a header.
inline std::string lorenz_to_csv(const LorenzCurve& curve)
{
    std::string out = "x,y\n";
    for (const auto& p : curve.points) {
        out += format_double(p.x);
        out += ',';
        out += format_double(p.y);
        out += '\n';
    }
    return out;
}

}  // namespace rbias
