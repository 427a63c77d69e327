#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"

namespace rbias {

/// Settings for a seeded typed corpus with Zipfian term usage and
/// log-normally skewed document lengths.
struct SyntheticCorpusOptions {
    std::size_t docs_per_category = 1000;
    std::vector<Category> categories = {Category::publication(), Category::dataset(), Category::variable()};
    std::size_t vocabulary = 5000;
    double term_skew = 1.05;
    /// Median body length per category, cycled when there are more categories.
    std::vector<double> median_length = {120.0, 45.0, 10.0};
    double length_sigma = 0.9;
    std::uint64_t seed = 42;
};

/// Distinct pronounceable word for every index.
inline std::string synthetic_word(std::size_t index)
{
    static constexpr std::array<std::string_view, 20> syllables = {
        "ka", "lo", "mi", "nu", "re", "sa", "ti", "vo", "ze", "da",
        "fe", "gi", "ho", "ju", "pa", "qu", "ro", "si", "tu", "wa"};
    std::size_t n = index + syllables.size();
    std::string digits;
    while (n > 0) {
        digits.insert(0, syllables[n % syllables.size()]);
        n /= syllables.size();
    }
    return digits;
}

inline std::string synthetic_id_prefix(const Category& c)
{
    switch (c.kind()) {
    case Category::Kind::publication: return "pub";
    case Category::Kind::dataset: return "dat";
    case Category::Kind::variable: return "var";
    case Category::Kind::other: break;
    }
    return "doc";
}

inline Corpus generate_synthetic_corpus(const SyntheticCorpusOptions& opt)
{
    if (opt.vocabulary == 0 || opt.median_length.empty()) {
        throw Error("synthetic corpus needs a vocabulary and length settings");
    }
    std::vector<std::string> words(opt.vocabulary);
    for (std::size_t i = 0; i < words.size(); ++i) {
        words[i] = synthetic_word(i);
    }
    std::vector<double> cumulative(opt.vocabulary);
    double acc = 0.0;
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
        acc += std::pow(static_cast<double>(i + 1), -opt.term_skew);
        cumulative[i] = acc;
    }

    Rng rng(opt.seed);
    auto draw_rank = [&]() {
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), rng.next_double() * acc);
        return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    };

    Corpus corpus;
    for (std::size_t c = 0; c < opt.categories.size(); ++c) {
        const auto& category = opt.categories[c];
        // Each category favours a rotated slice of the vocabulary.
        const std::size_t shift = (c * opt.vocabulary) / 7;
        const double median = opt.median_length[c % opt.median_length.size()];
        auto word = [&]() -> const std::string& { return words[(draw_rank() + shift) % opt.vocabulary]; };
        for (std::size_t i = 0; i < opt.docs_per_category; ++i) {
            Document doc;
            auto number = std::to_string(i + 1);
            doc.doc_id = synthetic_id_prefix(category) + "-" + std::string(6 - std::min<std::size_t>(6, number.size()), '0') + number;
            if (!category.is_known()) {
                doc.doc_id = category.name() + "-" + doc.doc_id;
            }
            doc.category = category;
            const std::size_t title_len = 3 + rng.below(6);
            for (std::size_t w = 0; w < title_len; ++w) {
                if (w > 0) {
                    doc.title += ' ';
                }
                doc.title += word();
            }
            const double len = std::exp(std::log(median) + opt.length_sigma * rng.normal());
            const auto body_len = static_cast<std::size_t>(std::clamp(len, 1.0, 5000.0));
            for (std::size_t w = 0; w < body_len; ++w) {
                if (w > 0) {
                    doc.body += ' ';
                }
                doc.body += word();
            }
            corpus.add(std::move(doc));
        }
    }
    return corpus;
}

}  // namespace rbias
