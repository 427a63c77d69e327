#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "rbias/querylog.hpp"
#include "rbias/synthetic.hpp"

using namespace rbias;

namespace {

LogEntry search_row(const std::string& q, Category c = Category::dataset())
{
    return {"t", q, std::move(c), LogKind::search, {}};
}

QuerySet base_of(std::size_t n)
{
    QuerySet qs;
    for (std::size_t i = 0; i < n; ++i) {
        qs.entries.push_back({"q" + std::to_string(i), 1, 1.0});
    }
    return qs;
}

}  // namespace

TEST(Normalize, Examples)
{
    EXPECT_EQ(normalize_query("  Family   Policy "), "family policy");
    EXPECT_EQ(normalize_query("ALLBUS\t2018"), "allbus 2018");
    EXPECT_EQ(normalize_query(""), "");
    EXPECT_EQ(normalize_query(" \t "), "");
}

TEST(Normalize, Idempotent)
{
    Rng rng(1);
    const std::string alphabet = "aB \t\nZz9";
    for (int i = 0; i < 300; ++i) {
        std::string s;
        for (std::uint64_t j = 0, n = rng.below(20); j < n; ++j) {
            s += alphabet[rng.below(alphabet.size())];
        }
        const auto once = normalize_query(s);
        ASSERT_EQ(normalize_query(once), once);
        ASSERT_FALSE(once.starts_with(' '));
        ASSERT_FALSE(once.ends_with(' '));
        ASSERT_EQ(once.find("  "), std::string::npos);
    }
}

TEST(QuerySets, RepeatedAndUnique)
{
    std::vector<LogEntry> log = {search_row("allbus"), search_row("ALLBUS"), search_row("family policy"),
                                 search_row("allbus", Category::publication())};
    auto [qr, qu] = build_query_sets(log, Category::dataset());
    ASSERT_EQ(qr.entries.size(), 2U);
    EXPECT_EQ(qr.entries[0].text, "allbus");
    EXPECT_EQ(qr.entries[0].multiplicity, 2U);
    EXPECT_EQ(qr.entries[1].text, "family policy");
    EXPECT_EQ(qr.entries[1].multiplicity, 1U);
    EXPECT_EQ(qr.occurrence_count(), 3U);
    ASSERT_EQ(qu.entries.size(), 2U);
    EXPECT_EQ(qu.entries[0].multiplicity, 1U);
    EXPECT_EQ(qr.mode, QueryMode::repeated);
    EXPECT_EQ(qu.mode, QueryMode::unique);
    EXPECT_NO_THROW(qr.validate());
    EXPECT_NO_THROW(qu.validate());
}

TEST(QuerySets, ExportsAreNotSearches)
{
    std::vector<LogEntry> log = {search_row("a"), {"t", "a", Category::dataset(), LogKind::export_event, "d1"}};
    auto [qr, qu] = build_query_sets(log, Category::dataset());
    EXPECT_EQ(qr.occurrence_count(), 1U);
    auto ex = extract_exports(log, Category::dataset());
    ASSERT_EQ(ex.size(), 1U);
    EXPECT_EQ(ex[0].target_doc_id, "d1");
    EXPECT_TRUE(extract_exports(log, Category::variable()).empty());
}

TEST(QuerySets, UniqueCountMatchesDistinctTexts)
{
    Rng rng(9);
    std::vector<LogEntry> log;
    std::set<std::string> distinct;
    for (int i = 0; i < 500; ++i) {
        auto q = "Q" + std::to_string(rng.below(60));
        distinct.insert(normalize_query(q));
        log.push_back(search_row(q));
    }
    auto [qr, qu] = build_query_sets(log, Category::dataset());
    EXPECT_EQ(qu.entries.size(), distinct.size());
    EXPECT_EQ(qr.occurrence_count(), 500U);
    auto d = dedup(qr);
    ASSERT_EQ(d.entries.size(), qu.entries.size());
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
        EXPECT_EQ(d.entries[i].text, qu.entries[i].text);
    }
}

TEST(QuerySets, PopularityWeights)
{
    std::vector<LogEntry> log = {search_row("a"), search_row("a"), search_row("a"), search_row("b")};
    auto [qr, qu] = build_query_sets(log, Category::dataset());
    auto pop = apply_weights(qu, qr, WeightScheme::popularity);
    EXPECT_EQ(pop.entries[0].weight, 3.0);
    EXPECT_EQ(pop.entries[1].weight, 1.0);
    auto uni = apply_weights(qu, qr, WeightScheme::uniform);
    EXPECT_EQ(uni.entries[0].weight, 1.0);
    EXPECT_THROW(parse_weight_scheme("heavy"), Error);
}

TEST(QuerySets, ValidateRejectsBadSets)
{
    QuerySet qs;
    qs.entries = {{"a", 1, 0.0}};
    EXPECT_THROW(qs.validate(), Error);
    qs.entries = {{"a", 2, 1.0}};
    EXPECT_THROW(qs.validate(), Error);
    qs.entries = {{"a", 1, 1.0}, {"a", 1, 1.0}};
    EXPECT_THROW(qs.validate(), Error);
}

TEST(LogParsing, TsvAnyColumnOrderAndRejections)
{
    std::istringstream in("query\tkind\ttimestamp\tcategory\ttarget_doc_id\n"
                          "allbus\tsearch\t1\tdataset\t\n"
                          "allbus\texport\t2\tdataset\td1\n"
                          "x\texport\t3\tdataset\t\n"
                          "\tsearch\t4\tdataset\t\n"
                          "y\tclick\t5\tdataset\t\n"
                          "short\tsearch\n");
    auto log = read_log_tsv(in);
    EXPECT_EQ(log.entries.size(), 2U);
    EXPECT_EQ(log.rejected, 4U);
    EXPECT_EQ(log.rejections.size(), 4U);
    EXPECT_EQ(log.entries[1].kind, LogKind::export_event);
    EXPECT_EQ(log.entries[1].target_doc_id, "d1");
}

TEST(LogParsing, MissingHeaderColumnIsFatal)
{
    std::istringstream in("timestamp\tkind\tquery\n1\tsearch\ta\n");
    EXPECT_THROW(read_log_tsv(in), ParseError);
}

TEST(LogParsing, JsonlAndRoundTrip)
{
    std::istringstream in(R"({"timestamp":"1","kind":"search","category":"variable","query":"Age"}
not json
{"timestamp":"2","kind":"export","category":"variable","query":"age","target_doc_id":"v7"}
)");
    auto log = read_log_jsonl(in);
    ASSERT_EQ(log.entries.size(), 2U);
    EXPECT_EQ(log.rejected, 1U);
    std::istringstream again(log_to_tsv(log.entries));
    auto back = read_log_tsv(again);
    ASSERT_EQ(back.entries.size(), 2U);
    EXPECT_EQ(back.entries[0].raw_query, "Age");
    EXPECT_EQ(back.entries[1].target_doc_id, "v7");
    EXPECT_EQ(back.entries[1].category, Category::variable());
}

TEST(Sampling, UnigramsByCollectionFrequency)
{
    Corpus c;
    c.add({"d1", Category::dataset(), "", "a a a b b c", {}});
    c.add({"d2", Category::dataset(), "", "b d", {}});
    auto qs = sample_unigram_queries(corpus_stats(c), 2, 0);
    ASSERT_EQ(qs.entries.size(), 2U);
    EXPECT_EQ(qs.entries[0].text, "a");
    EXPECT_EQ(qs.entries[1].text, "b");
    auto capped = sample_unigram_queries(corpus_stats(c), 1, 3);
    ASSERT_EQ(capped.entries.size(), 3U);
    EXPECT_EQ(capped.entries[2].text, "c");
    EXPECT_EQ(capped.provenance, Provenance::sampled_unigram);
}

TEST(Sampling, BigramsWithinDocuments)
{
    Corpus c;
    c.add({"d1", Category::dataset(), "", "x y x y", {}});
    c.add({"d2", Category::dataset(), "", "y z", {}});
    auto qs = sample_bigram_queries(c, {}, 1, 0);
    ASSERT_EQ(qs.entries.size(), 3U);
    EXPECT_EQ(qs.entries[0].text, "x y");
    EXPECT_EQ(qs.entries[1].text, "y x");
    EXPECT_EQ(qs.entries[2].text, "y z");
    EXPECT_EQ(sample_bigram_queries(c, {}, 2, 0).entries.size(), 1U);
}

TEST(Sampling, DeterministicAndCapped)
{
    SyntheticCorpusOptions opt;
    opt.docs_per_category = 100;
    auto corpus = generate_synthetic_corpus(opt);
    auto stats = corpus_stats(corpus);
    auto a = sample_unigram_queries(stats, 2, 50);
    auto b = sample_unigram_queries(corpus_stats(corpus), 2, 50);
    ASSERT_EQ(a.entries.size(), 50U);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].text, b.entries[i].text);
        EXPECT_GE(stats.collection_frequency.at(a.entries[i].text), 2U);
    }
}

TEST(Zipf, HeadDominatesAtSkewOnePointFive)
{
    auto log = generate_zipf_log(base_of(2000), 1.5, 20000, 42);
    EXPECT_EQ(log.occurrence_count(), 20000U);
    EXPECT_EQ(log.mode, QueryMode::repeated);
    std::vector<std::size_t> counts;
    for (const auto& e : log.entries) {
        counts.push_back(e.multiplicity);
    }
    std::sort(counts.begin(), counts.end(), std::greater<>());
    const auto median = counts[counts.size() / 2];
    EXPECT_GE(counts[0], 10 * median);
    EXPECT_EQ(log.entries[0].text, "q0");
}

TEST(Zipf, SeedDeterminism)
{
    auto base = base_of(300);
    auto a = generate_zipf_log(base, 1.2, 5000, 7);
    auto b = generate_zipf_log(base, 1.2, 5000, 7);
    auto c = generate_zipf_log(base, 1.2, 5000, 8);
    EXPECT_EQ(query_set_to_tsv(a), query_set_to_tsv(b));
    EXPECT_NE(query_set_to_tsv(a), query_set_to_tsv(c));
}

TEST(Zipf, ZeroSkewIsUniform)
{
    const std::size_t n = 20;
    const std::size_t total = 20000;
    auto log = generate_zipf_log(base_of(n), 0.0, total, 3);
    ASSERT_EQ(log.entries.size(), n);
    const double expected = static_cast<double>(total) / static_cast<double>(n);
    double chi2 = 0.0;
    for (const auto& e : log.entries) {
        const double d = static_cast<double>(e.multiplicity) - expected;
        chi2 += d * d / expected;
    }
    // 19 degrees of freedom, upper 0.1% point.
    EXPECT_LT(chi2, 43.82);
}

TEST(Zipf, InvalidInput)
{
    EXPECT_THROW(generate_zipf_log(QuerySet{}, 1.0, 10, 1), Error);
    EXPECT_THROW(generate_zipf_log(base_of(3), -1.0, 10, 1), Error);
}

TEST(Interleave, RoundRobinWithoutDuplicates)
{
    QuerySet a;
    a.entries = {{"x", 1, 1.0}, {"y", 1, 1.0}, {"z", 1, 1.0}};
    QuerySet b;
    b.entries = {{"p q", 1, 1.0}, {"x", 1, 1.0}};
    auto m = interleave_query_sets({a, b}, Provenance::synthetic_zipf);
    std::vector<std::string> texts;
    for (const auto& e : m.entries) {
        texts.push_back(e.text);
    }
    EXPECT_EQ(texts, (std::vector<std::string>{"x", "p q", "y", "z"}));
}

TEST(SyntheticLog, PreservesOccurrences)
{
    auto zipf = generate_zipf_log(base_of(50), 1.0, 1000, 5);
    const std::vector<Category> cats = {Category::publication(), Category::dataset(), Category::variable()};
    auto rows = synthesize_search_log(zipf, cats, 6);
    ASSERT_EQ(rows.size(), 1000U);
    std::size_t total = 0;
    for (const auto& c : cats) {
        auto [qr, qu] = build_query_sets(rows, c);
        total += qr.occurrence_count();
        EXPECT_GT(qr.occurrence_count(), 200U);
    }
    EXPECT_EQ(total, 1000U);
    EXPECT_EQ(log_to_tsv(rows), log_to_tsv(synthesize_search_log(zipf, cats, 6)));
}

TEST(QuerySetFile, RoundTrip)
{
    auto zipf = generate_zipf_log(base_of(40), 1.0, 500, 5);
    zipf.category = Category::variable();
    std::istringstream in(query_set_to_tsv(zipf));
    auto back = read_query_set_tsv(in);
    EXPECT_EQ(query_set_to_tsv(back), query_set_to_tsv(zipf));
    EXPECT_EQ(back.provenance, Provenance::synthetic_zipf);
    EXPECT_EQ(back.mode, QueryMode::repeated);
    EXPECT_EQ(back.category, Category::variable());
}
