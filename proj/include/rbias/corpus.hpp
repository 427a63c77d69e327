#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace rbias {

/// Record type of a document. The three known kinds sort first, in this order,
/// followed by any other(name) types alphabetically.
class Category {
  public:
    enum class Kind : std::uint8_t { publication, dataset, variable, other };

    Category() = default;

    static Category publication() { return Category(Kind::publication, {}); }
    static Category dataset() { return Category(Kind::dataset, {}); }
    static Category variable() { return Category(Kind::variable, {}); }
    static Category other(std::string name) { return Category(Kind::other, std::move(name)); }

    /// Case-insensitive match against the known names; anything else becomes
    /// other(name) with the trimmed input as the name.
    static Category parse(std::string_view raw)
    {
        auto text = trim(raw);
        auto lower = to_lower_ascii(text);
        if (lower == "publication") {
            return publication();
        }
        if (lower == "dataset") {
            return dataset();
        }
        if (lower == "variable") {
            return variable();
        }
        return other(std::string(text));
    }

    [[nodiscard]] Kind kind() const noexcept { return m_kind; }
    [[nodiscard]] bool is_known() const noexcept { return m_kind != Kind::other; }

    [[nodiscard]] std::string name() const
    {
        switch (m_kind) {
        case Kind::publication: return "publication";
        case Kind::dataset: return "dataset";
        case Kind::variable: return "variable";
        case Kind::other: break;
        }
        return m_other;
    }

    friend bool operator==(const Category&, const Category&) = default;
    friend auto operator<=>(const Category&, const Category&) = default;

  private:
    Category(Kind kind, std::string other) : m_kind(kind), m_other(std::move(other)) {}

    Kind m_kind = Kind::publication;
    std::string m_other;
};

struct Document {
    std::string doc_id;
    Category category;
    std::string title;
    std::string body;
    std::map<std::string, std::string> extra;
};

/// Text that gets analyzed and indexed for a document.
inline std::string document_text(const Document& doc)
{
    std::string text;
    text.reserve(doc.title.size() + doc.body.size() + 1);
    text += doc.title;
    text += ' ';
    text += doc.body;
    return text;
}

/// Ordered, id-unique document collection.
class Corpus {
  public:
    void add(Document doc)
    {
        if (doc.doc_id.empty()) {
            throw Error("document id must be non-empty");
        }
        auto [it, inserted] = m_positions.emplace(doc.doc_id, m_documents.size());
        if (!inserted) {
            throw Error("duplicate document id '" + doc.doc_id + "'");
        }
        ++m_category_counts[doc.category];
        m_documents.push_back(std::move(doc));
    }

    [[nodiscard]] const std::vector<Document>& documents() const noexcept { return m_documents; }
    [[nodiscard]] std::size_t size() const noexcept { return m_documents.size(); }
    [[nodiscard]] bool empty() const noexcept { return m_documents.empty(); }

    [[nodiscard]] const Document* find(std::string_view doc_id) const
    {
        auto it = m_positions.find(std::string(doc_id));
        return it == m_positions.end() ? nullptr : &m_documents[it->second];
    }

    [[nodiscard]] std::size_t count(const Category& category) const
    {
        auto it = m_category_counts.find(category);
        return it == m_category_counts.end() ? 0 : it->second;
    }

    /// Categories present in the corpus, in canonical order.
    [[nodiscard]] std::vector<Category> categories() const
    {
        std::vector<Category> out;
        out.reserve(m_category_counts.size());
        for (const auto& [category, n] : m_category_counts) {
            out.push_back(category);
        }
        return out;
    }

    [[nodiscard]] const std::map<Category, std::size_t>& category_counts() const noexcept
    {
        return m_category_counts;
    }

    /// Number of records whose type string was not one of the known kinds.
    [[nodiscard]] std::size_t unknown_category_count() const noexcept { return m_unknown_categories; }
    void note_unknown_category() noexcept { ++m_unknown_categories; }

  private:
    std::vector<Document> m_documents;
    std::unordered_map<std::string, std::size_t> m_positions;
    std::map<Category, std::size_t> m_category_counts;
    std::size_t m_unknown_categories = 0;
};

using TokenList = std::vector<std::string>;

struct AnalyzerConfig {
    bool remove_stopwords = false;
    std::set<std::string, std::less<>> stopwords;
};

namespace detail {

// Bytes >= 0x80 belong to UTF-8 sequences and are kept inside tokens.
inline bool is_token_byte(unsigned char ch)
{
    return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
           ch >= 0x80;
}

}  // namespace detail

/// Lowercases and splits on every non-alphanumeric character.
inline TokenList analyze_text(std::string_view text, const AnalyzerConfig& config = {})
{
    TokenList tokens;
    std::string current;
    auto flush = [&] {
        if (current.empty()) {
            return;
        }
        if (!(config.remove_stopwords && config.stopwords.contains(current))) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (char ch : text) {
        auto byte = static_cast<unsigned char>(ch);
        if (!detail::is_token_byte(byte)) {
            flush();
            continue;
        }
        current += (byte >= 'A' && byte <= 'Z') ? static_cast<char>(byte - 'A' + 'a') : ch;
    }
    flush();
    return tokens;
}

struct CorpusStats {
    std::size_t doc_count_total = 0;
    std::map<Category, std::size_t> doc_count;
    std::unordered_map<std::string, std::uint64_t> collection_frequency;
    std::unordered_map<std::string, std::uint64_t> document_frequency;
    std::map<std::string, std::size_t> doc_length;
    double avg_doc_length = 0.0;
    std::map<Category, double> avg_doc_length_by_category;
};

/// Collection statistics over the analyzed title+body of each document,
/// optionally restricted to one category.
inline CorpusStats corpus_stats(const Corpus& corpus,
                                const AnalyzerConfig& config = {},
                                const std::optional<Category>& scope = std::nullopt)
{
    CorpusStats stats;
    std::uint64_t total_length = 0;
    std::map<Category, std::uint64_t> length_by_category;
    std::set<std::string_view> seen;
    for (const auto& doc : corpus.documents()) {
        if (scope && doc.category != *scope) {
            continue;
        }
        auto tokens = analyze_text(document_text(doc), config);
        ++stats.doc_count_total;
        ++stats.doc_count[doc.category];
        stats.doc_length[doc.doc_id] = tokens.size();
        total_length += tokens.size();
        length_by_category[doc.category] += tokens.size();

        seen.clear();
        for (const auto& t : tokens) {
            ++stats.collection_frequency[t];
        }
        for (const auto& t : tokens) {
            if (seen.insert(t).second) {
                ++stats.document_frequency[t];
            }
        }
    }
    if (stats.doc_count_total > 0) {
        stats.avg_doc_length =
            static_cast<double>(total_length) / static_cast<double>(stats.doc_count_total);
    }
    for (const auto& [category, n] : stats.doc_count) {
        stats.avg_doc_length_by_category[category] =
            static_cast<double>(length_by_category[category]) / static_cast<double>(n);
    }
    return stats;
}

enum class CorpusFormat : std::uint8_t { jsonl, tsv };

inline CorpusFormat corpus_format_from_path(std::string_view path)
{
    if (path.ends_with(".tsv") || path.ends_with(".txt")) {
        return CorpusFormat::tsv;
    }
    return CorpusFormat::jsonl;
}

namespace detail {

inline void add_parsed(Corpus& corpus, Document doc, const std::string& source, std::size_t line)
{
    if (!doc.category.is_known()) {
        corpus.note_unknown_category();
    }
    if (corpus.find(doc.doc_id) != nullptr) {
        throw ParseError(source, line, "duplicate document id '" + doc.doc_id + "'");
    }
    corpus.add(std::move(doc));
}

inline std::string json_scalar_text(const nlohmann::json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace detail

/// One JSON object per line: id, type, title required; body, extra optional.
/// Blank lines are skipped.
inline Corpus read_corpus_jsonl(std::istream& in, const std::string& source = "<stream>")
{
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(source, lineno, "record is not a JSON object");
        }
        auto required = [&](const char* key) -> std::string {
            auto it = obj.find(key);
            if (it == obj.end() || !it->is_string()) {
                throw ParseError(source, lineno, std::string("missing string field '") + key + "'");
            }
            return it->get<std::string>();
        };
        Document doc;
        doc.doc_id = required("id");
        if (doc.doc_id.empty()) {
            throw ParseError(source, lineno, "empty document id");
        }
        doc.category = Category::parse(required("type"));
        doc.title = required("title");
        if (auto it = obj.find("body"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) {
                throw ParseError(source, lineno, "field 'body' must be a string");
            }
            doc.body = it->get<std::string>();
        }
        if (auto it = obj.find("extra"); it != obj.end() && !it->is_null()) {
            if (!it->is_object()) {
                throw ParseError(source, lineno, "field 'extra' must be an object");
            }
            for (const auto& [key, value] : it->items()) {
                if (value.is_structured()) {
                    throw ParseError(source, lineno, "field 'extra' must be a flat map");
                }
                doc.extra.emplace(key, detail::json_scalar_text(value));
            }
        }
        detail::add_parsed(corpus, std::move(doc), source, lineno);
    }
    return corpus;
}

/// Columns id, type, title, body. A leading header row starting with "id" is skipped.
inline Corpus read_corpus_tsv(std::istream& in, const std::string& source = "<stream>")
{
    Corpus corpus;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = chomp(raw);
        if (trim(line).empty()) {
            continue;
        }
        auto cols = split(line, '\t');
        if (lineno == 1 && to_lower_ascii(cols[0]) == "id") {
            continue;
        }
        if (cols.size() < 3 || cols.size() > 4) {
            throw ParseError(source, lineno,
                             "expected 3 or 4 tab-separated columns, got " + std::to_string(cols.size()));
        }
        Document doc;
        doc.doc_id = std::string(cols[0]);
        if (doc.doc_id.empty()) {
            throw ParseError(source, lineno, "empty document id");
        }
        doc.category = Category::parse(cols[1]);
        doc.title = std::string(cols[2]);
        if (cols.size() == 4) {
            doc.body = std::string(cols[3]);
        }
        detail::add_parsed(corpus, std::move(doc), source, lineno);
    }
    return corpus;
}

inline Corpus ingest_corpus(const std::string& path, std::optional<CorpusFormat> format = std::nullopt)
{
    auto in = open_input(path);
    auto fmt = format.value_or(corpus_format_from_path(path));
    return fmt == CorpusFormat::tsv ? read_corpus_tsv(in, path) : read_corpus_jsonl(in, path);
}

/// Writes the JSONL form read by read_corpus_jsonl.
inline std::string corpus_to_jsonl(const Corpus& corpus)
{
    std::string out;
    for (const auto& doc : corpus.documents()) {
        nlohmann::ordered_json obj;
        obj["id"] = doc.doc_id;
        obj["type"] = doc.category.name();
        obj["title"] = doc.title;
        obj["body"] = doc.body;
        if (!doc.extra.empty()) {
            obj["extra"] = doc.extra;
        }
        out += obj.dump();
        out += '\n';
    }
    return out;
}

}  // namespace rbias
