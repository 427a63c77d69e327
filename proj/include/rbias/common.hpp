#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace rbias {

/// Base error for every failure raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file content, carries the 1-based line number.
class ParseError : public Error {
  public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), m_line(line)
    {}

    [[nodiscard]] std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) {
        throw Error("cannot format number");
    }
    return {buf.data(), end};
}

inline std::string format_fixed(double v, int precision)
{
    std::array<char, 128> buf{};
    auto [end, ec] = std::to_chars(
        buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, precision);
    if (ec != std::errc{}) {
        throw Error("cannot format number");
    }
    return {buf.data(), end};
}

inline double parse_double(std::string_view s)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error("not a number: '" + std::string(s) + "'");
    }
    return v;
}

template <typename Int>
Int parse_integer(std::string_view s)
{
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string to_lower_ascii(std::string_view s)
{
    std::string out(s);
    for (auto& ch : out) {
        if (ch >= 'A' && ch <= 'Z') {
            ch = static_cast<char>(ch - 'A' + 'a');
        }
    }
    return out;
}

/// Strips a trailing '\r' so CRLF files read like LF files.
inline std::string_view chomp(std::string_view line)
{
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

/// Quotes a CSV cell when it contains a separator, quote or newline.
inline std::string csv_cell(std::string_view s)
{
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') {
            out += '"';
        }
        out += ch;
    }
    out += '"';
    return out;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path + "' for reading");
    }
    return in;
}

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    out << content;
    if (!out) {
        throw Error("write failed for '" + path + "'");
    }
}

/// SplitMix64-seeded xoshiro256**. The standard library engines are portable
/// but its distributions are not, so all sampling derives from next_double().
class Rng {
  public:
    explicit Rng(std::uint64_t seed)
    {
        for (auto& word : m_state) {
            seed += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = seed;
            z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
            word = z ^ (z >> 31U);
        }
    }

    std::uint64_t next()
    {
        const std::uint64_t result = rotl(m_state[1] * 5, 7) * 9;
        const std::uint64_t t = m_state[1] << 17U;
        m_state[2] ^= m_state[0];
        m_state[3] ^= m_state[1];
        m_state[1] ^= m_state[2];
        m_state[0] ^= m_state[3];
        m_state[2] ^= t;
        m_state[3] = rotl(m_state[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11U) * 0x1.0p-53; }

    /// Uniform in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        const auto v = static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
        return v < n ? v : n - 1;
    }

    /// Standard normal via Box-Muller.
    double normal()
    {
        double u1 = next_double();
        while (u1 <= 0.0) {
            u1 = next_double();
        }
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> m_state{};
};

}  // namespace rbias
