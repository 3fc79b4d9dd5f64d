#include "dvfsopt/text.hpp"

#include "dvfsopt/error.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace dvfsopt::text {

auto format_double(double v) -> std::string
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

auto trim(std::string_view s) -> std::string_view
{
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

auto split(std::string_view line, char sep) -> std::vector<std::string_view>
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

namespace {

template <typename T>
auto parse_number(std::string_view field, std::string_view what, const char* kind) -> T
{
    const auto f = trim(field);
    T v{};
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        throw ParseError(std::string(what) + ": expected " + kind + ", got '" + std::string(f) + "'");
    }
    return v;
}

} // namespace

auto parse_double(std::string_view field, std::string_view what) -> double
{
    const double v = parse_number<double>(field, what, "a number");
    if (!std::isfinite(v)) throw ParseError(std::string(what) + ": value is not finite");
    return v;
}

auto parse_int(std::string_view field, std::string_view what) -> std::int64_t
{
    return parse_number<std::int64_t>(field, what, "an integer");
}

auto parse_u64(std::string_view field, std::string_view what) -> std::uint64_t
{
    return parse_number<std::uint64_t>(field, what, "an unsigned integer");
}

auto fnv1a64(std::string_view data) -> std::uint64_t
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

auto hex64(std::uint64_t v) -> std::string
{
    std::array<char, 17> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + 16, v, 16);
    std::string s(buf.data(), res.ptr);
    return std::string(16 - s.size(), '0') + s;
}

} // namespace dvfsopt::text
