#ifndef DVFSOPT_TEXT_HPP
#define DVFSOPT_TEXT_HPP

// Small helpers shared by the CSV readers and writers.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dvfsopt::text {

/// Shortest decimal representation that round-trips exactly.
auto format_double(double v) -> std::string;

auto trim(std::string_view s) -> std::string_view;
auto split(std::string_view line, char sep = ',') -> std::vector<std::string_view>;

/// Strict parsers: the whole (trimmed) field must be consumed. `what` names
/// the field in the ParseError message.
auto parse_double(std::string_view field, std::string_view what) -> double;
auto parse_int(std::string_view field, std::string_view what) -> std::int64_t;
auto parse_u64(std::string_view field, std::string_view what) -> std::uint64_t;

/// FNV-1a, used for config digests in output headers.
auto fnv1a64(std::string_view data) -> std::uint64_t;
auto hex64(std::uint64_t v) -> std::string;

} // namespace dvfsopt::text

#endif
