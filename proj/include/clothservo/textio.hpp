#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clothservo {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t value);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Parsers throw LoadError naming `field` on malformed input.
double parse_double(std::string_view text, std::string_view field);
long long parse_int(std::string_view text, std::string_view field);
std::uint64_t parse_uint64(std::string_view text, std::string_view field);
std::uint64_t parse_hex64(std::string_view text, std::string_view field);

std::vector<std::string_view> split_ws(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace clothservo
