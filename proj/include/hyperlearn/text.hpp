#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hyperlearn::text {

// Shortest representation that parses back to the same double.
std::string format_real(double v);

std::string_view trim(std::string_view s);

// Splits on `sep`; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char sep);

// Splits on runs of spaces and tabs.
std::vector<std::string_view> fields(std::string_view s);

// Strict whole-field parses; throw InvalidArgument naming `what`.
double parse_real(std::string_view s, std::string_view what);
std::uint64_t parse_uint(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);

template <typename T, typename F>
std::string join(const std::vector<T>& items, char sep, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += fmt(items[i]);
  }
  return out;
}

// 64-bit FNV-1a, used for config fingerprints.
std::uint64_t fnv1a(std::string_view data);

}  // namespace hyperlearn::text
