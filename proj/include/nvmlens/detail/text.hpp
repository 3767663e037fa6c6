#pragma once

#include <charconv>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "nvmlens/error.hpp"

namespace nvmlens::detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_num(const std::string& field, std::size_t line = 0) {
    const std::string t = strip(field);
    T value{};
    const char* first = t.data();
    const char* last = t.data() + t.size();
    std::from_chars_result r{};
    if constexpr (std::is_floating_point_v<T>)
        r = std::from_chars(first, last, value);
    else
        r = std::from_chars(first, last, value, 10);
    if (r.ec != std::errc() || r.ptr != last)
        throw ParseError("bad numeric field '" + t + "'", line);
    return value;
}

/// Parses "key=value key=value ..." option groups used by the workload schema.
inline std::vector<std::pair<std::string, std::string>> parse_pairs(
    const std::string& s, std::size_t line = 0) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value, got '" + tok + "'", line);
        out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return out;
}

} // namespace nvmlens::detail
