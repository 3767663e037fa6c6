#include "nvmlens/report.hpp"

#include <cstdio>
#include <fstream>

#include "nvmlens/detail/text.hpp"
#include "nvmlens/error.hpp"

namespace nvmlens {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void Report::section(const std::string& name) { body_ += "[" + name + "]\n"; }

void Report::kv(const std::string& key, const std::string& value) {
    body_ += key + ": " + value + "\n";
}

void Report::kv(const std::string& key, const char* value) {
    kv(key, std::string(value));
}

void Report::kv(const std::string& key, double value) { kv(key, fmt_double(value)); }

void Report::kv(const std::string& key, bool value) {
    kv(key, std::string(value ? "true" : "false"));
}

void Report::kv(const std::string& key, std::int64_t value) {
    kv(key, std::to_string(value));
}

void Report::kv(const std::string& key, std::uint64_t value) {
    kv(key, std::to_string(value));
}

void Report::kv(const std::string& key, int value) { kv(key, std::to_string(value)); }

void Report::kv_list(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ' ';
        joined += fmt_double(values[i]);
    }
    kv(key, joined);
}

std::string Report::str() const { return body_; }

void Report::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << body_;
}

std::vector<ReportEntry> parse_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || detail::strip(line) != "nvmlens report v1")
        throw FormatError(path.string() + ": not a nvmlens report");
    std::vector<ReportEntry> entries;
    std::string section;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::strip(line);
        if (t.empty()) continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const auto colon = t.find(':');
        if (colon == std::string::npos)
            throw ParseError("expected 'key: value' or '[section]'", lineno);
        entries.push_back({section, detail::strip(t.substr(0, colon)),
                           detail::strip(t.substr(colon + 1))});
    }
    return entries;
}

} // namespace nvmlens
