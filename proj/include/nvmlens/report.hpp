#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nvmlens {

/// Deterministic double formatting used everywhere a report or data file
/// prints a floating point value.
std::string fmt_double(double v);

/// Structured hierarchical text report: a fixed header line, [section]
/// markers, and `key: value` entries. Array values are space-separated.
class Report {
public:
    void section(const std::string& name);
    void kv(const std::string& key, const std::string& value);
    void kv(const std::string& key, const char* value);
    void kv(const std::string& key, double value);
    void kv(const std::string& key, bool value);
    void kv(const std::string& key, std::int64_t value);
    void kv(const std::string& key, std::uint64_t value);
    void kv(const std::string& key, int value);
    void kv_list(const std::string& key, const std::vector<double>& values);

    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::string body_ = "nvmlens report v1\n";
};

struct ReportEntry {
    std::string section; // empty for entries before the first section
    std::string key;
    std::string value;
};

/// Flat view of a report file, order preserved.
std::vector<ReportEntry> parse_report(const std::filesystem::path& path);

} // namespace nvmlens
