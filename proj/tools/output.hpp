#ifndef LZSIM_OUTPUT_HPP
#define LZSIM_OUTPUT_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lzsim {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

/// Shortest text that round-trips a double: 17 significant digits.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string cell(double x) { return format_double(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(const std::optional<double>& x) { return x ? format_double(*x) : "nan"; }

inline std::string cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline json optional_json(const std::optional<double>& x) {
    if (!x || !std::isfinite(*x)) return nullptr;
    return *x;
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return f;
}

/// CSV with a leading comment line carrying the schema version and the full configuration.
inline void write_csv(const std::filesystem::path& path, const json& config, const Table& t) {
    auto f = open_output(path);
    f << "# lzsim schema=" << schema_version << " config=" << config.dump() << '\n';
    for (std::size_t i = 0; i < t.header.size(); ++i) f << (i ? "," : "") << t.header[i];
    f << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
    auto f = open_output(path);
    f << doc.dump(2) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace lzsim

#endif  // LZSIM_OUTPUT_HPP
