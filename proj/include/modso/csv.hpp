#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace modso {

/// Line-oriented CSV writer. Doubles are written in shortest round-trip form,
/// so identical values always produce identical bytes.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::string_view header);

    template <class... Fields>
    void row(const Fields&... fields) {
        std::string line;
        bool first = true;
        ((append(line, fields, first)), ...);
        line.push_back('\n');
        out_ << line;
    }

    void raw_line(std::string_view line) { out_ << line << '\n'; }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    template <class T>
    static void append(std::string& line, const T& value, bool& first) {
        if (!first) line.push_back(',');
        first = false;
        fmt::format_to(std::back_inserter(line), "{}", value);
    }

    std::filesystem::path path_;
    std::ofstream out_;
};

/// Reads a CSV file, skipping the header line. Empty lines are ignored.
std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path);

/// Joins a range of values with commas, formatted like CsvWriter does.
template <class Range>
std::string join_fields(const Range& values) {
    std::string out;
    bool first = true;
    for (const auto& v : values) {
        if (!first) out.push_back(',');
        first = false;
        fmt::format_to(std::back_inserter(out), "{}", v);
    }
    return out;
}

} // namespace modso
