#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cvdp::io {

/// Shortest round-trip-safe text for a double (17 significant digits).
std::string fmt(double v);

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// Line-oriented CSV writer. The first line is always a `# ...` comment.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& comment, const std::vector<std::string>& header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    CsvWriter& cell(double v);
    CsvWriter& cell(long v);
    CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
    CsvWriter& cell(std::string_view v);
    void end_row();
    /// Flushes and throws IoError on any stream failure.
    void close();

private:
    struct Impl;
    Impl* impl_;
};

/// Writes the whole string or throws IoError.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace cvdp::io
