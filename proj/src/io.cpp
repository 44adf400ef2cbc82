#include "cvdp/io.hpp"

#include "cvdp/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cvdp::io {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct CsvWriter::Impl {
    std::ofstream out;
    std::string path;
    bool first_cell = true;
};

CsvWriter::CsvWriter(const std::string& path, const std::string& comment, const std::vector<std::string>& header)
    : impl_(new Impl) {
    impl_->path = path;
    impl_->out.open(path, std::ios::out | std::ios::trunc);
    if (!impl_->out) {
        delete impl_;
        throw IoError("cannot open '" + path + "' for writing");
    }
    impl_->out << "# " << comment << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) impl_->out << (i ? "," : "") << header[i];
    impl_->out << '\n';
}

CsvWriter::~CsvWriter() { delete impl_; }

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(fmt(v))); }

CsvWriter& CsvWriter::cell(long v) { return cell(std::string_view(std::to_string(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
    if (!impl_->first_cell) impl_->out << ',';
    impl_->out << v;
    impl_->first_cell = false;
    return *this;
}

void CsvWriter::end_row() {
    impl_->out << '\n';
    impl_->first_cell = true;
}

void CsvWriter::close() {
    impl_->out.flush();
    if (!impl_->out) throw IoError("write failed for '" + impl_->path + "'");
    impl_->out.close();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace cvdp::io
