#include "rcf/csv.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace rcf {

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::separator() {
    if (in_row_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double value) {
    separator();
    out_ << format_double(value);
    return *this;
}

CsvWriter& CsvWriter::operator<<(Index value) {
    separator();
    out_ << value;
    return *this;
}

CsvWriter& CsvWriter::operator<<(int value) { return *this << static_cast<Index>(value); }

CsvWriter& CsvWriter::operator<<(const std::string& value) {
    separator();
    out_ << value;
    return *this;
}

void CsvWriter::end_row() {
    if (in_row_ != columns_)
        throw std::logic_error("CsvWriter: row has " + std::to_string(in_row_) + " fields, header has " +
                               std::to_string(columns_));
    out_ << '\n';
    in_row_ = 0;
}

void write_series_csv(const std::filesystem::path& path, const Matrix& values, double dt,
                      const std::string& prefix) {
    std::vector<std::string> header{"t"};
    for (Index i = 0; i < values.rows(); ++i) header.push_back(prefix + std::to_string(i));
    CsvWriter csv(path, header);
    for (Index k = 0; k < values.cols(); ++k) {
        csv << static_cast<double>(k) * dt;
        for (Index i = 0; i < values.rows(); ++i) csv << values(i, k);
        csv.end_row();
    }
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable table;
    std::string line;
    auto split = [](const std::string& text) {
        std::vector<std::string> out;
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    table.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        for (const auto& cell : split(line)) {
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": not a number '" +
                                         cell + "'");
            row.push_back(v);
        }
        if (row.size() != table.header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": wrong number of fields");
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace rcf
