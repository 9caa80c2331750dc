#pragma once

#include "rcf/types.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace rcf {

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Comma-separated writer with a header row, LF line endings and round-trip
/// precision for doubles.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double value);
    CsvWriter& operator<<(Index value);
    CsvWriter& operator<<(int value);
    CsvWriter& operator<<(const std::string& value);
    CsvWriter& operator<<(const char* value) { return *this << std::string(value); }
    void end_row();

private:
    void separator();

    std::ofstream out_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
};

/// Writes a matrix with one row per column of `values` (time along rows),
/// preceded by a `t` column of k * dt.
void write_series_csv(const std::filesystem::path& path, const Matrix& values, double dt,
                      const std::string& prefix = "u");

/// Reads a numeric CSV with a header row. Returns the header and the rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

} // namespace rcf
