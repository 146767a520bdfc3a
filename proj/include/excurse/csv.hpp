#pragma once

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace excurse {

/// CSV output: one comment line carrying the config hash, a header row, then
/// data rows. Doubles are written in shortest round-trip form.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::string& config_hash, std::vector<std::string> columns);

    CsvWriter& cell(const std::string& v);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(unsigned long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(long v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(unsigned long v) { return cell(static_cast<unsigned long long>(v)); }
    void end_row();

private:
    std::ostream& out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a column; throws IoError when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

}  // namespace excurse
