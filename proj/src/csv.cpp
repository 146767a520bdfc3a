#include "excurse/csv.hpp"

#include <fstream>
#include <sstream>

#include "excurse/error.hpp"
#include "excurse/grid.hpp"

namespace excurse {

CsvWriter::CsvWriter(std::ostream& out, const std::string& config_hash, std::vector<std::string> columns)
    : out_(out), columns_(columns.size()) {
    out_ << "# config-hash: " << config_hash << '\n';
    for (std::size_t k = 0; k < columns.size(); ++k) out_ << (k ? "," : "") << columns[k];
    out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    if (filled_ >= columns_) throw Error("csv: too many cells in row");
    out_ << (filled_++ ? "," : "") << v;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(unsigned long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    if (filled_ != columns_) throw Error("csv: incomplete row");
    out_ << '\n';
    filled_ = 0;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return k;
    throw IoError("csv: missing column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    bool have_header = false;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line == "\r") continue;
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        auto cells = split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != t.header.size()) throw IoError("csv: row width does not match header");
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw IoError("csv: missing header row");
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace excurse
