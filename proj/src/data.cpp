#include "shapeboost/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "shapeboost/error.hpp"

namespace shapeboost {

void DataFrame::add(std::string name, std::vector<double> values) {
    if (has(name)) throw InputError("duplicate column '" + name + "'");
    if (!names_.empty() && values.size() != rows_)
        throw InputError("column '" + name + "' has " + std::to_string(values.size()) +
                         " rows, expected " + std::to_string(rows_));
    rows_ = values.size();
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

bool DataFrame::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& DataFrame::column(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InputError("missing column '" + name + "'");
    return columns_[static_cast<std::size_t>(it - names_.begin())];
}

DataFrame DataFrame::subset(const std::vector<std::size_t>& rows) const {
    DataFrame out;
    for (std::size_t c = 0; c < names_.size(); ++c) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (auto r : rows) v.push_back(columns_[c].at(r));
        out.add(names_[c], std::move(v));
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& col) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != last)
        throw InputError("line " + std::to_string(line_no) + ", column '" + col +
                         "': cannot parse '" + s + "' as a number");
    return v;
}

} // namespace

DataFrame read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    DataFrame frame;
    if (header.empty()) return frame;
    for (const auto& h : header)
        if (h.empty()) throw InputError("line " + std::to_string(line_no) + ": empty column name");
    std::vector<std::vector<double>> cols(header.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c)
            cols[c].push_back(parse_number(fields[c], line_no, header[c]));
    }
    for (std::size_t c = 0; c < header.size(); ++c) frame.add(header[c], std::move(cols[c]));
    return frame;
}

DataFrame read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_csv(in);
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_csv(std::ostream& out, const DataFrame& frame) {
    const auto& names = frame.names();
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    if (!names.empty()) out << '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        for (std::size_t c = 0; c < names.size(); ++c)
            out << (c ? "," : "") << format_double(frame.column(names[c])[r]);
        out << '\n';
    }
}

} // namespace shapeboost
