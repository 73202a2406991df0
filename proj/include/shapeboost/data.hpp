#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace shapeboost {

/// Named numeric columns of equal length. Categorical covariates are stored
/// as their integer level ids.
class DataFrame {
public:
    DataFrame() = default;

    void add(std::string name, std::vector<double> values);

    [[nodiscard]] bool has(const std::string& name) const;
    /// Throws InputError naming the column when it is absent.
    [[nodiscard]] const std::vector<double>& column(const std::string& name) const;
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return names_.size(); }

    /// Rows selected by index (duplicates allowed).
    [[nodiscard]] DataFrame subset(const std::vector<std::size_t>& rows) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::size_t rows_ = 0;
};

/// Comma-separated, header row required, '.' decimal separator. A completely
/// empty input yields an empty frame.
DataFrame read_csv(std::istream& in);
DataFrame read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const DataFrame& frame);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

} // namespace shapeboost
