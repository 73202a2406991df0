#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shapeboost {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Knot placement for one covariate.
///
/// `inner` holds the interior knots strictly between `lower` and `upper`.
/// Non-cyclic grids are expanded by `degree` knots beyond each boundary,
/// spaced like the adjacent boundary interval. Cyclic grids carry no
/// expansion of their own; the basis wraps at the boundary knots instead.
struct KnotGrid {
    std::vector<double> inner;
    double lower = 0.0;
    double upper = 1.0;
    int degree = 3;
    bool cyclic = false;

    [[nodiscard]] double period() const noexcept { return upper - lower; }

    /// Throws InputError when the grid violates its invariants.
    void validate() const;

    friend bool operator==(const KnotGrid&, const KnotGrid&) = default;
};

/// Equidistant knot grid with `n_inner` interior knots on [x_min, x_max].
KnotGrid make_knots(double x_min, double x_max, int n_inner, int degree, bool cyclic);

/// A B-spline basis over a validated knot grid.
class BasisSpec {
public:
    explicit BasisSpec(KnotGrid grid);

    [[nodiscard]] const KnotGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] int degree() const noexcept { return grid_.degree; }
    [[nodiscard]] bool cyclic() const noexcept { return grid_.cyclic; }

    /// Number of basis functions: |inner| + degree + 1, or |inner| + 1 when cyclic.
    [[nodiscard]] std::size_t n_basis() const noexcept { return n_basis_; }

    /// Knot vector used for evaluation, including the boundary expansion
    /// (periodic images of the interior knots for cyclic grids).
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

    /// Maps x into [lower, upper) for cyclic grids; identity otherwise.
    [[nodiscard]] double wrap(double x) const;

    /// True if eval_basis accepts x.
    [[nodiscard]] bool admits(double x) const;

private:
    KnotGrid grid_;
    std::vector<double> knots_;
    std::size_t n_basis_ = 0;
};

/// All basis function values at x. Cyclic specs wrap x into the period;
/// non-cyclic specs reject x outside [lower, upper].
Vector eval_basis(const BasisSpec& spec, double x);

/// First derivative of every basis function at x (same domain rules).
Vector eval_basis_derivative(const BasisSpec& spec, double x);

/// Dense design: rows are observations, columns basis functions.
struct DesignMatrix {
    Matrix values;
    std::vector<std::string> column_labels;

    [[nodiscard]] Eigen::Index rows() const noexcept { return values.rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return values.cols(); }
};

DesignMatrix design(const BasisSpec& spec, std::span<const double> xs);

/// Row-wise Kronecker product: entry (i, j*K + k) = B1(i, j) * B2(i, k).
DesignMatrix tensor_design(const DesignMatrix& b1, const DesignMatrix& b2);

/// Row i of the result is x[i] * bz.row(i).
DesignMatrix varying_design(std::span<const double> x, const DesignMatrix& bz);

/// One-hot coding of level ids 1..n_levels.
DesignMatrix categorical_design(std::span<const int> levels, int n_levels);

/// Columns [1, x_1, ..., x_q] (the leading column only when `intercept`).
DesignMatrix linear_design(std::span<const std::vector<double>> columns, std::size_t n_rows,
                           bool intercept);

} // namespace shapeboost
