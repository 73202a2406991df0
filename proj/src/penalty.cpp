#include "shapeboost/penalty.hpp"

#include <string>

#include "shapeboost/error.hpp"

namespace shapeboost {

namespace {

std::vector<double> stencil(int order) {
    // (-1)^(d-i) C(d, i), i = 0..d
    std::vector<double> s(static_cast<std::size_t>(order) + 1);
    double c = 1.0;
    for (int i = 0; i <= order; ++i) {
        if (i > 0) c = c * (order - i + 1) / i;
        s[static_cast<std::size_t>(i)] = ((order - i) % 2 == 0) ? c : -c;
    }
    return s;
}

void check_order(const char* what, int n_coef, int order) {
    if (order < 0)
        throw InputError(std::string(what) + ": difference order must be >= 0");
    if (n_coef < 1 || order >= n_coef)
        throw InputError(std::string(what) + ": order " + std::to_string(order) +
                         " needs more than " + std::to_string(order) + " coefficients, got " +
                         std::to_string(n_coef));
}

} // namespace

DiffMatrix diff_matrix(int n_coef, int order) {
    check_order("diff_matrix", n_coef, order);
    const auto s = stencil(order);
    DiffMatrix out;
    out.order = order;
    out.values = Matrix::Zero(n_coef - order, n_coef);
    for (int r = 0; r < n_coef - order; ++r)
        for (int i = 0; i <= order; ++i) out.values(r, r + i) = s[static_cast<std::size_t>(i)];
    return out;
}

DiffMatrix cyclic_diff_matrix(int n_coef, int order) {
    check_order("cyclic_diff_matrix", n_coef, order);
    const auto s = stencil(order);
    DiffMatrix out;
    out.order = order;
    out.cyclic = true;
    out.values = Matrix::Zero(n_coef, n_coef);
    for (int j = 0; j < n_coef; ++j)
        for (int i = 0; i <= order; ++i) {
            const int col = ((j - order + i) % n_coef + n_coef) % n_coef;
            out.values(j, col) += s[static_cast<std::size_t>(i)];
        }
    return out;
}

Matrix quad_penalty(const DiffMatrix& d) { return d.values.transpose() * d.values; }

WeightVector asym_weights(const Vector& beta, const Matrix& d, Direction dir, const Vector& bound) {
    if (beta.size() != d.cols())
        throw InputError("asym_weights: coefficient length " + std::to_string(beta.size()) +
                         " does not match difference matrix with " + std::to_string(d.cols()) +
                         " columns");
    if (bound.size() != 0 && bound.size() != d.rows())
        throw InputError("asym_weights: bound length does not match difference rows");
    Vector diff = d * beta;
    if (bound.size() != 0) diff -= bound;
    WeightVector v(static_cast<std::size_t>(diff.size()));
    for (Eigen::Index r = 0; r < diff.size(); ++r) {
        const bool violated = dir == Direction::increasing ? diff[r] <= 0.0 : diff[r] >= 0.0;
        v[static_cast<std::size_t>(r)] = violated ? 1 : 0;
    }
    return v;
}

WeightVector asym_weights(const Vector& beta, const DiffMatrix& d, Direction dir,
                          const Vector& bound) {
    return asym_weights(beta, d.values, dir, bound);
}

Matrix asym_penalty(const Matrix& d, const WeightVector& v) {
    if (static_cast<Eigen::Index>(v.size()) != d.rows())
        throw InputError("asym_penalty: weight length " + std::to_string(v.size()) +
                         " does not match " + std::to_string(d.rows()) + " difference rows");
    Vector w(d.rows());
    for (Eigen::Index r = 0; r < d.rows(); ++r) w[r] = v[static_cast<std::size_t>(r)];
    return d.transpose() * w.asDiagonal() * d;
}

Matrix asym_penalty(const DiffMatrix& d, const WeightVector& v) { return asym_penalty(d.values, v); }

WeightVector boundary_mask(int n_coef, int order, int n_edge, Sides sides) {
    if (order < 1) throw InputError("boundary_penalty: order must be >= 1");
    check_order("boundary_penalty", n_coef, order);
    if (n_edge < 1 || n_edge > n_coef)
        throw InputError("boundary_penalty: n_edge must be in 1.." + std::to_string(n_coef) +
                         ", got " + std::to_string(n_edge));
    const int rows = n_coef - order;
    WeightVector mask(static_cast<std::size_t>(rows), 0);
    const bool left = sides != Sides::right;
    const bool right = sides != Sides::left;
    for (int r = 0; r < rows; ++r) {
        // Stencil of row r spans columns r .. r+order.
        const bool touches_left = left && r <= n_edge - 1;
        const bool touches_right = right && r + order >= n_coef - n_edge;
        mask[static_cast<std::size_t>(r)] = (touches_left || touches_right) ? 1 : 0;
    }
    return mask;
}

Matrix boundary_penalty(int n_coef, int order, int n_edge, Sides sides) {
    const auto mask = boundary_mask(n_coef, order, n_edge, sides);
    return asym_penalty(diff_matrix(n_coef, order), mask);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix tensor_penalty(const Matrix& k1, const Matrix& k2) {
    if (k1.rows() != k1.cols() || k2.rows() != k2.cols())
        throw InputError("tensor_penalty: penalty factors must be square");
    const Matrix i_first = Matrix::Identity(k1.rows(), k1.rows());
    const Matrix i_second = Matrix::Identity(k2.rows(), k2.rows());
    return kron(k1, i_second) + kron(i_first, k2);
}

Matrix tensor_diff_first(const DiffMatrix& d1, int n_second) {
    return kron(d1.values, Matrix::Identity(n_second, n_second));
}

Matrix tensor_diff_second(int n_first, const DiffMatrix& d2) {
    return kron(Matrix::Identity(n_first, n_first), d2.values);
}

std::pair<Matrix, Matrix> tensor_asym_penalties(const DiffMatrix& d1, const DiffMatrix& d2,
                                                const WeightVector& v1, const WeightVector& v2,
                                                int n_first, int n_second) {
    if (d1.values.cols() != n_first || d2.values.cols() != n_second)
        throw InputError("tensor_asym_penalties: difference matrices do not match the grid");
    const Matrix a = tensor_diff_first(d1, n_second);
    const Matrix b = tensor_diff_second(n_first, d2);
    if (static_cast<Eigen::Index>(v1.size()) != a.rows() ||
        static_cast<Eigen::Index>(v2.size()) != b.rows())
        throw InputError("tensor_asym_penalties: weight lengths must be (J-c)K and J(K-c)");
    return {asym_penalty(a, v1), asym_penalty(b, v2)};
}

Matrix PenaltyBundle::fixed_quadratic(Eigen::Index p) const {
    Matrix q = Matrix::Zero(p, p);
    if (smooth.size() != 0 && lambda != 0.0) q += lambda * smooth;
    if (boundary.size() != 0 && boundary_lambda != 0.0) q += boundary_lambda * boundary;
    return q;
}

} // namespace shapeboost
