#include "shapeboost/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shapeboost/error.hpp"

namespace shapeboost {

namespace {

std::string fmt_range(double lo, double hi) {
    std::ostringstream os;
    os.precision(17);
    os << '[' << lo << ", " << hi << ']';
    return os.str();
}

// Non-zero B-splines of degree p on knot span `span` (t[span] <= x < t[span+1]).
// Returns p+1 values for basis indices span-p .. span (de Boor's triangular scheme).
std::vector<double> nonzero_basis(const std::vector<double>& t, std::size_t span, int p, double x) {
    std::vector<double> n(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> right(static_cast<std::size_t>(p) + 1, 0.0);
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        left[uj] = x - t[span + 1 - uj];
        right[uj] = t[span + uj] - x;
        double saved = 0.0;
        for (std::size_t r = 0; r < uj; ++r) {
            const double temp = n[r] / (right[r + 1] + left[uj - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[uj - r] * temp;
        }
        n[uj] = saved;
    }
    return n;
}

// Expanded knot vector. Non-cyclic: equally spaced continuation of the boundary
// intervals. Cyclic: periodic images of the interior breakpoints.
std::vector<double> expand_knots(const KnotGrid& g) {
    const auto d = static_cast<std::size_t>(g.degree);
    const std::size_t m = g.inner.size();
    std::vector<double> t;
    t.reserve(m + 2 + 2 * d);
    if (g.cyclic) {
        const double period = g.period();
        std::vector<double> pts;
        pts.reserve(m + 1);
        pts.push_back(g.lower);
        pts.insert(pts.end(), g.inner.begin(), g.inner.end());
        const std::size_t n_pts = pts.size();
        for (std::size_t k = d; k >= 1; --k) t.push_back(pts[n_pts - k] - period);
        t.insert(t.end(), pts.begin(), pts.end());
        t.push_back(g.upper);
        for (std::size_t k = 1; k <= d; ++k) t.push_back(pts[k] + period);
    } else {
        const double hl = (m == 0 ? g.upper : g.inner.front()) - g.lower;
        const double hr = g.upper - (m == 0 ? g.lower : g.inner.back());
        for (std::size_t k = d; k >= 1; --k) t.push_back(g.lower - static_cast<double>(k) * hl);
        t.push_back(g.lower);
        t.insert(t.end(), g.inner.begin(), g.inner.end());
        t.push_back(g.upper);
        for (std::size_t k = 1; k <= d; ++k) t.push_back(g.upper + static_cast<double>(k) * hr);
    }
    return t;
}

} // namespace

void KnotGrid::validate() const {
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
        throw InputError("knot grid: boundary knots must satisfy lower < upper, got " +
                         fmt_range(lower, upper));
    if (degree < 0 || degree > 3)
        throw InputError("knot grid: degree must be in 0..3, got " + std::to_string(degree));
    if (inner.empty())
        throw InputError("knot grid: at least one inner knot is required");
    if (inner.size() < static_cast<std::size_t>(degree))
        throw InputError("knot grid: need at least `degree` inner knots (" +
                         std::to_string(inner.size()) + " < " + std::to_string(degree) + ")");
    double prev = lower;
    for (double k : inner) {
        if (!std::isfinite(k) || !(k > prev))
            throw InputError("knot grid: inner knots must be strictly increasing inside " +
                             fmt_range(lower, upper));
        prev = k;
    }
    if (!(prev < upper))
        throw InputError("knot grid: inner knots must lie strictly inside " + fmt_range(lower, upper));
}

KnotGrid make_knots(double x_min, double x_max, int n_inner, int degree, bool cyclic) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
        throw InputError("make_knots: need x_min < x_max, got " + fmt_range(x_min, x_max));
    if (n_inner < 1)
        throw InputError("make_knots: n_inner must be >= 1, got " + std::to_string(n_inner));
    KnotGrid g;
    g.lower = x_min;
    g.upper = x_max;
    g.degree = degree;
    g.cyclic = cyclic;
    g.inner.resize(static_cast<std::size_t>(n_inner));
    const double h = (x_max - x_min) / static_cast<double>(n_inner + 1);
    for (int i = 0; i < n_inner; ++i) g.inner[static_cast<std::size_t>(i)] = x_min + h * (i + 1);
    g.validate();
    return g;
}

BasisSpec::BasisSpec(KnotGrid grid) : grid_(std::move(grid)) {
    grid_.validate();
    knots_ = expand_knots(grid_);
    const std::size_t m = grid_.inner.size();
    n_basis_ = grid_.cyclic ? m + 1 : m + static_cast<std::size_t>(grid_.degree) + 1;
}

double BasisSpec::wrap(double x) const {
    if (!grid_.cyclic) return x;
    const double p = grid_.period();
    double r = std::fmod(x - grid_.lower, p);
    if (r < 0.0) r += p;
    if (r >= p) r = 0.0;
    return grid_.lower + r;
}

bool BasisSpec::admits(double x) const {
    if (!std::isfinite(x)) return false;
    return grid_.cyclic || (x >= grid_.lower && x <= grid_.upper);
}

namespace {

std::size_t find_span(const BasisSpec& spec, double x) {
    const auto& t = spec.knots();
    const auto d = static_cast<std::size_t>(spec.degree());
    const std::size_t m = spec.grid().inner.size();
    // Interior spans are d .. d+m; x == upper falls into the last one.
    auto first = t.begin() + static_cast<std::ptrdiff_t>(d);
    auto last = t.begin() + static_cast<std::ptrdiff_t>(d + m + 1);
    auto it = std::upper_bound(first, last, x);
    return static_cast<std::size_t>(it - t.begin()) - 1;
}

double checked_point(const BasisSpec& spec, double x) {
    if (!std::isfinite(x)) throw InputError("basis: non-finite covariate value");
    if (!spec.admits(x)) {
        std::ostringstream os;
        os.precision(17);
        os << "basis: x=" << x << " outside boundary knots "
           << fmt_range(spec.grid().lower, spec.grid().upper);
        throw InputError(os.str());
    }
    return spec.wrap(x);
}

// Folds the expanded ordinary basis onto the cyclic one.
Vector fold(const BasisSpec& spec, const Vector& full) {
    if (!spec.cyclic()) return full;
    const auto n = static_cast<Eigen::Index>(spec.n_basis());
    Vector out = full.head(n);
    for (Eigen::Index j = 0; j < spec.degree(); ++j) out[j] += full[j + n];
    return out;
}

Eigen::Index full_size(const BasisSpec& spec) {
    return static_cast<Eigen::Index>(spec.knots().size()) - spec.degree() - 1;
}

} // namespace

Vector eval_basis(const BasisSpec& spec, double x) {
    const double xw = checked_point(spec, x);
    const int p = spec.degree();
    const std::size_t span = find_span(spec, xw);
    const auto vals = nonzero_basis(spec.knots(), span, p, xw);
    Vector full = Vector::Zero(full_size(spec));
    const auto first = static_cast<Eigen::Index>(span) - p;
    for (int r = 0; r <= p; ++r) full[first + r] = vals[static_cast<std::size_t>(r)];
    return fold(spec, full);
}

Vector eval_basis_derivative(const BasisSpec& spec, double x) {
    const double xw = checked_point(spec, x);
    const int p = spec.degree();
    Vector full = Vector::Zero(full_size(spec));
    if (p == 0) return fold(spec, full);
    const auto& t = spec.knots();
    const std::size_t span = find_span(spec, xw);
    // Degree p-1 values for indices span-p+1 .. span.
    const auto low = nonzero_basis(t, span, p - 1, xw);
    auto lower_val = [&](std::ptrdiff_t j) -> double {
        const std::ptrdiff_t off = j - (static_cast<std::ptrdiff_t>(span) - p + 1);
        if (off < 0 || off >= p) return 0.0;
        return low[static_cast<std::size_t>(off)];
    };
    for (std::ptrdiff_t j = static_cast<std::ptrdiff_t>(span) - p;
         j <= static_cast<std::ptrdiff_t>(span); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const auto up = static_cast<std::size_t>(p);
        double v = 0.0;
        const double den_a = t[uj + up] - t[uj];
        const double den_b = t[uj + up + 1] - t[uj + 1];
        if (den_a > 0.0) v += lower_val(j) / den_a;
        if (den_b > 0.0) v -= lower_val(j + 1) / den_b;
        full[j] = p * v;
    }
    return fold(spec, full);
}

DesignMatrix design(const BasisSpec& spec, std::span<const double> xs) {
    DesignMatrix out;
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto p = static_cast<Eigen::Index>(spec.n_basis());
    out.values = Matrix::Zero(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            out.values.row(i) = eval_basis(spec, xs[static_cast<std::size_t>(i)]).transpose();
        } catch (const InputError& e) {
            throw InputError("row " + std::to_string(i) + ": " + e.what());
        }
    }
    out.column_labels.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) out.column_labels.push_back("B" + std::to_string(j + 1));
    return out;
}

DesignMatrix tensor_design(const DesignMatrix& b1, const DesignMatrix& b2) {
    if (b1.rows() != b2.rows())
        throw InputError("tensor_design: row counts differ (" + std::to_string(b1.rows()) + " vs " +
                         std::to_string(b2.rows()) + ")");
    const Eigen::Index n = b1.rows();
    const Eigen::Index jn = b1.cols();
    const Eigen::Index kn = b2.cols();
    DesignMatrix out;
    out.values.resize(n, jn * kn);
    for (Eigen::Index j = 0; j < jn; ++j)
        for (Eigen::Index k = 0; k < kn; ++k)
            out.values.col(j * kn + k) = b1.values.col(j).cwiseProduct(b2.values.col(k));
    out.column_labels.reserve(static_cast<std::size_t>(jn * kn));
    for (Eigen::Index j = 0; j < jn; ++j)
        for (Eigen::Index k = 0; k < kn; ++k) {
            auto l1 = static_cast<std::size_t>(j) < b1.column_labels.size()
                          ? b1.column_labels[static_cast<std::size_t>(j)]
                          : std::to_string(j + 1);
            auto l2 = static_cast<std::size_t>(k) < b2.column_labels.size()
                          ? b2.column_labels[static_cast<std::size_t>(k)]
                          : std::to_string(k + 1);
            out.column_labels.push_back(l1 + ":" + l2);
        }
    return out;
}

DesignMatrix varying_design(std::span<const double> x, const DesignMatrix& bz) {
    if (static_cast<Eigen::Index>(x.size()) != bz.rows())
        throw InputError("varying_design: length of x (" + std::to_string(x.size()) +
                         ") differs from design rows (" + std::to_string(bz.rows()) + ")");
    DesignMatrix out = bz;
    const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    out.values = xv.asDiagonal() * bz.values;
    return out;
}

DesignMatrix categorical_design(std::span<const int> levels, int n_levels) {
    if (n_levels < 1) throw InputError("categorical_design: need at least one level");
    DesignMatrix out;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(levels.size()), n_levels);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const int id = levels[i];
        if (id < 1 || id > n_levels)
            throw InputError("row " + std::to_string(i) + ": level id " + std::to_string(id) +
                             " outside 1.." + std::to_string(n_levels));
        out.values(static_cast<Eigen::Index>(i), id - 1) = 1.0;
    }
    for (int j = 1; j <= n_levels; ++j) out.column_labels.push_back("level" + std::to_string(j));
    return out;
}

DesignMatrix linear_design(std::span<const std::vector<double>> columns, std::size_t n_rows,
                           bool intercept) {
    const auto n = static_cast<Eigen::Index>(n_rows);
    const auto q = static_cast<Eigen::Index>(columns.size()) + (intercept ? 1 : 0);
    if (q == 0) throw InputError("linear_design: no columns");
    DesignMatrix out;
    out.values.resize(n, q);
    Eigen::Index c = 0;
    if (intercept) {
        out.values.col(c++).setOnes();
        out.column_labels.emplace_back("(intercept)");
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k].size() != n_rows)
            throw InputError("linear_design: column " + std::to_string(k) + " has wrong length");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = columns[k][static_cast<std::size_t>(i)];
            if (!std::isfinite(v))
                throw InputError("row " + std::to_string(i) + ": non-finite covariate value");
            out.values(i, c) = v;
        }
        out.column_labels.push_back("x" + std::to_string(k + 1));
        ++c;
    }
    return out;
}

} // namespace shapeboost
