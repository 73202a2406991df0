#include "shapeboost/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "shapeboost/error.hpp"
#include "shapeboost/log.hpp"

namespace shapeboost {

namespace {

constexpr std::array<std::pair<LearnerKind, std::string_view>, 8> kKindNames{{
    {LearnerKind::linear, "linear"},
    {LearnerKind::categorical_ridge, "categorical-ridge"},
    {LearnerKind::pspline, "pspline"},
    {LearnerKind::cyclic_pspline, "cyclic-pspline"},
    {LearnerKind::monotone_pspline, "monotone-pspline"},
    {LearnerKind::boundary_pspline, "boundary-pspline"},
    {LearnerKind::tensor, "tensor"},
    {LearnerKind::varying, "varying"},
}};

constexpr std::array<std::pair<Constraint, std::string_view>, 9> kConstraintNames{{
    {Constraint::none, "none"},
    {Constraint::increasing, "increasing"},
    {Constraint::decreasing, "decreasing"},
    {Constraint::convex, "convex"},
    {Constraint::concave, "concave"},
    {Constraint::cyclic, "cyclic"},
    {Constraint::positive, "positive"},
    {Constraint::negative, "negative"},
    {Constraint::bounded, "bounded"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
    for (const auto& [k, v] : table)
        if (k == e) return v;
    return "?";
}

template <typename E, std::size_t N>
E parse_name(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s,
             const char* what) {
    for (const auto& [k, v] : table)
        if (v == s) return k;
    throw InputError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

bool is_spline_kind(LearnerKind k) {
    return k == LearnerKind::pspline || k == LearnerKind::cyclic_pspline ||
           k == LearnerKind::monotone_pspline || k == LearnerKind::boundary_pspline;
}

bool is_shape(Constraint c) {
    return c == Constraint::increasing || c == Constraint::decreasing || c == Constraint::convex ||
           c == Constraint::concave;
}

bool is_codomain(Constraint c) {
    return c == Constraint::positive || c == Constraint::negative || c == Constraint::bounded;
}

std::size_t expected_margins(LearnerKind k) {
    if (k == LearnerKind::tensor) return 2;
    if (is_spline_kind(k) || k == LearnerKind::varying) return 1;
    return 0;
}

Matrix margin_penalty(const BasisSpec& basis, const MarginSpec& m) {
    const int j = static_cast<int>(basis.n_basis());
    const DiffMatrix d = basis.cyclic() ? cyclic_diff_matrix(j, m.diff_order) : diff_matrix(j, m.diff_order);
    return quad_penalty(d);
}

// Constraint rows for one margin, before any Kronecker expansion.
std::vector<AsymTerm> margin_terms(int j, const MarginSpec& m) {
    std::vector<AsymTerm> out;
    auto make = [&](const Matrix& d, Direction dir, double bound, bool coef) {
        AsymTerm t;
        t.d = d;
        t.direction = dir;
        t.lambda = m.constraint_lambda;
        t.on_coefficients = coef;
        if (bound != 0.0) t.bound = Vector::Constant(d.rows(), bound);
        out.push_back(std::move(t));
    };
    switch (m.constraint) {
    case Constraint::increasing: make(diff_matrix(j, 1).values, Direction::increasing, 0.0, false); break;
    case Constraint::decreasing: make(diff_matrix(j, 1).values, Direction::decreasing, 0.0, false); break;
    case Constraint::convex: make(diff_matrix(j, 2).values, Direction::increasing, 0.0, false); break;
    case Constraint::concave: make(diff_matrix(j, 2).values, Direction::decreasing, 0.0, false); break;
    case Constraint::positive: make(Matrix::Identity(j, j), Direction::increasing, 0.0, true); break;
    case Constraint::negative: make(Matrix::Identity(j, j), Direction::decreasing, 0.0, true); break;
    case Constraint::bounded:
        make(Matrix::Identity(j, j), Direction::increasing, m.lo, true);
        make(Matrix::Identity(j, j), Direction::decreasing, m.hi, true);
        break;
    case Constraint::none:
    case Constraint::cyclic: break;
    }
    return out;
}

std::vector<int> level_ids(const std::vector<double>& col, const std::string& name) {
    std::vector<int> ids(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        const double v = col[i];
        if (!std::isfinite(v) || v != std::floor(v))
            throw InputError("row " + std::to_string(i) + ": column '" + name +
                             "' must hold integer level ids");
        ids[i] = static_cast<int>(v);
    }
    return ids;
}

} // namespace

std::string_view to_string(LearnerKind k) { return name_of(kKindNames, k); }
std::string_view to_string(Constraint c) { return name_of(kConstraintNames, c); }
std::string_view to_string(SolverChoice s) { return s == SolverChoice::qp ? "qp" : "iterative"; }
std::string_view to_string(Sides s) {
    return s == Sides::left ? "left" : s == Sides::right ? "right" : "both";
}
LearnerKind parse_learner_kind(std::string_view s) { return parse_name(kKindNames, s, "learner kind"); }
Constraint parse_constraint(std::string_view s) { return parse_name(kConstraintNames, s, "constraint"); }
SolverChoice parse_solver(std::string_view s) {
    if (s == "qp") return SolverChoice::qp;
    if (s == "iterative") return SolverChoice::iterative;
    throw InputError("unknown solver '" + std::string(s) + "'");
}
Sides parse_sides(std::string_view s) {
    if (s == "left") return Sides::left;
    if (s == "right") return Sides::right;
    if (s == "both") return Sides::both;
    throw InputError("unknown boundary side '" + std::string(s) + "'");
}

void LearnerSpec::validate() const {
    const std::string who = "learner '" + name + "': ";
    const std::size_t n_cov = covariates.size();
    switch (kind) {
    case LearnerKind::linear:
        if (n_cov < 1) throw InputError(who + "linear learners need at least one covariate");
        break;
    case LearnerKind::categorical_ridge:
    case LearnerKind::pspline:
    case LearnerKind::cyclic_pspline:
    case LearnerKind::monotone_pspline:
    case LearnerKind::boundary_pspline:
        if (n_cov != 1) throw InputError(who + std::string(to_string(kind)) + " needs exactly one covariate");
        break;
    case LearnerKind::tensor:
    case LearnerKind::varying:
        if (n_cov != 2) throw InputError(who + std::string(to_string(kind)) + " needs exactly two covariates");
        break;
    }
    if (margins.size() != expected_margins(kind))
        throw InputError(who + "expected " + std::to_string(expected_margins(kind)) +
                         " spline margins, got " + std::to_string(margins.size()));
    if (!(target_df > 0.0)) throw InputError(who + "target df must be positive");

    for (const auto& m : margins) {
        if (m.degree < 0 || m.degree > 3) throw InputError(who + "degree must be in 0..3");
        if (m.n_inner < std::max(1, m.degree))
            throw InputError(who + "need at least max(1, degree) inner knots");
        if (m.diff_order < 0) throw InputError(who + "difference order must be >= 0");
        if (m.constraint_lambda < 0.0) throw InputError(who + "constraint lambda must be >= 0");
        if (m.constraint == Constraint::bounded && !(m.lo < m.hi))
            throw InputError(who + "bounded constraint requires lo < hi");
        if (m.range && !(m.range->first < m.range->second))
            throw InputError(who + "range requires lower < upper");
    }

    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) throw InputError(who + msg);
    };
    switch (kind) {
    case LearnerKind::pspline:
        require(margins[0].constraint == Constraint::none,
                "pspline learners take no constraint; use monotone-pspline or cyclic-pspline");
        break;
    case LearnerKind::cyclic_pspline:
        require(margins[0].constraint == Constraint::cyclic,
                "cyclic-pspline requires the cyclic constraint");
        break;
    case LearnerKind::monotone_pspline:
        require(is_shape(margins[0].constraint) || is_codomain(margins[0].constraint),
                "monotone-pspline requires increasing, decreasing, convex, concave, positive, "
                "negative or bounded");
        break;
    case LearnerKind::boundary_pspline:
        require(margins[0].constraint == Constraint::none || is_shape(margins[0].constraint) ||
                    is_codomain(margins[0].constraint),
                "boundary-pspline cannot be cyclic");
        require(boundary.has_value(), "boundary-pspline needs a boundary specification");
        break;
    case LearnerKind::tensor:
        for (const auto& m : margins)
            require(m.constraint == Constraint::none || m.constraint == Constraint::cyclic ||
                        is_shape(m.constraint),
                    "tensor directions accept none, cyclic, increasing, decreasing, convex or concave");
        break;
    case LearnerKind::varying:
    case LearnerKind::linear:
    case LearnerKind::categorical_ridge: break;
    }
    if (boundary) {
        require(is_spline_kind(kind), "boundary penalties apply to univariate spline learners only");
        require(margins[0].constraint != Constraint::cyclic, "cyclic learners cannot carry boundary penalties");
        require(boundary->order >= 1, "boundary order must be >= 1");
        require(boundary->n_edge >= 1, "boundary n_edge must be >= 1");
        require(boundary->lambda >= 0.0, "boundary lambda must be >= 0");
    }
    if (hard_bounds) {
        bool any = false;
        for (const auto& m : margins) any = any || is_codomain(m.constraint);
        require(any, "hard_bounds needs a positive, negative or bounded constraint");
    }
    if (kind == LearnerKind::categorical_ridge && n_levels < 0)
        throw InputError(who + "n_levels must be >= 0");
}

bool LearnerSpec::resolved() const {
    if (kind == LearnerKind::categorical_ridge && n_levels < 1) return false;
    for (const auto& m : margins)
        if (!m.grid) return false;
    return true;
}

LearnerBlueprint::LearnerBlueprint(LearnerSpec spec) : spec_(std::move(spec)) {}

std::shared_ptr<const LearnerBlueprint> LearnerBlueprint::build(LearnerSpec spec, const DataFrame& data) {
    spec.validate();
    const std::string who = "learner '" + spec.name + "': ";
    for (const auto& c : spec.covariates) (void)data.column(c);

    // Spline covariates: the last one for varying learners, all otherwise.
    const std::size_t first_spline = spec.kind == LearnerKind::varying ? 1 : 0;
    for (std::size_t m = 0; m < spec.margins.size(); ++m) {
        auto& margin = spec.margins[m];
        if (margin.grid) continue;
        const auto& name = spec.covariates[first_spline + m];
        const auto& xs = data.column(name);
        double lo = 0.0;
        double hi = 0.0;
        if (margin.range) {
            lo = margin.range->first;
            hi = margin.range->second;
        } else {
            if (xs.empty()) throw InputError(who + "cannot place knots without data for '" + name + "'");
            const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
            lo = *mn;
            hi = *mx;
            if (!std::isfinite(lo) || !std::isfinite(hi))
                throw InputError(who + "covariate '" + name + "' has non-finite values");
            if (!(lo < hi)) throw InputError(who + "covariate '" + name + "' is constant");
        }
        margin.grid = make_knots(lo, hi, margin.n_inner, margin.degree,
                                 margin.constraint == Constraint::cyclic);
    }
    if (spec.kind == LearnerKind::categorical_ridge && spec.n_levels == 0) {
        const auto ids = level_ids(data.column(spec.covariates[0]), spec.covariates[0]);
        int mx = 0;
        for (int id : ids) mx = std::max(mx, id);
        if (mx < 1) throw InputError(who + "no positive level ids");
        spec.n_levels = mx;
    }
    spec.center.clear();

    auto bp = std::shared_ptr<LearnerBlueprint>(new LearnerBlueprint(std::move(spec)));
    bp->setup_structure();
    bp->design_.values = bp->design_for(data);
    const Matrix& b = bp->design_.values;
    bp->spec_.center.resize(static_cast<std::size_t>(b.cols()));
    if (b.rows() > 0) {
        const Vector means = b.colwise().mean().transpose();
        for (Eigen::Index j = 0; j < b.cols(); ++j) bp->spec_.center[static_cast<std::size_t>(j)] = means[j];
    } else {
        std::fill(bp->spec_.center.begin(), bp->spec_.center.end(), 0.0);
    }
    return bp;
}

std::shared_ptr<const LearnerBlueprint> LearnerBlueprint::from_resolved(LearnerSpec spec) {
    spec.validate();
    if (!spec.resolved())
        throw InputError("learner '" + spec.name + "': specification carries no resolved knots/levels");
    auto bp = std::shared_ptr<LearnerBlueprint>(new LearnerBlueprint(std::move(spec)));
    bp->setup_structure();
    if (!bp->spec_.center.empty() && static_cast<Eigen::Index>(bp->spec_.center.size()) != bp->n_coef_)
        throw InputError("learner '" + bp->spec_.name + "': centering vector has wrong length");
    return bp;
}

void LearnerBlueprint::setup_structure() {
    bases_.clear();
    for (const auto& m : spec_.margins) bases_.emplace_back(*m.grid);

    switch (spec_.kind) {
    case LearnerKind::linear:
        n_coef_ = static_cast<Eigen::Index>(spec_.covariates.size()) + (spec_.intercept ? 1 : 0);
        break;
    case LearnerKind::categorical_ridge:
        n_coef_ = spec_.n_levels;
        smooth_ = Matrix::Identity(n_coef_, n_coef_);
        break;
    case LearnerKind::tensor: {
        const auto j = static_cast<int>(bases_[0].n_basis());
        const auto k = static_cast<int>(bases_[1].n_basis());
        n_coef_ = static_cast<Eigen::Index>(j) * k;
        smooth_ = tensor_penalty(margin_penalty(bases_[0], spec_.margins[0]),
                                 margin_penalty(bases_[1], spec_.margins[1]));
        for (auto t : margin_terms(j, spec_.margins[0])) {
            t.d = kron(t.d, Matrix::Identity(k, k));
            terms_.push_back(std::move(t));
        }
        for (auto t : margin_terms(k, spec_.margins[1])) {
            t.d = kron(Matrix::Identity(j, j), t.d);
            terms_.push_back(std::move(t));
        }
        break;
    }
    default: {
        const auto j = static_cast<int>(bases_[0].n_basis());
        n_coef_ = j;
        smooth_ = margin_penalty(bases_[0], spec_.margins[0]);
        terms_ = margin_terms(j, spec_.margins[0]);
        if (spec_.boundary) {
            const auto& bs = *spec_.boundary;
            boundary_ = shapeboost::boundary_penalty(j, bs.order, bs.n_edge, bs.sides);
        }
        break;
    }
    }
}

Matrix LearnerBlueprint::margin_rows(std::size_t m, std::span<const double> xs) const {
    const BasisSpec& basis = bases_[m];
    const bool extrapolate = spec_.boundary.has_value() && !basis.cyclic();
    if (!extrapolate) return shapeboost::design(basis, xs).values;
    const double lo = basis.grid().lower;
    const double hi = basis.grid().upper;
    Matrix out(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(basis.n_basis()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const auto row = static_cast<Eigen::Index>(i);
        if (!std::isfinite(x)) throw InputError("row " + std::to_string(i) + ": non-finite covariate value");
        if (x < lo) {
            out.row(row) = (eval_basis(basis, lo) + (x - lo) * eval_basis_derivative(basis, lo)).transpose();
        } else if (x > hi) {
            out.row(row) = (eval_basis(basis, hi) + (x - hi) * eval_basis_derivative(basis, hi)).transpose();
        } else {
            out.row(row) = eval_basis(basis, x).transpose();
        }
    }
    return out;
}

Matrix LearnerBlueprint::design_for(const DataFrame& data) const {
    const std::string who = "learner '" + spec_.name + "': ";
    const std::size_t n = data.rows();
    try {
        switch (spec_.kind) {
        case LearnerKind::linear: {
            std::vector<std::vector<double>> cols;
            for (const auto& c : spec_.covariates) cols.push_back(data.column(c));
            return linear_design(cols, n, spec_.intercept).values;
        }
        case LearnerKind::categorical_ridge: {
            const auto ids = level_ids(data.column(spec_.covariates[0]), spec_.covariates[0]);
            return categorical_design(ids, spec_.n_levels).values;
        }
        case LearnerKind::tensor: {
            DesignMatrix b1{margin_rows(0, data.column(spec_.covariates[0])), {}};
            DesignMatrix b2{margin_rows(1, data.column(spec_.covariates[1])), {}};
            return tensor_design(b1, b2).values;
        }
        case LearnerKind::varying: {
            const auto& x = data.column(spec_.covariates[0]);
            DesignMatrix bz{margin_rows(0, data.column(spec_.covariates[1])), {}};
            return varying_design(x, bz).values;
        }
        default: return margin_rows(0, data.column(spec_.covariates[0]));
        }
    } catch (const InputError& e) {
        throw InputError(who + e.what());
    }
}

Vector LearnerBlueprint::centered(const Matrix& rows, const Vector& beta) const {
    Vector f = rows * beta;
    if (!spec_.center.empty()) {
        const Eigen::Map<const Vector> c(spec_.center.data(), static_cast<Eigen::Index>(spec_.center.size()));
        f.array() -= c.dot(beta);
    }
    return f;
}

BaseLearner::BaseLearner(std::shared_ptr<const LearnerBlueprint> blueprint, Vector weights, int id)
    : bp_(std::move(blueprint)), weights_(std::move(weights)), id_(id) {
    const Matrix& b = bp_->design();
    const auto& spec = bp_->spec();
    if (weights_.size() != 0 && weights_.size() != b.rows())
        throw InputError("learner '" + spec.name + "': weights length does not match data rows");

    bundle_.smooth = bp_->smooth_penalty();
    bundle_.asym = bp_->constraint_terms();
    bundle_.boundary = bp_->boundary_penalty();
    if (spec.boundary) bundle_.boundary_lambda = spec.boundary->lambda;

    if (bundle_.smooth.size() != 0) {
        const Matrix gram = weights_.size() == 0 ? Matrix(b.transpose() * b)
                                                 : Matrix(b.transpose() * weights_.asDiagonal() * b);
        try {
            calibration_ = calibrate_lambda_gram(gram, bundle_.smooth, spec.target_df);
        } catch (const InputError& e) {
            throw InputError("learner '" + spec.name + "': " + e.what());
        }
        if (calibration_.capped)
            warn("learner '" + spec.name + "': target df " + std::to_string(spec.target_df) +
                 " sits at the penalty null space; lambda capped at 1e12");
    } else {
        calibration_ = {0.0, static_cast<double>(bp_->n_coef()), false};
    }
    bundle_.lambda = calibration_.lambda;
    system_ = NormalSystem(b, weights_, bundle_.fixed_quadratic(bp_->n_coef()));
}

FittedComponent BaseLearner::fit(const Vector& u) {
    return fit(u, Vector::Zero(bp_->n_coef()), 1.0);
}

FittedComponent BaseLearner::fit(const Vector& u, const Vector& accumulated, double step) {
    const Matrix& b = bp_->design();
    const Vector rhs = weighted_crossprod(b, weights_, u);
    FittedComponent out;
    out.learner_id = id_;
    if (!bp_->constrained()) {
        out.beta = system_.solve(rhs);
    } else {
        std::vector<AsymTerm> terms = bundle_.asym;
        if (bp_->spec().hard_bounds) {
            if (accumulated.size() != bp_->n_coef() || !(step > 0.0))
                throw InputError("learner '" + bp_->spec().name + "': hard bounds need the accumulator");
            for (auto& t : terms)
                if (t.on_coefficients) t.bound = (t.bound_or_zero() - t.d * accumulated) / step;
        }
        SolveReport rep;
        if (bp_->spec().solver == SolverChoice::qp) {
            QPOptions opts;
            opts.warm_start = warm_active_;
            rep = solve_qp_dense(system_, rhs, constraints_from_terms(terms), opts);
            warm_active_ = rep.active_set;
        } else {
            rep = solve_asym_iterative(system_, rhs, terms);
        }
        if (!rep.converged)
            throw NumericalError("learner '" + bp_->spec().name + "': constrained solver did not converge");
        out.beta = std::move(rep.beta);
    }
    if (!out.beta.allFinite())
        throw NumericalError("learner '" + bp_->spec().name + "': non-finite coefficients");
    out.fitted = b * out.beta;
    const Vector res = u - out.fitted;
    out.rss = weights_.size() == 0 ? res.squaredNorm() : weights_.dot(res.cwiseAbs2());
    return out;
}

CoefficientStore::CoefficientStore(const std::vector<Eigen::Index>& sizes) {
    beta.reserve(sizes.size());
    for (auto s : sizes) beta.push_back(Vector::Zero(s));
}

void CoefficientStore::add(std::size_t learner, double step, const Vector& increment) {
    beta.at(learner) += step * increment;
}

} // namespace shapeboost
