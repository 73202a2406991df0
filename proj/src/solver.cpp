#include "shapeboost/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "shapeboost/error.hpp"

namespace shapeboost {

double ridge_jitter(const Matrix& gram) {
    const auto p = gram.rows();
    if (p == 0) return 0.0;
    const double tr = gram.trace();
    return 1e-10 * (tr > 0.0 ? tr / static_cast<double>(p) : 1.0);
}

Vector weighted_crossprod(const Matrix& design, const Vector& weights, const Vector& u) {
    if (u.size() != design.rows())
        throw InputError("response length " + std::to_string(u.size()) +
                         " does not match design rows " + std::to_string(design.rows()));
    if (weights.size() == 0) return design.transpose() * u;
    return design.transpose() * weights.cwiseProduct(u);
}

NormalSystem::NormalSystem(const Matrix& design, const Vector& weights, const Matrix& fixed_penalty) {
    if (weights.size() != 0 && weights.size() != design.rows())
        throw InputError("weights length does not match design rows");
    if (weights.size() == 0)
        gram_ = design.transpose() * design;
    else
        gram_ = design.transpose() * weights.asDiagonal() * design;
    jitter_ = ridge_jitter(gram_);
    hessian_ = gram_;
    if (fixed_penalty.size() != 0) {
        if (fixed_penalty.rows() != gram_.rows() || fixed_penalty.cols() != gram_.cols())
            throw InputError("penalty dimension does not match design columns");
        hessian_ += fixed_penalty;
    }
    hessian_.diagonal().array() += jitter_;
    llt_.compute(hessian_);
    if (llt_.info() != Eigen::Success)
        throw NumericalError("penalized normal equations are not positive definite");
    const auto p = hessian_.rows();
    inverse_factor_ = Matrix(llt_.matrixU()).triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
}

Vector NormalSystem::solve(const Vector& rhs) const { return llt_.solve(rhs); }

SolveReport solve_pls(const PLSProblem& prob) {
    const NormalSystem sys(prob.design, prob.weights, prob.bundle.fixed_quadratic(prob.design.cols()));
    SolveReport rep;
    rep.beta = sys.solve(weighted_crossprod(prob.design, prob.weights, prob.u));
    if (!rep.beta.allFinite()) throw NumericalError("solve_pls: non-finite solution");
    rep.iterations = 1;
    rep.converged = true;
    return rep;
}

double degrees_of_freedom(const Matrix& gram, const Matrix& penalty, double lambda) {
    Matrix h = gram;
    if (penalty.size() != 0) h += lambda * penalty;
    h.diagonal().array() += ridge_jitter(gram);
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success)
        throw NumericalError("degrees_of_freedom: system not positive definite");
    return llt.solve(gram).trace();
}

namespace {

// Demmler-Reinsch form of df(lambda): with M = G + jitter I = L L^T and
// L^-1 K L^-T = U diag(e) U^T, df(lambda) = sum_i c_i / (1 + lambda e_i).
struct DfCurve {
    Vector e;
    Vector c;
    double null_dim = 0.0;

    double operator()(double lambda) const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < e.size(); ++i) s += c[i] / (1.0 + lambda * e[i]);
        return s;
    }
};

DfCurve make_df_curve(const Matrix& gram, const Matrix& penalty) {
    const Eigen::Index p = gram.rows();
    const double jit = ridge_jitter(gram);
    Matrix m = gram;
    m.diagonal().array() += jit;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("calibrate_lambda: Gram matrix not definite");
    const Matrix linv = llt.matrixL().solve(Matrix::Identity(p, p));
    const Matrix k = penalty.size() == 0 ? Matrix::Zero(p, p) : penalty;
    const Matrix s = linv * k * linv.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("calibrate_lambda: eigensolver failed");
    DfCurve curve;
    curve.e = eig.eigenvalues().cwiseMax(0.0);
    const Matrix w = eig.eigenvectors().transpose() * linv;
    curve.c = (Vector::Ones(p) - jit * w.rowwise().squaredNorm());
    if (penalty.size() != 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> keig(0.5 * (k + k.transpose()), Eigen::EigenvaluesOnly);
        const Vector kv = keig.eigenvalues();
        const double kmax = kv.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < p; ++i)
            if (kv[i] <= 1e-10 * std::max(kmax, 1e-300)) curve.null_dim += 1.0;
    } else {
        curve.null_dim = static_cast<double>(p);
    }
    return curve;
}

} // namespace

LambdaCalibration calibrate_lambda_gram(const Matrix& gram, const Matrix& penalty, double target_df) {
    if (!std::isfinite(target_df) || target_df <= 0.0)
        throw InputError("calibrate_lambda: target df must be positive");
    const DfCurve df = make_df_curve(gram, penalty);
    const double df_max = df(0.0);
    if (target_df > df_max + kDfTolerance)
        throw InputError("calibrate_lambda: target df " + std::to_string(target_df) +
                         " exceeds the attainable maximum " + std::to_string(df_max));
    if (std::abs(target_df - df_max) <= kDfTolerance) return {0.0, df_max, false};
    const double df_cap = df(kMaxLambda);
    if (target_df <= df_cap + kDfTolerance) {
        if (target_df < df.null_dim - kDfTolerance)
            throw InputError("calibrate_lambda: target df " + std::to_string(target_df) +
                             " is below the penalty null-space dimension " +
                             std::to_string(df.null_dim));
        return {kMaxLambda, df_cap, true};
    }
    double lo = std::log(1e-30);
    double hi = std::log(kMaxLambda);
    double mid = 0.5 * (lo + hi);
    double val = df(std::exp(mid));
    for (int it = 0; it < 400 && std::abs(val - target_df) > 0.01 * kDfTolerance; ++it) {
        if (val > target_df)
            lo = mid;
        else
            hi = mid;
        mid = 0.5 * (lo + hi);
        val = df(std::exp(mid));
    }
    return {std::exp(mid), val, false};
}

LambdaCalibration calibrate_lambda(const Matrix& design, const Matrix& penalty, double target_df,
                                   const Vector& weights) {
    Matrix gram = weights.size() == 0 ? Matrix(design.transpose() * design)
                                      : Matrix(design.transpose() * weights.asDiagonal() * design);
    return calibrate_lambda_gram(gram, penalty, target_df);
}

namespace {

double asym_value(const Vector& beta, const std::vector<AsymTerm>& terms) {
    double s = 0.0;
    for (const auto& t : terms) {
        const Vector diff = t.d * beta - t.bound_or_zero();
        const auto v = asym_weights(beta, t.d, t.direction, t.bound);
        for (Eigen::Index r = 0; r < diff.size(); ++r)
            if (v[static_cast<std::size_t>(r)]) s += t.lambda * diff[r] * diff[r];
    }
    return s;
}

std::vector<WeightVector> all_weights(const Vector& beta, const std::vector<AsymTerm>& terms) {
    std::vector<WeightVector> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(asym_weights(beta, t.d, t.direction, t.bound));
    return out;
}

} // namespace

SolveReport solve_asym_iterative(const NormalSystem& sys, const Vector& rhs,
                                 const std::vector<AsymTerm>& terms, int max_iter) {
    for (const auto& t : terms) {
        if (t.lambda < 0.0) throw InputError("asymmetric penalty multiplier must be >= 0");
        if (t.d.cols() != sys.dim()) throw InputError("asymmetric penalty dimension mismatch");
    }
    auto objective = [&](const Vector& b) {
        return b.dot(sys.hessian() * b) - 2.0 * rhs.dot(b) + asym_value(b, terms);
    };

    SolveReport rep;
    Vector beta = sys.solve(rhs);
    auto weights = all_weights(beta, terms);
    std::vector<std::vector<WeightVector>> seen{weights};
    std::vector<Vector> iterates;

    for (int it = 1; it <= max_iter; ++it) {
        Matrix h = sys.hessian();
        Vector r = rhs;
        for (std::size_t k = 0; k < terms.size(); ++k) {
            const auto& t = terms[k];
            Vector w(t.d.rows());
            for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = weights[k][static_cast<std::size_t>(i)];
            h.noalias() += t.lambda * (t.d.transpose() * w.asDiagonal() * t.d);
            if (t.bound.size() != 0) r.noalias() += t.lambda * (t.d.transpose() * w.cwiseProduct(t.bound));
        }
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() != Eigen::Success)
            throw NumericalError("asymmetric penalty system is not positive definite");
        beta = llt.solve(r);
        iterates.push_back(beta);
        rep.iterations = it;
        auto next = all_weights(beta, terms);
        if (next == weights) {
            rep.converged = true;
            break;
        }
        if (std::find(seen.begin(), seen.end(), next) != seen.end()) {
            // Weight sets revisit an earlier state; keep the best iterate.
            std::size_t best = 0;
            double best_obj = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < iterates.size(); ++i) {
                const double o = objective(iterates[i]);
                if (o < best_obj) {
                    best_obj = o;
                    best = i;
                }
            }
            beta = iterates[best];
            next = all_weights(beta, terms);
            rep.converged = true;
            rep.cycled = true;
            weights = std::move(next);
            break;
        }
        seen.push_back(next);
        weights = std::move(next);
    }
    rep.beta = beta;
    rep.weights = std::move(weights);
    return rep;
}

SolveReport solve_monotone_iterative(const PLSProblem& prob, const DiffMatrix& d, Direction dir,
                                     double lambda2, int max_iter) {
    if (!(lambda2 > 0.0)) throw InputError("solve_monotone_iterative: lambda2 must be > 0");
    const NormalSystem sys(prob.design, prob.weights, prob.bundle.fixed_quadratic(prob.design.cols()));
    AsymTerm term;
    term.d = d.values;
    term.direction = dir;
    term.lambda = lambda2;
    return solve_asym_iterative(sys, weighted_crossprod(prob.design, prob.weights, prob.u), {term},
                                max_iter);
}

QPConstraint constraints_from_terms(const std::vector<AsymTerm>& terms) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const auto& t : terms) {
        rows += t.d.rows();
        cols = t.d.cols();
    }
    QPConstraint con;
    con.c.resize(rows, cols);
    con.b.resize(rows);
    Eigen::Index r = 0;
    for (const auto& t : terms) {
        const double s = t.direction == Direction::increasing ? 1.0 : -1.0;
        con.c.middleRows(r, t.d.rows()) = s * t.d;
        con.b.segment(r, t.d.rows()) = s * t.bound_or_zero();
        r += t.d.rows();
    }
    return con;
}

SolveReport solve_qp(const PLSProblem& prob, const QPConstraint& con, const QPOptions& opts) {
    const NormalSystem sys(prob.design, prob.weights, prob.bundle.fixed_quadratic(prob.design.cols()));
    return solve_qp_dense(sys, weighted_crossprod(prob.design, prob.weights, prob.u), con, opts);
}

} // namespace shapeboost
