// Goldfarb-Idnani dual active-set method.
//
// State: active set A (q constraints), primal point x, multipliers u >= 0, and
// the factorization J = L^-T Q, R (q x q upper triangular) where G = L L^T and
// L^-1 N_A = Q [R; 0]. Then J J^T = G^-1, the last n-q columns of J span the
// null space of the active normals in the G-metric, and J^T n_i = (R e_i; 0)
// for every active normal n_i.

#include <cmath>
#include <limits>
#include <string>

#include "shapeboost/error.hpp"
#include "shapeboost/solver.hpp"

namespace shapeboost {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class DualActiveSet {
public:
    // j0 = L^-T for G = L L^T; x0 = G^-1 a is the unconstrained minimizer.
    DualActiveSet(const Matrix& j0, const Vector& x0, const QPConstraint& con)
        : c_(con.c), b_(con.b_or_zero()), n_(j0.rows()), j0_(j0), x0_(x0) {
        if (j0.cols() != n_ || x0.size() != n_)
            throw InputError("solve_qp: Hessian and linear term dimensions differ");
        if (c_.rows() > 0 && c_.cols() != n_)
            throw InputError("solve_qp: constraint matrix has " + std::to_string(c_.cols()) +
                             " columns, expected " + std::to_string(n_));
        row_norm_ = c_.rowwise().norm();
        reset();
    }

    SolveReport run(const QPOptions& opts) {
        const Eigen::Index m = c_.rows();
        const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * (n_ + m) + 100);
        if (!opts.warm_start.empty() && !try_warm_start(opts.warm_start)) reset();

        int iter = 0;
        while (true) {
            const Eigen::Index p = most_violated();
            if (p < 0) break;
            const Vector np = c_.row(p).transpose();
            double up = 0.0;  // multiplier of the constraint being added
            while (true) {
                if (++iter > max_iter)
                    throw NumericalError("solve_qp: iteration limit " + std::to_string(max_iter) +
                                         " reached");
                Vector d = j_.transpose() * np;
                const Vector z = j_.rightCols(n_ - q_) * d.tail(n_ - q_);
                const Vector r = solve_r(d.head(q_));

                // Largest dual step keeping active multipliers nonnegative.
                double t1 = kInf;
                Eigen::Index drop = -1;
                const double rtol = 1e-13 * std::max(1.0, r.size() ? r.cwiseAbs().maxCoeff() : 0.0);
                for (Eigen::Index k = 0; k < q_; ++k)
                    if (r[k] > rtol) {
                        const double ratio = u_[k] / r[k];
                        if (ratio < t1) {
                            t1 = ratio;
                            drop = k;
                        }
                    }
                // Primal step that makes constraint p hold with equality.
                double t2 = kInf;
                const double d2 = d.tail(n_ - q_).norm();
                if (d2 > 1e-12 * std::max(d.norm(), 1e-300)) {
                    const double slack = np.dot(x_) - b_[p];
                    t2 = -slack / z.dot(np);
                }
                if (t1 == kInf && t2 == kInf)
                    throw NumericalError("solve_qp: constraints are infeasible");

                if (t2 == kInf) {
                    u_.head(q_) -= t1 * r;
                    up += t1;
                    remove(drop);
                    continue;
                }
                const double t = std::min(t1, t2);
                x_ += t * z;
                u_.head(q_) -= t * r;
                up += t;
                if (t2 <= t1) {
                    append(d, p, up);
                    break;
                }
                remove(drop);
            }
        }

        SolveReport rep;
        rep.beta = x_;
        rep.iterations = iter;
        rep.converged = true;
        rep.multipliers = Vector::Zero(m);
        for (Eigen::Index k = 0; k < q_; ++k) {
            rep.active_set.push_back(static_cast<int>(active_[static_cast<std::size_t>(k)]));
            rep.multipliers[active_[static_cast<std::size_t>(k)]] = std::max(0.0, u_[k]);
        }
        return rep;
    }

private:
    void reset() {
        j_ = j0_;
        x_ = x0_;
        r_ = Matrix::Zero(n_, n_);
        u_ = Vector::Zero(n_);
        active_.clear();
        q_ = 0;
    }

    Vector solve_r(const Vector& d1) const {
        if (q_ == 0) return Vector();
        return r_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d1);
    }

    double feas_tol(Eigen::Index i) const {
        const double xs = std::max(1.0, x_.size() ? x_.cwiseAbs().maxCoeff() : 0.0);
        return 1e-12 * std::max(1.0, std::abs(b_[i])) * std::max(row_norm_[i], 1e-300) * xs;
    }

    Eigen::Index most_violated() const {
        Eigen::Index best = -1;
        double worst = 0.0;
        const Vector s = c_ * x_ - b_;
        for (Eigen::Index i = 0; i < c_.rows(); ++i) {
            if (row_norm_[i] == 0.0) {
                if (s[i] < -feas_tol(i)) throw NumericalError("solve_qp: constraints are infeasible");
                continue;
            }
            if (s[i] >= -feas_tol(i) || is_active(i)) continue;
            const double scaled = s[i] / row_norm_[i];
            if (scaled < worst) {
                worst = scaled;
                best = i;
            }
        }
        return best;
    }

    bool is_active(Eigen::Index i) const {
        for (auto a : active_)
            if (a == i) return true;
        return false;
    }

    // Givens rotation on columns (i, i+1) of J, chosen so that
    // (c a + s b, -s a + c b) = (h, 0).
    void rotate_j(Eigen::Index i, double c, double s) {
        for (Eigen::Index row = 0; row < n_; ++row) {
            const double a = j_(row, i);
            const double b = j_(row, i + 1);
            j_(row, i) = c * a + s * b;
            j_(row, i + 1) = -s * a + c * b;
        }
    }

    void append(Vector d, Eigen::Index p, double multiplier) {
        for (Eigen::Index k = n_ - 1; k > q_; --k) {
            const double h = std::hypot(d[k - 1], d[k]);
            if (h == 0.0) continue;
            const double c = d[k - 1] / h;
            const double s = d[k] / h;
            d[k - 1] = h;
            d[k] = 0.0;
            rotate_j(k - 1, c, s);
        }
        r_.col(q_).head(q_ + 1) = d.head(q_ + 1);
        u_[q_] = multiplier;
        active_.push_back(p);
        ++q_;
    }

    void remove(Eigen::Index k) {
        for (Eigen::Index col = k; col < q_ - 1; ++col) {
            r_.col(col).head(q_) = r_.col(col + 1).head(q_);
            u_[col] = u_[col + 1];
        }
        r_.col(q_ - 1).setZero();
        active_.erase(active_.begin() + k);
        // Columns k.. are now upper Hessenberg; restore triangular form.
        for (Eigen::Index col = k; col < q_ - 1; ++col) {
            const double a = r_(col, col);
            const double b = r_(col + 1, col);
            const double h = std::hypot(a, b);
            if (h == 0.0) continue;
            const double c = a / h;
            const double s = b / h;
            for (Eigen::Index cc = col; cc < q_ - 1; ++cc) {
                const double ra = r_(col, cc);
                const double rb = r_(col + 1, cc);
                r_(col, cc) = c * ra + s * rb;
                r_(col + 1, cc) = -s * ra + c * rb;
            }
            r_(col + 1, col) = 0.0;
            rotate_j(col, c, s);
        }
        --q_;
        r_.row(q_).setZero();
        u_[q_] = 0.0;
    }

    // Adds the hinted constraints as equalities; accepted only if the
    // resulting multipliers are dual feasible.
    bool try_warm_start(const std::vector<int>& hint) {
        for (int h : hint) {
            if (h < 0 || h >= c_.rows() || is_active(h) || row_norm_[h] == 0.0) continue;
            const Vector np = c_.row(h).transpose();
            Vector d = j_.transpose() * np;
            const double d2 = d.tail(n_ - q_).norm();
            if (!(d2 > 1e-12 * std::max(d.norm(), 1e-300))) continue;
            const Vector z = j_.rightCols(n_ - q_) * d.tail(n_ - q_);
            const Vector r = solve_r(d.head(q_));
            const double t = -(np.dot(x_) - b_[h]) / z.dot(np);
            x_ += t * z;
            u_.head(q_) -= t * r;
            append(d, h, t);
        }
        for (Eigen::Index k = 0; k < q_; ++k)
            if (u_[k] < 0.0) return false;
        return true;
    }

    Matrix c_;
    Vector b_;
    Eigen::Index n_;
    Matrix j0_;
    Vector x0_;
    Vector row_norm_;

    Matrix j_;
    Matrix r_;
    Vector x_;
    Vector u_;
    std::vector<Eigen::Index> active_;
    Eigen::Index q_ = 0;
};

SolveReport run_dual_active_set(const Matrix& j0, const Vector& x0, const QPConstraint& con,
                               const QPOptions& opts) {
    if (con.b.size() != 0 && con.b.size() != con.c.rows())
        throw InputError("solve_qp: bound length does not match constraint rows");
    DualActiveSet qp(j0, x0, con);
    auto rep = qp.run(opts);
    if (!rep.beta.allFinite()) throw NumericalError("solve_qp: non-finite solution");
    return rep;
}

} // namespace

SolveReport solve_qp_dense(const Matrix& g, const Vector& a, const QPConstraint& con,
                           const QPOptions& opts) {
    if (g.rows() != g.cols() || a.size() != g.rows())
        throw InputError("solve_qp: Hessian and linear term dimensions differ");
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_qp: Hessian not positive definite");
    const auto n = g.rows();
    const Matrix j0 = Matrix(llt.matrixU()).triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
    return run_dual_active_set(j0, llt.solve(a), con, opts);
}

SolveReport solve_qp_dense(const NormalSystem& sys, const Vector& a, const QPConstraint& con,
                           const QPOptions& opts) {
    if (a.size() != sys.dim()) throw InputError("solve_qp: linear term dimension differs");
    return run_dual_active_set(sys.inverse_factor(), sys.solve(a), con, opts);
}

} // namespace shapeboost
