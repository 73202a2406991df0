#pragma once

#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "shapeboost/basis.hpp"
#include "shapeboost/penalty.hpp"

namespace shapeboost {

/// Penalized least-squares problem
///   (u - B beta)^T W (u - B beta) + beta^T (lambda K + ...) beta
/// with W = diag(weights) (identity when `weights` is empty).
struct PLSProblem {
    Matrix design;
    Vector u;
    PenaltyBundle bundle;
    Vector weights;
};

/// Linear inequality constraints C beta >= b (b empty means zero).
struct QPConstraint {
    Matrix c;
    Vector b;

    [[nodiscard]] Vector b_or_zero() const { return b.size() == 0 ? Vector::Zero(c.rows()) : b; }
};

struct SolveReport {
    Vector beta;
    int iterations = 0;
    bool converged = false;
    // QP: indices of active constraints and the multiplier of every constraint.
    std::vector<int> active_set;
    Vector multipliers;
    // Iterative asymmetric solver: final weights of every asymmetric term, and
    // whether the weight sequence revisited an earlier state.
    std::vector<WeightVector> weights;
    bool cycled = false;
};

/// Diagonal jitter 1e-10 * trace(G) / p that keeps the normal equations definite.
double ridge_jitter(const Matrix& gram);

/// Normal-equation pieces shared by every solver: G = B^T W B, the fixed
/// quadratic penalty, and a Cholesky factor of G + penalty + jitter I.
class NormalSystem {
public:
    NormalSystem() = default;
    NormalSystem(const Matrix& design, const Vector& weights, const Matrix& fixed_penalty);

    [[nodiscard]] const Matrix& gram() const noexcept { return gram_; }
    [[nodiscard]] const Matrix& hessian() const noexcept { return hessian_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return hessian_.rows(); }
    /// L^-T for the Cholesky factor L of the Hessian.
    [[nodiscard]] const Matrix& inverse_factor() const noexcept { return inverse_factor_; }

    /// Solves (G + penalty + jitter I) beta = rhs.
    [[nodiscard]] Vector solve(const Vector& rhs) const;

private:
    Matrix gram_;
    Matrix hessian_;
    double jitter_ = 0.0;
    Eigen::LLT<Matrix> llt_;
    Matrix inverse_factor_;
};

/// B^T W u.
Vector weighted_crossprod(const Matrix& design, const Vector& weights, const Vector& u);

/// Unconstrained minimizer; asymmetric terms in the bundle are ignored.
SolveReport solve_pls(const PLSProblem& prob);

/// Effective degrees of freedom trace((G + lambda K + jitter)^-1 G).
double degrees_of_freedom(const Matrix& gram, const Matrix& penalty, double lambda);

struct LambdaCalibration {
    double lambda = 0.0;
    double df = 0.0;
    bool capped = false;  // target sits at the penalty null space; lambda = kMaxLambda
};

inline constexpr double kMaxLambda = 1e12;
inline constexpr double kDfTolerance = 1e-4;

/// Bisection on log(lambda) so that df(lambda) = target_df within kDfTolerance.
LambdaCalibration calibrate_lambda(const Matrix& design, const Matrix& penalty, double target_df,
                                   const Vector& weights = Vector());
LambdaCalibration calibrate_lambda_gram(const Matrix& gram, const Matrix& penalty, double target_df);

/// Iteratively reweighted asymmetric penalties: alternate between the weights
/// of every term and the penalized solve until the weights stop changing.
SolveReport solve_asym_iterative(const NormalSystem& sys, const Vector& rhs,
                                 const std::vector<AsymTerm>& terms, int max_iter = 50);

/// One-term convenience wrapper over solve_asym_iterative.
SolveReport solve_monotone_iterative(const PLSProblem& prob, const DiffMatrix& d, Direction dir,
                                     double lambda2 = kDefaultConstraintLambda, int max_iter = 50);

struct QPOptions {
    int max_iter = 0;               // 0 picks 10 * (n + m) + 100
    std::vector<int> warm_start;    // constraints tried as the initial active set
};

/// Goldfarb-Idnani dual active-set method for
///   min 1/2 x^T G x - a^T x   subject to  C x >= b,
/// G symmetric positive definite. Multipliers refer to this scaling.
SolveReport solve_qp_dense(const Matrix& g, const Vector& a, const QPConstraint& con,
                           const QPOptions& opts = {});

/// Same problem with G taken from a factorized normal system.
SolveReport solve_qp_dense(const NormalSystem& sys, const Vector& a, const QPConstraint& con,
                           const QPOptions& opts = {});

/// PLS objective of `prob` (asymmetric terms excluded) minimized under `con`.
SolveReport solve_qp(const PLSProblem& prob, const QPConstraint& con, const QPOptions& opts = {});

/// Stacks every asymmetric term into a single constraint block, flipping the
/// sign of decreasing terms.
QPConstraint constraints_from_terms(const std::vector<AsymTerm>& terms);

} // namespace shapeboost
