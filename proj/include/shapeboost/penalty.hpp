#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "shapeboost/basis.hpp"

namespace shapeboost {

enum class Direction { increasing, decreasing };

enum class Sides { left, right, both };

/// Default multiplier for asymmetric and boundary penalties.
inline constexpr double kDefaultConstraintLambda = 1e6;

/// Difference operator on a coefficient vector.
struct DiffMatrix {
    Matrix values;
    int order = 1;
    bool cyclic = false;
};

/// 0/1 weights, one per constrained difference.
using WeightVector = std::vector<std::uint8_t>;

/// Order-d differences: ((J-d) x J), row r holds (-1)^(d-i) C(d,i) at column r+i.
/// Order 0 yields the identity (constraints on the coefficients themselves).
DiffMatrix diff_matrix(int n_coef, int order);

/// Cyclic order-d differences: (J x J) circulant with indices wrapped mod J.
DiffMatrix cyclic_diff_matrix(int n_coef, int order);

/// K = D^T D.
Matrix quad_penalty(const DiffMatrix& d);

/// v_r = 1 iff difference r violates or touches the constraint. `bound` shifts
/// the constraint to D beta >= bound (increasing) or D beta <= bound
/// (decreasing); an empty bound means zero.
WeightVector asym_weights(const Vector& beta, const Matrix& d, Direction dir,
                          const Vector& bound = Vector());
WeightVector asym_weights(const Vector& beta, const DiffMatrix& d, Direction dir,
                          const Vector& bound = Vector());

/// D^T diag(v) D.
Matrix asym_penalty(const Matrix& d, const WeightVector& v);
Matrix asym_penalty(const DiffMatrix& d, const WeightVector& v);

/// Rows of an order-e difference matrix whose stencil touches one of the
/// `n_edge` outermost coefficients on the requested sides.
WeightVector boundary_mask(int n_coef, int order, int n_edge, Sides sides);

/// D_e^T diag(mask) D_e with the mask from boundary_mask.
Matrix boundary_penalty(int n_coef, int order, int n_edge, Sides sides);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// K1 (x) I_K + I_J (x) K2 for coefficients ordered beta_11..beta_1K, beta_21, ...
Matrix tensor_penalty(const Matrix& k1, const Matrix& k2);

/// D1 (x) I_K: differences along the first covariate for every column k.
Matrix tensor_diff_first(const DiffMatrix& d1, int n_second);

/// I_J (x) D2: differences along the second covariate for every row j.
Matrix tensor_diff_second(int n_first, const DiffMatrix& d2);

/// Pair (P1, P2) of weighted constraint penalties over a J x K coefficient grid.
std::pair<Matrix, Matrix> tensor_asym_penalties(const DiffMatrix& d1, const DiffMatrix& d2,
                                                const WeightVector& v1, const WeightVector& v2,
                                                int n_first, int n_second);

/// One-sided constraint D beta >= bound (increasing) or D beta <= bound
/// (decreasing), enforced either as an asymmetric penalty with multiplier
/// `lambda` or as a QP inequality.
struct AsymTerm {
    Matrix d;
    Direction direction = Direction::increasing;
    double lambda = kDefaultConstraintLambda;
    Vector bound;  // empty means zero
    bool on_coefficients = false;  // order-0 term (co-domain bound)

    [[nodiscard]] Vector bound_or_zero() const {
        return bound.size() == 0 ? Vector::Zero(d.rows()) : bound;
    }
};

/// Every penalty attached to one base-learner.
struct PenaltyBundle {
    Matrix smooth;        // K; identity for ridge learners; empty for unpenalized
    double lambda = 0.0;  // multiplier of `smooth`, calibrated to target df
    std::vector<AsymTerm> asym;
    Matrix boundary;      // D_e^T V D_e, empty when unused
    double boundary_lambda = kDefaultConstraintLambda;

    /// lambda K + lambda_3 P_boundary (p x p), zero when nothing is set.
    [[nodiscard]] Matrix fixed_quadratic(Eigen::Index p) const;
};

} // namespace shapeboost
