#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shapeboost/basis.hpp"
#include "shapeboost/data.hpp"
#include "shapeboost/penalty.hpp"
#include "shapeboost/solver.hpp"

namespace shapeboost {

enum class LearnerKind {
    linear,
    categorical_ridge,
    pspline,
    cyclic_pspline,
    monotone_pspline,
    boundary_pspline,
    tensor,
    varying,
};

enum class Constraint {
    none,
    increasing,
    decreasing,
    convex,
    concave,
    cyclic,
    positive,
    negative,
    bounded,
};

enum class SolverChoice { qp, iterative };

std::string_view to_string(LearnerKind k);
std::string_view to_string(Constraint c);
std::string_view to_string(SolverChoice s);
std::string_view to_string(Sides s);
LearnerKind parse_learner_kind(std::string_view s);
Constraint parse_constraint(std::string_view s);
SolverChoice parse_solver(std::string_view s);
Sides parse_sides(std::string_view s);

/// Extra penalty flattening the spline at one or both ends.
struct BoundarySpec {
    int order = 2;   // 1: constant boundary, 2: linear boundary
    int n_edge = 3;
    Sides sides = Sides::both;
    double lambda = kDefaultConstraintLambda;

    friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

/// One spline direction of a learner.
struct MarginSpec {
    int n_inner = 20;
    int degree = 3;
    int diff_order = 2;
    Constraint constraint = Constraint::none;
    double constraint_lambda = kDefaultConstraintLambda;
    double lo = 0.0;  // co-domain bounds for Constraint::bounded
    double hi = 0.0;
    std::optional<std::pair<double, double>> range;  // fixed [lower, upper]; data range otherwise
    std::optional<KnotGrid> grid;                    // set once resolved

    friend bool operator==(const MarginSpec&, const MarginSpec&) = default;
};

/// Declarative description of a base-learner.
///
/// Covariate layout per kind:
///   linear               covariates x_1..x_q, no margins
///   categorical-ridge    covariates [g] holding level ids 1..L
///   *-pspline            covariates [x], one margin
///   tensor               covariates [x1, x2], two margins
///   varying              covariates [x, z], one margin for z
struct LearnerSpec {
    std::string name;
    LearnerKind kind = LearnerKind::pspline;
    std::vector<std::string> covariates;
    std::vector<MarginSpec> margins;
    double target_df = 4.0;
    bool intercept = true;  // linear learners only
    int n_levels = 0;       // categorical; resolved from data when 0
    std::optional<BoundarySpec> boundary;
    SolverChoice solver = SolverChoice::qp;
    bool hard_bounds = false;
    std::vector<double> center;  // training column means of the design, set when resolved

    friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;

    /// Throws InputError for incompatible kind/constraint combinations.
    void validate() const;
    [[nodiscard]] bool resolved() const;
};

/// Data-independent structure of a learner plus its training design.
class LearnerBlueprint {
public:
    /// Resolves knot grids (and level counts) from `data` and builds the design.
    static std::shared_ptr<const LearnerBlueprint> build(LearnerSpec spec, const DataFrame& data);
    /// Rebuilds a learner from a resolved spec (no training design).
    static std::shared_ptr<const LearnerBlueprint> from_resolved(LearnerSpec spec);

    [[nodiscard]] const LearnerSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const Matrix& design() const noexcept { return design_.values; }
    [[nodiscard]] Eigen::Index n_coef() const noexcept { return n_coef_; }

    /// Design rows for arbitrary data. Cyclic margins wrap; boundary-penalized
    /// margins extrapolate linearly; other margins reject values outside the
    /// boundary knots.
    [[nodiscard]] Matrix design_for(const DataFrame& data) const;

    [[nodiscard]] const Matrix& smooth_penalty() const noexcept { return smooth_; }
    [[nodiscard]] const Matrix& boundary_penalty() const noexcept { return boundary_; }
    /// Constraint terms with bounds relative to a zero accumulator.
    [[nodiscard]] const std::vector<AsymTerm>& constraint_terms() const noexcept { return terms_; }
    [[nodiscard]] bool constrained() const noexcept { return !terms_.empty(); }
    [[nodiscard]] const std::vector<BasisSpec>& bases() const noexcept { return bases_; }

    /// Centered effect: f(x) - mean of f over the training rows.
    [[nodiscard]] Vector centered(const Matrix& rows, const Vector& beta) const;

private:
    explicit LearnerBlueprint(LearnerSpec spec);
    void setup_structure();
    Matrix margin_rows(std::size_t m, std::span<const double> xs) const;

    LearnerSpec spec_;
    std::vector<BasisSpec> bases_;
    DesignMatrix design_;
    Eigen::Index n_coef_ = 0;
    Matrix smooth_;
    Matrix boundary_;
    std::vector<AsymTerm> terms_;
};

/// Result of fitting one learner to a negative gradient.
struct FittedComponent {
    Vector beta;  // unscaled increment
    Vector fitted;
    double rss = 0.0;
    int learner_id = 0;
};

/// A blueprint bound to observation weights, with lambda calibrated to the
/// target degrees of freedom and the normal equations factorized.
class BaseLearner {
public:
    BaseLearner(std::shared_ptr<const LearnerBlueprint> blueprint, Vector weights = Vector(),
                int id = 0);

    [[nodiscard]] const LearnerBlueprint& blueprint() const noexcept { return *bp_; }
    [[nodiscard]] std::shared_ptr<const LearnerBlueprint> blueprint_ptr() const noexcept { return bp_; }
    [[nodiscard]] int id() const noexcept { return id_; }
    [[nodiscard]] double lambda() const noexcept { return calibration_.lambda; }
    [[nodiscard]] double df() const noexcept { return calibration_.df; }
    [[nodiscard]] const PenaltyBundle& bundle() const noexcept { return bundle_; }

    /// Penalized fit to `u`. `accumulated` and `step` matter only for
    /// hard-bounded learners, whose increments keep accumulated + step * beta
    /// inside [lo, hi].
    FittedComponent fit(const Vector& u, const Vector& accumulated, double step);
    FittedComponent fit(const Vector& u);

private:
    std::shared_ptr<const LearnerBlueprint> bp_;
    Vector weights_;
    int id_ = 0;
    LambdaCalibration calibration_;
    PenaltyBundle bundle_;
    NormalSystem system_;
    std::vector<int> warm_active_;
};

/// Accumulated coefficients, one vector per learner.
struct CoefficientStore {
    std::vector<Vector> beta;

    CoefficientStore() = default;
    explicit CoefficientStore(const std::vector<Eigen::Index>& sizes);
    void add(std::size_t learner, double step, const Vector& increment);
};

} // namespace shapeboost
