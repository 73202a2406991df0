#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "shapeboost/boost.hpp"

namespace shapeboost {

/// Evaluation points of one learner's effect and the bootstrap curves on them.
struct EffectGrid {
    std::size_t learner = 0;
    std::vector<double> grid;   // first axis (covariate units, or level ids)
    std::vector<double> grid2;  // second axis for tensor learners, empty otherwise
    Matrix design;              // design rows at the grid points
    Matrix curves;              // one bootstrap curve per row
};

/// True when effect_grid can lay out points for this learner.
bool effect_supported(const LearnerBlueprint& bp);

/// Equidistant grid with `n` points per axis over the knot range (cyclic:
/// both ends of the period). Categorical learners use their levels; linear
/// learners need `range`. Tensor grids are n x n, first axis slowest.
EffectGrid effect_grid(const LearnerBlueprint& bp, std::size_t learner, int n,
                       std::optional<std::pair<double, double>> range = std::nullopt);

/// Effect of `beta` at the grid: centered by the training mean of the
/// learner, except varying coefficients, which report the slope function.
Vector effect_values(const LearnerBlueprint& bp, const Matrix& grid_design, const Vector& beta);

enum class BandKind { pointwise, simultaneous };

std::string_view to_string(BandKind k);

struct ConfidenceBand {
    std::size_t learner = 0;
    std::vector<double> grid;
    std::vector<double> grid2;
    BandKind kind = BandKind::pointwise;
    std::vector<double> levels;
    Matrix lower;  // levels x grid points
    Matrix upper;
    Vector median;
    std::vector<double> scale;  // inflation factor per level (1 for pointwise)
};

/// Linear-interpolation sample quantile (type 7) of unsorted values.
double quantile(std::vector<double> values, double p);

/// Pointwise quantiles (1 -+ level) / 2 of the curves.
ConfidenceBand pointwise_band(const EffectGrid& effect, const std::vector<double>& levels);

/// Inflates the pointwise band at `level` about the pointwise median by the
/// smallest c >= 1 such that at least a `level` fraction of the curves lies
/// entirely inside.
ConfidenceBand simultaneous_band(const Matrix& curves, const ConfidenceBand& pointwise, double level);

struct InferConfig {
    int n_boot = 1000;
    std::vector<double> levels{0.80, 0.95};
    int grid_size = 100;
    int inner_folds = 5;
    int inner_m_max = 200;
    double failure_budget = 0.02;
    bool simultaneous = false;

    void validate() const;
};

struct BootstrapResult {
    std::vector<EffectGrid> effects;
    std::vector<ConfidenceBand> pointwise;
    std::vector<ConfidenceBand> simultaneous;  // one per (learner, level) when requested
    int n_used = 0;
    int n_failed = 0;
};

/// Outer bootstrap with inner k-fold stopping. Every resample refits with
/// multinomial row counts as weights; knots stay at the full-data grid.
BootstrapResult bootstrap_ci(const DataFrame& data, const std::string& response,
                             const std::vector<LearnerSpec>& specs, LossKind loss, const BoostConfig& config,
                             const InferConfig& infer);

/// Long-format CSV: grid[,grid2],level,lower,upper,kind.
void write_band_csv(std::ostream& out, const std::vector<ConfidenceBand>& bands);

} // namespace shapeboost
