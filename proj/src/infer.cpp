#include "shapeboost/infer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <set>

#include "shapeboost/error.hpp"
#include "shapeboost/log.hpp"
#include "shapeboost/rng.hpp"

namespace shapeboost {

bool effect_supported(const LearnerBlueprint& bp) {
    return bp.spec().kind != LearnerKind::linear || bp.spec().covariates.size() == 1;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    out.back() = n == 1 ? lo : hi;
    return out;
}

std::vector<double> margin_axis(const LearnerBlueprint& bp, std::size_t m, int n) {
    const auto& g = bp.bases()[m].grid();
    return linspace(g.lower, g.upper, n);
}

} // namespace

EffectGrid effect_grid(const LearnerBlueprint& bp, std::size_t learner, int n,
                       std::optional<std::pair<double, double>> range) {
    const auto& spec = bp.spec();
    if (n < 1) throw InputError("grid size must be >= 1");
    EffectGrid eg;
    eg.learner = learner;
    DataFrame pts;
    switch (spec.kind) {
    case LearnerKind::linear:
        if (spec.covariates.size() != 1)
            throw InputError("learner '" + spec.name + "': effects need a single-covariate linear learner");
        if (!range) throw InputError("learner '" + spec.name + "': linear effects need a covariate range");
        eg.grid = linspace(range->first, range->second, n);
        pts.add(spec.covariates[0], eg.grid);
        break;
    case LearnerKind::categorical_ridge:
        for (int k = 1; k <= spec.n_levels; ++k) eg.grid.push_back(k);
        pts.add(spec.covariates[0], eg.grid);
        break;
    case LearnerKind::tensor: {
        const auto a1 = margin_axis(bp, 0, n);
        const auto a2 = margin_axis(bp, 1, n);
        for (double x1 : a1)
            for (double x2 : a2) {
                eg.grid.push_back(x1);
                eg.grid2.push_back(x2);
            }
        pts.add(spec.covariates[0], eg.grid);
        pts.add(spec.covariates[1], eg.grid2);
        break;
    }
    case LearnerKind::varying:
        eg.grid = margin_axis(bp, 0, n);
        pts.add(spec.covariates[0], std::vector<double>(eg.grid.size(), 1.0));
        pts.add(spec.covariates[1], eg.grid);
        break;
    default:
        eg.grid = margin_axis(bp, 0, n);
        pts.add(spec.covariates[0], eg.grid);
        break;
    }
    eg.design = bp.design_for(pts);
    return eg;
}

Vector effect_values(const LearnerBlueprint& bp, const Matrix& grid_design, const Vector& beta) {
    if (bp.spec().kind == LearnerKind::varying) return grid_design * beta;
    return bp.centered(grid_design, beta);
}

std::string_view to_string(BandKind k) { return k == BandKind::pointwise ? "pointwise" : "simultaneous"; }

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InputError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ConfidenceBand pointwise_band(const EffectGrid& effect, const std::vector<double>& levels) {
    const Matrix& c = effect.curves;
    if (c.rows() < 2) throw InputError("pointwise band needs at least 2 curves");
    ConfidenceBand band;
    band.learner = effect.learner;
    band.grid = effect.grid;
    band.grid2 = effect.grid2;
    band.levels = levels;
    band.scale.assign(levels.size(), 1.0);
    band.lower.resize(static_cast<Eigen::Index>(levels.size()), c.cols());
    band.upper.resizeLike(band.lower);
    band.median.resize(c.cols());
    std::vector<double> col(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index g = 0; g < c.cols(); ++g) {
        for (Eigen::Index b = 0; b < c.rows(); ++b) col[static_cast<std::size_t>(b)] = c(b, g);
        band.median[g] = quantile(col, 0.5);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            band.lower(r, g) = quantile(col, (1.0 - levels[k]) / 2.0);
            band.upper(r, g) = quantile(col, (1.0 + levels[k]) / 2.0);
        }
    }
    return band;
}

ConfidenceBand simultaneous_band(const Matrix& curves, const ConfidenceBand& pointwise, double level) {
    if (curves.rows() < 10) throw InputError("simultaneous band needs at least 10 curves");
    if (curves.cols() != pointwise.median.size()) throw InputError("curves and band use different grids");
    const auto it = std::find(pointwise.levels.begin(), pointwise.levels.end(), level);
    if (it == pointwise.levels.end()) throw InputError("pointwise band lacks the requested level");
    const auto k = static_cast<Eigen::Index>(it - pointwise.levels.begin());
    const Vector& med = pointwise.median;
    const double inf = std::numeric_limits<double>::infinity();

    // Smallest inflation that contains each curve.
    std::vector<double> need(static_cast<std::size_t>(curves.rows()), 1.0);
    for (Eigen::Index b = 0; b < curves.rows(); ++b) {
        double r = 1.0;
        for (Eigen::Index g = 0; g < curves.cols(); ++g) {
            const double v = curves(b, g) - med[g];
            const double hw = v > 0.0 ? pointwise.upper(k, g) - med[g] : med[g] - pointwise.lower(k, g);
            const double a = std::abs(v);
            if (a == 0.0) continue;
            r = std::max(r, hw > 0.0 ? a / hw : inf);
        }
        need[static_cast<std::size_t>(b)] = r;
    }
    std::sort(need.begin(), need.end());
    const auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(need.size()) - 1e-9));
    const double c = need[std::max<std::size_t>(idx, 1) - 1];
    if (!std::isfinite(c)) throw NumericalError("simultaneous band: curves leave a zero-width pointwise band");

    ConfidenceBand out;
    out.learner = pointwise.learner;
    out.grid = pointwise.grid;
    out.grid2 = pointwise.grid2;
    out.kind = BandKind::simultaneous;
    out.levels = {level};
    out.scale = {c};
    out.median = med;
    out.lower = (med.transpose().array() - c * (med.transpose() - pointwise.lower.row(k)).array()).matrix();
    out.upper = (med.transpose().array() + c * (pointwise.upper.row(k) - med.transpose()).array()).matrix();
    return out;
}

void InferConfig::validate() const {
    if (n_boot < 2) throw InputError("n_boot must be >= 2");
    if (levels.empty()) throw InputError("at least one confidence level is required");
    for (double l : levels)
        if (!(l > 0.0 && l < 1.0)) throw InputError("confidence levels must lie in (0, 1)");
    if (grid_size < 1) throw InputError("grid size must be >= 1");
    if (inner_folds < 2) throw InputError("inner folds must be >= 2");
    if (inner_m_max < 0) throw InputError("inner m_max must be >= 0");
    if (!(failure_budget >= 0.0 && failure_budget < 1.0)) throw InputError("failure budget must lie in [0, 1)");
}

namespace {

// A resample is degenerate when a continuous covariate takes a single value.
bool degenerate(const std::vector<std::shared_ptr<const LearnerBlueprint>>& learners, const DataFrame& data,
                const Vector& counts) {
    for (const auto& bp : learners) {
        const auto& spec = bp->spec();
        if (spec.kind == LearnerKind::categorical_ridge) continue;
        for (const auto& name : spec.covariates) {
            const auto& col = data.column(name);
            double first = std::numeric_limits<double>::quiet_NaN();
            bool varies = false;
            for (std::size_t i = 0; i < col.size() && !varies; ++i) {
                if (counts[static_cast<Eigen::Index>(i)] <= 0.0) continue;
                if (std::isnan(first))
                    first = col[i];
                else if (col[i] != first)
                    varies = true;
            }
            if (!varies) return true;
        }
    }
    return false;
}

} // namespace

BootstrapResult bootstrap_ci(const DataFrame& data, const std::string& response,
                             const std::vector<LearnerSpec>& specs, LossKind loss, const BoostConfig& config,
                             const InferConfig& infer) {
    config.validate();
    infer.validate();
    const Vector y = response_vector(data, response, loss);
    const auto learners = build_learners(specs, data);
    const auto n = static_cast<Eigen::Index>(data.rows());

    BootstrapResult res;
    for (std::size_t l = 0; l < learners.size(); ++l) {
        if (!effect_supported(*learners[l])) continue;
        std::optional<std::pair<double, double>> range;
        if (learners[l]->spec().kind == LearnerKind::linear) {
            const auto& col = data.column(learners[l]->spec().covariates[0]);
            const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
            range = std::pair{*mn, *mx};
        }
        res.effects.push_back(effect_grid(*learners[l], l, infer.grid_size, range));
        res.effects.back().curves.resize(infer.n_boot, res.effects.back().design.rows());
    }

    std::vector<char> ok(static_cast<std::size_t>(infer.n_boot), 0);
    std::vector<std::string> why(static_cast<std::size_t>(infer.n_boot));
    const std::uint64_t outer_seed = mix_seed(config.seed ^ 0x6f75746572ULL);
#pragma omp parallel for schedule(dynamic) if (config.parallel)
    for (int b = 0; b < infer.n_boot; ++b) {
        auto rng = rng_stream(outer_seed, static_cast<std::uint64_t>(b));
        std::uniform_int_distribution<Eigen::Index> draw(0, n - 1);
        Vector counts = Vector::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) counts[draw(rng)] += 1.0;
        const auto slot = static_cast<std::size_t>(b);
        if (degenerate(learners, data, counts)) {
            why[slot] = "constant covariate";
            continue;
        }
        try {
            BoostConfig inner = config;
            inner.seed = mix_seed(outer_seed + static_cast<std::uint64_t>(b));
            inner.parallel = false;
            const CVResult cv = cvrisk(learners, y, counts, loss, inner,
                                       {ResampleConfig::Kind::kfold, infer.inner_folds, infer.inner_m_max});
            const BoostRun run = run_boost(learners, y, counts, loss, config.step, cv.optimal, false);
            for (auto& eg : res.effects)
                eg.curves.row(b) = effect_values(*learners[eg.learner], eg.design, run.coef.beta[eg.learner]).transpose();
            ok[slot] = 1;
        } catch (const Error& e) {
            why[slot] = e.what();
        }
    }

    std::vector<Eigen::Index> keep;
    for (int b = 0; b < infer.n_boot; ++b) {
        if (ok[static_cast<std::size_t>(b)]) {
            keep.push_back(b);
        } else {
            warn("bootstrap resample " + std::to_string(b) + " skipped: " + why[static_cast<std::size_t>(b)]);
        }
    }
    res.n_used = static_cast<int>(keep.size());
    res.n_failed = infer.n_boot - res.n_used;
    if (res.n_failed > infer.failure_budget * infer.n_boot)
        throw NumericalError(std::to_string(res.n_failed) + " of " + std::to_string(infer.n_boot) +
                             " bootstrap resamples failed, above the failure budget");
    for (auto& eg : res.effects) {
        Matrix kept(static_cast<Eigen::Index>(keep.size()), eg.curves.cols());
        for (std::size_t i = 0; i < keep.size(); ++i) kept.row(static_cast<Eigen::Index>(i)) = eg.curves.row(keep[i]);
        eg.curves = std::move(kept);
        res.pointwise.push_back(pointwise_band(eg, infer.levels));
        if (infer.simultaneous)
            for (double level : infer.levels)
                res.simultaneous.push_back(simultaneous_band(eg.curves, res.pointwise.back(), level));
    }
    return res;
}

void write_band_csv(std::ostream& out, const std::vector<ConfidenceBand>& bands) {
    const bool two_d = std::any_of(bands.begin(), bands.end(), [](const auto& b) { return !b.grid2.empty(); });
    out << (two_d ? "grid,grid2,level,lower,upper,kind\n" : "grid,level,lower,upper,kind\n");
    for (const auto& band : bands)
        for (std::size_t k = 0; k < band.levels.size(); ++k)
            for (std::size_t g = 0; g < band.grid.size(); ++g) {
                const auto r = static_cast<Eigen::Index>(k);
                const auto c = static_cast<Eigen::Index>(g);
                out << format_double(band.grid[g]) << ',';
                if (two_d) out << (band.grid2.empty() ? std::string() : format_double(band.grid2[g])) << ',';
                out << format_double(band.levels[k]) << ',' << format_double(band.lower(r, c)) << ','
                    << format_double(band.upper(r, c)) << ',' << to_string(band.kind) << '\n';
            }
}

} // namespace shapeboost
