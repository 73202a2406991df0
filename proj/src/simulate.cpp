#include "shapeboost/simulate.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "shapeboost/boost.hpp"
#include "shapeboost/error.hpp"
#include "shapeboost/rng.hpp"

namespace shapeboost {

double cyclic_truth(double x) { return std::cos(x) + 0.25 * std::sin(4.0 * x); }

double monotone_truth(double x) { return 1.0 / (1.0 + std::exp(-6.0 * (x - 0.5))); }

namespace {

constexpr int kGridPoints = 200;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

DataFrame draw(std::mt19937_64& rng, int n, double lo, double hi, double sigma, double (*truth)(double)) {
    std::uniform_real_distribution<double> ux(lo, hi);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = ux(rng);
        y[i] = truth(x[i]) + noise(rng);
    }
    DataFrame d;
    d.add("x", std::move(x));
    d.add("y", std::move(y));
    return d;
}

// Boosted fit with the stopping iteration picked by 5-fold CV.
BoostModel cv_fit(const DataFrame& data, const LearnerSpec& spec, std::uint64_t seed) {
    BoostConfig cfg;
    cfg.step = 0.1;
    cfg.seed = seed;
    cfg.parallel = false;
    const auto learners = build_learners({spec}, data);
    const Vector y = response_vector(data, "y", LossKind::gaussian);
    const CVResult cv = cvrisk(learners, y, Vector(), LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 5, 300});
    cfg.m_stop = cv.optimal;
    BoostRun run = run_boost(learners, y, Vector(), LossKind::gaussian, cfg.step, cfg.m_stop, false);
    return BoostModel(LossKind::gaussian, cfg, "y", run.offset, learners, std::move(run.coef), std::move(run.trace));
}

DataFrame grid_frame(double lo, double hi) {
    std::vector<double> g(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (kGridPoints - 1);
    DataFrame d;
    d.add("x", std::move(g));
    return d;
}

double mse_vs_truth(const BoostModel& m, const DataFrame& grid, double (*truth)(double)) {
    const Vector f = m.predict(grid);
    const auto& x = grid.column("x");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = f[static_cast<Eigen::Index>(i)] - truth(x[i]);
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

LearnerSpec spline(LearnerKind kind, Constraint c, std::optional<std::pair<double, double>> range) {
    LearnerSpec s;
    s.name = "f";
    s.kind = kind;
    s.covariates = {"x"};
    MarginSpec m;
    m.constraint = c;
    m.range = range;
    s.margins = {m};
    return s;
}

std::vector<double> cyclic_rep(std::mt19937_64& rng, const SimulationOptions& o, std::uint64_t seed) {
    const DataFrame data = draw(rng, o.n > 0 ? o.n : 150, 0.0, kTwoPi, o.sigma >= 0 ? o.sigma : 0.1, cyclic_truth);
    const auto range = std::pair{0.0, kTwoPi};
    const BoostModel cyc = cv_fit(data, spline(LearnerKind::cyclic_pspline, Constraint::cyclic, range), seed);
    const BoostModel unc = cv_fit(data, spline(LearnerKind::pspline, Constraint::none, range), seed);
    const DataFrame grid = grid_frame(0.0, kTwoPi);
    DataFrame ends;
    ends.add("x", {0.0, kTwoPi});
    const Vector ec = cyc.predict(ends);
    const Vector eu = unc.predict(ends);
    return {mse_vs_truth(cyc, grid, cyclic_truth), mse_vs_truth(unc, grid, cyclic_truth), std::abs(ec[0] - ec[1]),
            std::abs(eu[0] - eu[1])};
}

double violations(const BoostModel& m, const DataFrame& grid) {
    const Vector f = m.predict(grid);
    int count = 0;
    for (Eigen::Index i = 1; i < f.size(); ++i)
        if (f[i] - f[i - 1] < -1e-8) ++count;
    return count;
}

std::vector<double> monotone_rep(std::mt19937_64& rng, const SimulationOptions& o, std::uint64_t seed) {
    const DataFrame data = draw(rng, o.n > 0 ? o.n : 100, 0.0, 1.0, o.sigma >= 0 ? o.sigma : 0.1, monotone_truth);
    const auto range = std::pair{0.0, 1.0};
    const BoostModel con = cv_fit(data, spline(LearnerKind::monotone_pspline, Constraint::increasing, range), seed);
    const BoostModel unc = cv_fit(data, spline(LearnerKind::pspline, Constraint::none, range), seed);
    const DataFrame grid = grid_frame(0.0, 1.0);
    return {mse_vs_truth(con, grid, monotone_truth), mse_vs_truth(unc, grid, monotone_truth), violations(con, grid),
            violations(unc, grid)};
}

std::vector<double> qp_rep(std::mt19937_64& rng, const SimulationOptions& o) {
    const DataFrame data = draw(rng, o.n > 0 ? o.n : 100, 0.0, 1.0, o.sigma >= 0 ? o.sigma : 0.3, monotone_truth);
    LearnerSpec spec = spline(LearnerKind::pspline, Constraint::none, std::pair{0.0, 1.0});
    spec.margins[0].n_inner = 16;  // J = 20 cubic basis functions
    spec.target_df = 10.0;
    const auto bp = LearnerBlueprint::build(spec, data);
    const BaseLearner smooth(bp);
    const auto& y = data.column("y");
    PLSProblem prob;
    prob.design = bp->design();
    prob.u = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
    prob.bundle.smooth = bp->smooth_penalty();
    prob.bundle.lambda = smooth.lambda();
    const DiffMatrix d = diff_matrix(static_cast<int>(bp->n_coef()), 1);
    const SolveReport it = solve_monotone_iterative(prob, d, Direction::increasing, kDefaultConstraintLambda);
    const SolveReport qp = solve_qp(prob, QPConstraint{d.values, Vector()});
    if (!it.converged) throw NumericalError("iterative solver did not converge");
    const double diff = (qp.beta - it.beta).cwiseAbs().maxCoeff();
    return {diff, diff / std::max(qp.beta.cwiseAbs().maxCoeff(), 1e-300), static_cast<double>(qp.active_set.size()),
            static_cast<double>(qp.iterations), static_cast<double>(it.iterations)};
}

} // namespace

DataFrame simulate(const std::string& scenario, const SimulationOptions& o) {
    std::vector<std::string> cols;
    if (scenario == "cyclic")
        cols = {"mse_cyclic", "mse_unconstrained", "seam_gap_cyclic", "seam_gap_unconstrained"};
    else if (scenario == "monotone")
        cols = {"mse_constrained", "mse_unconstrained", "violations_constrained", "violations_unconstrained"};
    else if (scenario == "qp-vs-iter")
        cols = {"max_abs_diff", "rel_diff", "active_constraints", "qp_iterations", "iterative_iterations"};
    else
        throw InputError("unknown scenario '" + scenario + "' (expected cyclic, monotone or qp-vs-iter)");
    if (o.reps < 1) throw InputError("reps must be >= 1");

    std::vector<std::vector<double>> rows(static_cast<std::size_t>(o.reps));
    std::vector<std::exception_ptr> errors(rows.size());
#pragma omp parallel for schedule(dynamic) if (o.parallel)
    for (int r = 0; r < o.reps; ++r) {
        try {
            auto rng = rng_stream(o.seed, static_cast<std::uint64_t>(r));
            const std::uint64_t fold_seed = mix_seed(o.seed + 7919u * static_cast<std::uint64_t>(r));
            auto& row = rows[static_cast<std::size_t>(r)];
            if (scenario == "cyclic")
                row = cyclic_rep(rng, o, fold_seed);
            else if (scenario == "monotone")
                row = monotone_rep(rng, o, fold_seed);
            else
                row = qp_rep(rng, o);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    DataFrame out;
    std::vector<double> rep(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) rep[r] = static_cast<double>(r + 1);
    out.add("rep", std::move(rep));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        std::vector<double> v(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) v[r] = rows[r][c];
        out.add(cols[c], std::move(v));
    }
    return out;
}

} // namespace shapeboost
