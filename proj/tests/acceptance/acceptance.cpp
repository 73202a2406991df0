// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "shapeboost/boost.hpp"
#include "shapeboost/infer.hpp"
#include "shapeboost/log.hpp"
#include "shapeboost/penalty.hpp"
#include "shapeboost/rng.hpp"
#include "shapeboost/simulate.hpp"

using namespace shapeboost;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double column_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double column_max(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

Outcome qp_vs_iterative() {
    const auto t0 = Clock::now();
    SimulationOptions o;
    o.reps = 50;
    o.seed = 1;
    const DataFrame r = simulate("qp-vs-iter", o);
    const double t = seconds_since(t0);
    const double worst = column_max(r.column("rel_diff"));
    const double active = column_mean(r.column("active_constraints"));
    return {worst <= 1e-4 && t < 30.0,
            fmt("max relative discrepancy %.3g (<= 1e-4), mean active constraints %.1f, %.2f s (< 30 s)", worst,
                active, t)};
}

Outcome cyclic_superiority() {
    const auto t0 = Clock::now();
    SimulationOptions o;
    o.reps = 100;
    o.seed = 2;
    const DataFrame r = simulate("cyclic", o);
    const double t = seconds_since(t0);
    const double mc = column_mean(r.column("mse_cyclic"));
    const double mu = column_mean(r.column("mse_unconstrained"));
    const double gap = column_max(r.column("seam_gap_cyclic"));
    return {mc < mu && gap <= 1e-8 && t < 120.0,
            fmt("mean MSE cyclic %.4g < unconstrained %.4g, max seam gap %.3g (<= 1e-8), %.1f s (< 120 s)", mc, mu,
                gap, t)};
}

Outcome monotone_conformance() {
    SimulationOptions o;
    o.reps = 100;
    o.seed = 3;
    const DataFrame r = simulate("monotone", o);
    const double viol = column_max(r.column("violations_constrained"));
    const double mc = column_mean(r.column("mse_constrained"));
    const double mu = column_mean(r.column("mse_unconstrained"));
    const double ratio = mc / mu;
    return {viol == 0.0 && ratio >= 0.5 && ratio <= 2.0,
            fmt("max violations %g (== 0), MSE constrained/unconstrained %.4g / %.4g = %.3f (within [0.5, 2])", viol,
                mc, mu, ratio)};
}

Outcome bivariate_monotone() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> nd(0.0, 0.05);
    std::vector<double> x1(200), x2(200), y(200);
    for (int i = 0; i < 200; ++i) {
        x1[i] = u(rng);
        x2[i] = u(rng);
        y[i] = x1[i] * x2[i] + nd(rng);
    }
    DataFrame d;
    d.add("x1", x1);
    d.add("x2", x2);
    d.add("y", y);
    LearnerSpec s;
    s.name = "surface";
    s.kind = LearnerKind::tensor;
    s.covariates = {"x1", "x2"};
    MarginSpec m;
    m.degree = 1;
    m.n_inner = 2;
    m.constraint = Constraint::increasing;
    s.margins = {m, m};
    BoostConfig cfg;
    cfg.m_stop = 200;
    const BoostModel model = boost(d, "y", {s}, LossKind::gaussian, cfg);
    const Vector& beta = model.coefficients().beta[0];
    if (beta.size() != 16) return {false, fmt("expected 16 coefficients, got %ld", static_cast<long>(beta.size()))};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i < 3) worst = std::min(worst, beta[(i + 1) * 4 + j] - beta[i * 4 + j]);
            if (j < 3) worst = std::min(worst, beta[i * 4 + j + 1] - beta[i * 4 + j]);
        }
    return {worst >= -1e-10, fmt("smallest grid difference %.3g (>= -1e-10)", worst)};
}

Outcome l2_limit() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<double> x(100), y(100);
    for (int i = 0; i < 100; ++i) {
        x[i] = 2.0 * nd(rng);
        y[i] = 0.5 - 1.5 * x[i] + nd(rng);
    }
    DataFrame d;
    d.add("x", x);
    d.add("y", y);
    LearnerSpec s;
    s.name = "lin";
    s.kind = LearnerKind::linear;
    s.covariates = {"x"};
    BoostConfig cfg;
    cfg.step = 0.1;
    cfg.m_stop = 500;
    const auto t0 = Clock::now();
    const BoostModel model = boost(d, "y", {s}, LossKind::gaussian, cfg);
    const double t = seconds_since(t0);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < 100; ++i) {
        mx += x[i] / 100.0;
        my += y[i] / 100.0;
    }
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 100; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    const double icept = my - slope * mx;
    const Vector& b = model.coefficients().beta[0];
    const double err = std::max(std::abs(model.offset() + b[0] - icept), std::abs(b[1] - slope));
    return {err <= 1e-4 && t < 1.0, fmt("max coefficient error vs OLS %.3g (<= 1e-4), %.3f s (< 1 s)", err, t)};
}

Outcome gradient_oracle() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ue(-2.0, 2.0);
    std::poisson_distribution<int> pc(4.0);
    double worst = 0.0;
    for (LossKind loss : {LossKind::gaussian, LossKind::poisson}) {
        for (int t = 0; t < 100; ++t) {
            const double y = loss == LossKind::gaussian ? 3.0 * ue(rng) : pc(rng);
            const double eta = ue(rng);
            const double h = 1e-5;
            const double fd = -(loss_risk(loss, y, eta + h) - loss_risk(loss, y, eta - h)) / (2.0 * h);
            const double g = negative_gradient(loss, Vector::Constant(1, y), Vector::Constant(1, eta))[0];
            worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(g)));
        }
    }
    return {worst <= 1e-6, fmt("max relative deviation %.3g over 200 points (<= 1e-6)", worst)};
}

Outcome null_space() {
    double worst_diff = 0.0, worst_cyc = 0.0, worst_bd = 0.0;
    for (int j = 6; j <= 30; j += 4)
        for (int d = 1; d <= 3; ++d) {
            const Matrix dm = diff_matrix(j, d).values;
            for (int p = 0; p < d; ++p) {
                Vector poly(j);
                for (int i = 0; i < j; ++i) poly[i] = std::pow(static_cast<double>(i), p);
                worst_diff = std::max(worst_diff, (dm * poly).cwiseAbs().maxCoeff());
            }
            worst_cyc = std::max(worst_cyc, (cyclic_diff_matrix(j, d).values * Vector::Ones(j)).cwiseAbs().maxCoeff());
            for (Sides side : {Sides::left, Sides::right, Sides::both}) {
                const Matrix p = boundary_penalty(j, 2, 3, side);
                Vector lin(j);
                for (int i = 0; i < j; ++i) lin[i] = 0.7 * i - 2.0;
                worst_bd = std::max(worst_bd, std::abs(lin.dot(p * lin)));
            }
        }
    return {worst_diff <= 1e-12 && worst_cyc <= 1e-12 && worst_bd <= 1e-12,
            fmt("difference %.3g, cyclic %.3g, boundary %.3g (all <= 1e-12)", worst_diff, worst_cyc, worst_bd)};
}

Outcome bootstrap_sanity() {
    const auto t0 = Clock::now();
    const int reps = 200;
    const double slope = 1.0;
    int covered = 0;
    bool nested = true;
    int failed_boots = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 rng(mix_seed(800 + static_cast<std::uint64_t>(rep)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> nd;
        std::vector<double> x(100), y(100);
        double xbar = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double v = u(rng);
            x[i] = 3.0 * v * v;
            y[i] = 2.0 + slope * x[i] + nd(rng);
            xbar += x[i] / 100.0;
        }
        DataFrame d;
        d.add("x", x);
        d.add("y", y);
        LearnerSpec s;
        s.name = "lin";
        s.kind = LearnerKind::linear;
        s.covariates = {"x"};
        BoostConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rep) + 1;
        InferConfig inf;
        inf.n_boot = 200;
        inf.grid_size = 21;
        inf.inner_m_max = 100;
        const BootstrapResult r = bootstrap_ci(d, "y", {s}, LossKind::gaussian, cfg, inf);
        failed_boots += r.n_failed;
        const ConfidenceBand& b = r.pointwise[0];
        for (Eigen::Index g = 0; g < b.lower.cols(); ++g)
            nested = nested && b.lower(1, g) <= b.lower(0, g) && b.upper(0, g) <= b.upper(1, g);
        const Eigen::Index mid = b.lower.cols() / 2;
        const double truth = slope * (b.grid[static_cast<std::size_t>(mid)] - xbar);
        covered += b.lower(1, mid) <= truth && truth <= b.upper(1, mid);
    }
    const double t = seconds_since(t0);
    const double coverage = static_cast<double>(covered) / reps;
    return {nested && coverage >= 0.88 && coverage <= 0.99 && t < 600.0,
            fmt("95%% coverage at grid median %.3f (in [0.88, 0.99]), nesting %s, %d failed resamples, %.1f s (< 600 s)",
                coverage, nested ? "holds" : "violated", failed_boots, t)};
}

Outcome determinism() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 0.3);
    std::vector<double> x(150), z(150), y(150);
    for (int i = 0; i < 150; ++i) {
        x[i] = u(rng);
        z[i] = u(rng);
        y[i] = std::sin(6.0 * z[i]) + x[i] * x[i] + nd(rng);
    }
    DataFrame d;
    d.add("x", x);
    d.add("z", z);
    d.add("y", y);
    std::vector<LearnerSpec> specs(3);
    specs[0].name = "mono";
    specs[0].kind = LearnerKind::monotone_pspline;
    specs[0].covariates = {"x"};
    MarginSpec inc;
    inc.constraint = Constraint::increasing;
    specs[0].margins = {inc};
    specs[1].name = "smooth";
    specs[1].covariates = {"z"};
    specs[1].margins = {MarginSpec{}};
    specs[2].name = "lin";
    specs[2].kind = LearnerKind::linear;
    specs[2].covariates = {"z"};

    auto fit = [&](bool parallel) {
        BoostConfig cfg;
        cfg.seed = 17;
        cfg.parallel = parallel;
        const CVResult cv = cvrisk(d, "y", specs, LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 5, 150});
        cfg.m_stop = cv.optimal;
        const BoostModel m = boost(d, "y", specs, LossKind::gaussian, cfg);
        return std::pair{save_model(m), m.trace()};
    };
    omp_set_num_threads(4);
    const auto a = fit(true);
    const auto b = fit(true);
    omp_set_num_threads(1);
    const auto c = fit(false);
    const bool same = a.first == b.first && a.second == b.second && a.first == c.first;
    return {same, fmt("parallel runs %s, serial run %s (trace length %zu)",
                      a.first == b.first ? "byte-identical" : "differ", a.first == c.first ? "identical" : "differs",
                      a.second.size())};
}

} // namespace

int main() {
    set_warning_handler({});
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"QP and iterative solvers agree", qp_vs_iterative},
        {"cyclic splines beat unconstrained splines", cyclic_superiority},
        {"monotone fits conform", monotone_conformance},
        {"bivariate monotone surface", bivariate_monotone},
        {"L2 boosting reaches OLS", l2_limit},
        {"loss gradients match finite differences", gradient_oracle},
        {"penalty null spaces", null_space},
        {"bootstrap bands", bootstrap_sanity},
        {"determinism", determinism},
    };
    int failures = 0;
    int id = 0;
    for (const auto& [name, check] : criteria) {
        ++id;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
