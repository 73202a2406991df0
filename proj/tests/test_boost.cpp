#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shapeboost/boost.hpp"
#include "shapeboost/error.hpp"
#include "shapeboost/log.hpp"

using namespace shapeboost;

namespace {

class QuietWarnings : public ::testing::Environment {
public:
    void SetUp() override { set_warning_handler({}); }
};
const auto* const kQuiet = ::testing::AddGlobalTestEnvironment(new QuietWarnings);

LearnerSpec linear(const std::string& name, const std::string& cov) {
    LearnerSpec s;
    s.name = name;
    s.kind = LearnerKind::linear;
    s.covariates = {cov};
    return s;
}

LearnerSpec spline(const std::string& name, const std::string& cov, Constraint c = Constraint::none) {
    LearnerSpec s;
    s.name = name;
    s.kind = c == Constraint::none ? LearnerKind::pspline : LearnerKind::monotone_pspline;
    s.covariates = {cov};
    MarginSpec m;
    m.n_inner = 10;
    m.constraint = c;
    s.margins = {m};
    return s;
}

DataFrame toy(std::uint64_t seed, std::size_t n, double noise, bool counts = false) {
    std::mt19937_64 rng(seed);
    const auto x = oracle::uniform(rng, n, 0.0, 1.0);
    const auto z = oracle::uniform(rng, n, 0.0, 1.0);
    std::normal_distribution<double> nd(0.0, noise);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double eta = 1.0 + 2.0 * x[i] + std::sin(5.0 * z[i]);
        if (counts) {
            std::poisson_distribution<int> pd(std::exp(0.3 * eta));
            y[i] = pd(rng);
        } else {
            y[i] = eta + nd(rng);
        }
    }
    DataFrame d;
    d.add("x", x);
    d.add("z", z);
    d.add("y", y);
    return d;
}

double total_risk(LossKind loss, const Vector& y, const Vector& eta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += loss_risk(loss, y[i], eta[i]);
    return s;
}

} // namespace

TEST(Loss, GradientSpecialCases) {
    EXPECT_TRUE(negative_gradient(LossKind::gaussian, Vector{{1.5, -2.0}}, Vector{{1.5, -2.0}}).isZero(0.0));
    EXPECT_EQ(negative_gradient(LossKind::poisson, Vector{{1.0}}, Vector{{0.0}})[0], 0.0);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ue(-2.0, 2.0);
    std::poisson_distribution<int> pc(3.0);
    for (LossKind loss : {LossKind::gaussian, LossKind::poisson}) {
        for (int t = 0; t < 100; ++t) {
            const double y = loss == LossKind::gaussian ? 3.0 * ue(rng) : pc(rng);
            const double eta = ue(rng);
            const double h = 1e-5;
            const double fd = -(loss_risk(loss, y, eta + h) - loss_risk(loss, y, eta - h)) / (2 * h);
            const double g = negative_gradient(loss, Vector::Constant(1, y), Vector::Constant(1, eta))[0];
            EXPECT_LE(std::abs(g - fd), 1e-6 * std::max(1.0, std::abs(g)));
        }
    }
}

TEST(Loss, OffsetsMinimizeConstantRisk) {
    const Vector y{{0.0, 1.0, 4.0, 2.0, 3.0}};
    for (LossKind loss : {LossKind::gaussian, LossKind::poisson}) {
        const double off = loss_offset(loss, y);
        double best = off;
        double best_risk = total_risk(loss, y, Vector::Constant(5, off));
        for (double c = -3.0; c <= 5.0; c += 1e-3) {
            const double r = total_risk(loss, y, Vector::Constant(5, c));
            if (r < best_risk) {
                best_risk = r;
                best = c;
            }
        }
        EXPECT_NEAR(best, off, 1e-3);
    }
    EXPECT_THROW(loss_offset(LossKind::poisson, Vector::Zero(3)), InputError);
    EXPECT_THROW(check_response(LossKind::poisson, Vector{{1.0, -1.0}}), InputError);
    EXPECT_THROW(check_response(LossKind::poisson, Vector{{1.5}}), InputError);
}

TEST(Boost, ZeroIterationsIsOffsetOnly) {
    const DataFrame d = toy(2, 60, 0.2);
    BoostConfig cfg;
    cfg.m_stop = 0;
    const BoostModel m = boost(d, "y", {spline("f", "x")}, LossKind::gaussian, cfg);
    const Vector p = m.predict(d);
    EXPECT_EQ(p.maxCoeff(), p.minCoeff());
    EXPECT_TRUE(m.trace().empty());
}

TEST(Boost, LinearLearnerReachesOls) {
    const DataFrame d = toy(3, 100, 0.5);
    BoostConfig cfg;
    cfg.step = 0.1;
    cfg.m_stop = 500;
    const BoostModel m = boost(d, "y", {linear("lin", "x")}, LossKind::gaussian, cfg);
    Matrix x(100, 2);
    x.col(0).setOnes();
    x.col(1) = Eigen::Map<const Vector>(d.column("x").data(), 100);
    const Vector beta = oracle::ols(x, Eigen::Map<const Vector>(d.column("y").data(), 100));
    const Vector& acc = m.coefficients().beta[0];
    EXPECT_NEAR(m.offset() + acc[0], beta[0], 1e-4);
    EXPECT_NEAR(acc[1], beta[1], 1e-4);
}

TEST(Boost, PerfectLearnerAlwaysSelected) {
    std::mt19937_64 rng(4);
    DataFrame d;
    const auto x = oracle::uniform(rng, 80, 0.0, 1.0);
    d.add("x", x);
    d.add("z", oracle::uniform(rng, 80, 0.0, 1.0));
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v);
    d.add("y", y);
    BoostConfig cfg;
    cfg.m_stop = 50;
    const BoostModel m = boost(d, "y", {spline("g", "z"), linear("lin", "x")}, LossKind::gaussian, cfg);
    for (int t : m.trace()) EXPECT_EQ(t, 1);
}

TEST(Boost, TrainingRiskNonIncreasing) {
    const DataFrame d = toy(5, 120, 0.3);
    const auto learners = build_learners({spline("fx", "x"), spline("fz", "z"), linear("lin", "x")}, d);
    const Vector y = response_vector(d, "y", LossKind::gaussian);
    std::vector<double> path;
    run_boost(learners, y, Vector(), LossKind::gaussian, 0.1, 200, true,
              [&](int, const Vector& eta) { path.push_back(mean_risk(LossKind::gaussian, y, eta, Vector())); });
    ASSERT_EQ(path.size(), 201u);
    for (std::size_t i = 1; i < path.size(); ++i) EXPECT_LE(path[i], path[i - 1] + 1e-12);
}

TEST(Boost, DeterministicAcrossRunsAndThreads) {
    const DataFrame d = toy(6, 120, 0.3);
    const std::vector<LearnerSpec> specs{spline("fx", "x"), spline("fz", "z", Constraint::increasing),
                                         linear("lin", "z")};
    BoostConfig cfg;
    cfg.m_stop = 80;
    cfg.parallel = true;
    const BoostModel a = boost(d, "y", specs, LossKind::gaussian, cfg);
    const BoostModel b = boost(d, "y", specs, LossKind::gaussian, cfg);
    cfg.parallel = false;
    const BoostModel c = boost(d, "y", specs, LossKind::gaussian, cfg);
    EXPECT_EQ(a.trace(), b.trace());
    EXPECT_EQ(a.trace(), c.trace());
    EXPECT_EQ(save_model(a), save_model(b));
    cfg.parallel = true;
    EXPECT_EQ(save_model(a), save_model(boost(d, "y", specs, LossKind::gaussian, cfg)));
}

TEST(Boost, SelectionInvariantToGradientScale) {
    const DataFrame d = toy(7, 100, 0.3);
    const auto learners = build_learners({spline("fx", "x"), spline("fz", "z"), linear("lin", "x")}, d);
    std::vector<BaseLearner> base;
    for (std::size_t l = 0; l < learners.size(); ++l) base.emplace_back(learners[l], Vector(), static_cast<int>(l));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 10; ++t) {
        Vector u(100);
        for (auto& v : u) v = nd(rng);
        auto argmin = [&](const Vector& g) {
            std::size_t best = 0;
            double rss = base[0].fit(g).rss;
            for (std::size_t l = 1; l < base.size(); ++l) {
                const double r = base[l].fit(g).rss;
                if (r < rss) {
                    rss = r;
                    best = l;
                }
            }
            return best;
        };
        EXPECT_EQ(argmin(u), argmin(7.5 * u));
    }
}

TEST(Boost, PredictionReplaysInternalEta) {
    const DataFrame d = toy(8, 100, 0.3);
    const std::vector<LearnerSpec> specs{spline("fx", "x"), spline("fz", "z")};
    const auto learners = build_learners(specs, d);
    const Vector y = response_vector(d, "y", LossKind::gaussian);
    BoostRun run = run_boost(learners, y, Vector(), LossKind::gaussian, 0.1, 150, false);
    const Vector eta = run.eta;
    const BoostModel m(LossKind::gaussian, BoostConfig{}, "y", run.offset, learners, std::move(run.coef),
                       std::move(run.trace));
    EXPECT_LE((m.predict(d) - eta).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(m.predict(d, PredictType::link), m.predict(d, PredictType::response));
}

TEST(Boost, PoissonResponse) {
    const DataFrame d = toy(9, 150, 0.0, true);
    BoostConfig cfg;
    cfg.m_stop = 100;
    const BoostModel m = boost(d, "y", {spline("fx", "x"), spline("fz", "z")}, LossKind::poisson, cfg);
    const Vector link = m.predict(d, PredictType::link);
    const Vector resp = m.predict(d, PredictType::response);
    EXPECT_LE((resp - link.array().exp().matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT(resp.minCoeff(), 0.0);
    EXPECT_EQ(inverse_link(LossKind::poisson, Vector::Zero(1))[0], 1.0);
}

TEST(Boost, SolverFailureNamesIteration) {
    DataFrame d;
    d.add("x", {0.0, 1.0, 2.0, 3.0});
    d.add("y", {1.0, 2.0, 3.0, 4.0});
    EXPECT_THROW(boost(d, "y", {}, LossKind::gaussian, BoostConfig{}), InputError);
    BoostConfig bad;
    bad.step = 0.0;
    EXPECT_THROW(boost(d, "y", {linear("l", "x")}, LossKind::gaussian, bad), InputError);
}

TEST(CV, IterationZeroIsOffsetRisk) {
    const DataFrame d = toy(10, 100, 0.3);
    const std::vector<LearnerSpec> specs{spline("fx", "x"), spline("fz", "z")};
    BoostConfig cfg;
    cfg.seed = 10;
    const CVResult cv = cvrisk(d, "y", specs, LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 5, 50});
    const auto& y = d.column("y");
    ASSERT_EQ(cv.risk.rows(), 5);
    Vector covered = Vector::Zero(100);
    for (int r = 0; r < 5; ++r) {
        double sw = 0.0;
        double swy = 0.0;
        for (int i = 0; i < 100; ++i) {
            sw += cv.train_weights[r][i];
            swy += cv.train_weights[r][i] * y[static_cast<std::size_t>(i)];
        }
        const double mean = swy / sw;
        double risk = 0.0;
        double n = 0.0;
        for (int i = 0; i < 100; ++i)
            if (cv.test_weights[r][i] > 0.0) {
                risk += 0.5 * std::pow(y[static_cast<std::size_t>(i)] - mean, 2);
                n += 1.0;
            }
        EXPECT_NEAR(cv.risk(r, 0), risk / n, 1e-12);
        covered += cv.test_weights[r];
        EXPECT_TRUE(cv.risk.row(r).allFinite());
    }
    EXPECT_EQ(covered, Vector::Ones(100));
}

TEST(CV, StrongSignalStopsLate) {
    const DataFrame d = toy(11, 120, 0.02);
    BoostConfig cfg;
    const CVResult cv = cvrisk(d, "y", {spline("fx", "x"), spline("fz", "z")}, LossKind::gaussian, cfg,
                               {ResampleConfig::Kind::kfold, 5, 100});
    EXPECT_GT(cv.optimal, 0);
    EXPECT_LE(cv.optimal, 100);
}

TEST(CV, PureNoiseStopsEarly) {
    const int m_max = 200;
    double total = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        std::mt19937_64 rng(1000 + rep);
        DataFrame d;
        d.add("x", oracle::uniform(rng, 100, 0.0, 1.0));
        std::normal_distribution<double> nd;
        std::vector<double> y(100);
        for (auto& v : y) v = nd(rng);
        d.add("y", y);
        BoostConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rep);
        total += cvrisk(d, "y", {spline("fx", "x")}, LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 10, m_max})
                     .optimal;
    }
    EXPECT_LE(total / 20.0, 0.05 * m_max);
}

TEST(CV, BootstrapResampling) {
    const DataFrame d = toy(12, 80, 0.3);
    BoostConfig cfg;
    const CVResult cv = cvrisk(d, "y", {spline("fx", "x")}, LossKind::gaussian, cfg,
                               {ResampleConfig::Kind::bootstrap, 4, 30});
    ASSERT_EQ(cv.risk.rows(), 4);
    for (int r = 0; r < 4; ++r) {
        EXPECT_EQ(cv.train_weights[r].sum(), 80.0);
        for (int i = 0; i < 80; ++i) EXPECT_EQ(cv.test_weights[r][i] > 0.0, cv.train_weights[r][i] == 0.0);
    }
}

TEST(CV, Errors) {
    const DataFrame d = toy(13, 5, 0.3);
    BoostConfig cfg;
    EXPECT_THROW(cvrisk(d, "y", {linear("l", "x")}, LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 6, 10}),
                 InputError);
    EXPECT_THROW(cvrisk(d, "y", {linear("l", "x")}, LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 1, 10}),
                 InputError);
}

TEST(ModelIO, RoundTripIsExact) {
    const DataFrame d = toy(14, 100, 0.3);
    BoostConfig cfg;
    cfg.m_stop = 60;
    LearnerSpec cyc;
    cyc.name = "cz";
    cyc.kind = LearnerKind::cyclic_pspline;
    cyc.covariates = {"z"};
    MarginSpec m;
    m.constraint = Constraint::cyclic;
    m.range = std::pair{0.0, 1.0};
    cyc.margins = {m};
    const BoostModel a = boost(d, "y", {spline("fx", "x", Constraint::increasing), cyc, linear("l", "x")},
                               LossKind::gaussian, cfg);
    const std::string text = save_model(a);
    const BoostModel b = load_model(text);
    EXPECT_EQ((a.predict(d) - b.predict(d)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(save_model(b), text);
    EXPECT_EQ(a.trace(), b.trace());
}

TEST(ModelIO, RejectsBadPayloads) {
    const DataFrame d = toy(15, 60, 0.3);
    BoostConfig cfg;
    cfg.m_stop = 10;
    const std::string text = save_model(boost(d, "y", {spline("fx", "x"), linear("l", "z")}, LossKind::gaussian, cfg));
    EXPECT_THROW(load_model(text.substr(0, text.size() / 2)), FormatError);
    EXPECT_THROW(load_model("{}"), FormatError);

    std::string wrong_version = text;
    wrong_version.replace(wrong_version.find("\"version\": 1"), 12, "\"version\": 9");
    EXPECT_THROW(load_model(wrong_version), FormatError);

    std::string wrong_count = text;
    wrong_count.replace(wrong_count.find("\"n_learners\": 2"), 15, "\"n_learners\": 3");
    try {
        (void)load_model(wrong_count);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("declares 3 learners"), std::string::npos) << e.what();
    }
}
