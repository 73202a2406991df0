// Serial reference path vs OpenMP fan-out for the boosting loop and CV.
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "shapeboost/boost.hpp"
#include "shapeboost/log.hpp"

using namespace shapeboost;

namespace {

DataFrame make_data(int n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 0.3);
    DataFrame d;
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < 8; ++c) {
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x[i] = u(rng);
            y[i] += std::sin(3.0 * (c + 1) * x[i]);
        }
        d.add("x" + std::to_string(c), std::move(x));
    }
    for (auto& v : y) v += nd(rng);
    d.add("y", std::move(y));
    return d;
}

std::vector<LearnerSpec> make_specs() {
    std::vector<LearnerSpec> specs;
    for (int c = 0; c < 8; ++c) {
        LearnerSpec s;
        s.name = "f" + std::to_string(c);
        s.covariates = {"x" + std::to_string(c)};
        MarginSpec m;
        if (c % 2 == 1) {
            s.kind = LearnerKind::monotone_pspline;
            m.constraint = Constraint::increasing;
        }
        s.margins = {m};
        specs.push_back(s);
    }
    return specs;
}

void BM_RunBoost(benchmark::State& state) {
    set_warning_handler({});
    const bool parallel = state.range(0) != 0;
    const DataFrame d = make_data(static_cast<int>(state.range(1)));
    const auto learners = build_learners(make_specs(), d);
    const Vector y = response_vector(d, "y", LossKind::gaussian);
    for (auto _ : state) {
        BoostRun r = run_boost(learners, y, Vector(), LossKind::gaussian, 0.1, 100, parallel);
        benchmark::DoNotOptimize(r.eta.data());
    }
}
BENCHMARK(BM_RunBoost)->ArgNames({"parallel", "n"})->ArgsProduct({{0, 1}, {500, 2000}})->Unit(benchmark::kMillisecond);

void BM_CvRisk(benchmark::State& state) {
    set_warning_handler({});
    BoostConfig cfg;
    cfg.parallel = state.range(0) != 0;
    const DataFrame d = make_data(500);
    const auto specs = make_specs();
    for (auto _ : state) {
        CVResult cv = cvrisk(d, "y", specs, LossKind::gaussian, cfg, {ResampleConfig::Kind::kfold, 5, 100});
        benchmark::DoNotOptimize(cv.optimal);
    }
}
BENCHMARK(BM_CvRisk)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
