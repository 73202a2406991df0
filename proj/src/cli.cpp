#include "shapeboost/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "shapeboost/boost.hpp"
#include "shapeboost/config.hpp"
#include "shapeboost/error.hpp"
#include "shapeboost/infer.hpp"
#include "shapeboost/log.hpp"
#include "shapeboost/simulate.hpp"

namespace shapeboost {

namespace {

struct FitArgs {
    std::string data;
    std::string config;
    std::string out;
};

struct PredictArgs {
    std::string model;
    std::string data;
    std::string type = "link";
};

struct EffectsArgs {
    std::string model;
    std::string learner;
    int grid = 100;
    std::string data;
    bool ci = false;
    int boot = 1000;
    std::vector<double> levels{0.80, 0.95};
    bool simultaneous = false;
    int inner_folds = 5;
    int inner_m_max = 200;
    std::string bands;
    std::optional<std::uint64_t> seed;
};

struct SimulateArgs {
    std::string scenario;
    int reps = 100;
    std::uint64_t seed = 1;
    int n = 0;
    double sigma = -1.0;
};

void cmd_fit(const FitArgs& a, std::ostream& out) {
    const ModelConfig cfg = read_config_file(a.config);
    const DataFrame data = read_csv_file(a.data);
    BoostConfig boost_cfg = cfg.boost;
    if (cfg.cv) {
        const CVResult cv = cvrisk(data, cfg.response, cfg.terms, cfg.loss, boost_cfg, *cfg.cv);
        boost_cfg.m_stop = cv.optimal;
        out << "cv optimal mstop: " << cv.optimal << " (mean risk " << format_double(cv.mean_risk()[cv.optimal])
            << ")\n";
    }
    const BoostModel model = boost(data, cfg.response, cfg.terms, cfg.loss, boost_cfg);
    save_model_file(model, a.out);

    const auto counts = model.selection_counts();
    out << "learner,selected,frequency\n";
    for (std::size_t l = 0; l < counts.size(); ++l) {
        const double freq = model.trace().empty() ? 0.0 : static_cast<double>(counts[l]) / model.trace().size();
        out << model.learners()[l]->spec().name << ',' << counts[l] << ',' << format_double(freq) << '\n';
    }
    const Vector y = response_vector(data, cfg.response, cfg.loss);
    out << "mstop: " << model.config().m_stop << '\n';
    out << "in-sample risk: " << format_double(mean_risk(cfg.loss, y, model.predict(data), Vector())) << '\n';
}

void cmd_predict(const PredictArgs& a, std::ostream& out) {
    const BoostModel model = load_model_file(a.model);
    const PredictType type = parse_predict_type(a.type);
    const DataFrame data = read_csv_file(a.data);
    if (data.rows() == 0) return;
    const Vector p = model.predict(data, type);
    out << "prediction\n";
    for (Eigen::Index i = 0; i < p.size(); ++i) out << format_double(p[i]) << '\n';
}

std::size_t find_learner(const BoostModel& model, const std::string& key) {
    for (std::size_t l = 0; l < model.learners().size(); ++l)
        if (model.learners()[l]->spec().name == key) return l;
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
    if (ec == std::errc() && ptr == key.data() + key.size() && idx < model.learners().size()) return idx;
    throw InputError("unknown learner '" + key + "'");
}

void cmd_effects(const EffectsArgs& a, std::ostream& out) {
    const BoostModel model = load_model_file(a.model);
    const std::size_t l = find_learner(model, a.learner);
    const LearnerBlueprint& bp = *model.learners()[l];
    if (!effect_supported(bp)) throw InputError("learner '" + bp.spec().name + "' has no one-dimensional effect");
    if (a.ci && a.data.empty()) throw InputError("--ci needs --data with the training rows");

    DataFrame data;
    if (!a.data.empty()) data = read_csv_file(a.data);
    std::optional<std::pair<double, double>> range;
    if (bp.spec().kind == LearnerKind::linear) {
        if (a.data.empty()) throw InputError("linear learner effects need --data to fix the grid range");
        const auto& col = data.column(bp.spec().covariates[0]);
        if (col.empty()) throw InputError("no rows in '" + a.data + "'");
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        range = std::pair{*mn, *mx};
    }
    const EffectGrid eg = effect_grid(bp, l, a.grid, range);
    const Vector effect = effect_values(bp, eg.design, model.coefficients().beta[l]);

    std::vector<ConfidenceBand> bands;
    if (a.ci) {
        std::vector<LearnerSpec> specs;
        for (const auto& lp : model.learners()) specs.push_back(lp->spec());
        BoostConfig cfg = model.config();
        if (a.seed) cfg.seed = *a.seed;
        InferConfig inf;
        inf.n_boot = a.boot;
        inf.levels = a.levels;
        inf.grid_size = a.grid;
        inf.inner_folds = a.inner_folds;
        inf.inner_m_max = a.inner_m_max;
        inf.simultaneous = a.simultaneous;
        const BootstrapResult res = bootstrap_ci(data, model.response(), specs, model.loss(), cfg, inf);
        for (std::size_t k = 0; k < res.effects.size(); ++k)
            if (res.effects[k].learner == l) bands.push_back(res.pointwise[k]);
        for (const auto& b : res.simultaneous)
            if (b.learner == l) bands.push_back(b);
    }

    const bool two_d = !eg.grid2.empty();
    out << (two_d ? "grid,grid2,effect" : "grid,effect");
    for (const auto& b : bands)
        for (double lev : b.levels) {
            const std::string pre = b.kind == BandKind::simultaneous ? "sim_" : "";
            out << ',' << pre << "lower_" << format_double(lev) << ',' << pre << "upper_" << format_double(lev);
        }
    out << '\n';
    for (std::size_t g = 0; g < eg.grid.size(); ++g) {
        out << format_double(eg.grid[g]);
        if (two_d) out << ',' << format_double(eg.grid2[g]);
        out << ',' << format_double(effect[static_cast<Eigen::Index>(g)]);
        for (const auto& b : bands)
            for (std::size_t k = 0; k < b.levels.size(); ++k)
                out << ',' << format_double(b.lower(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(g))) << ','
                    << format_double(b.upper(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(g)));
        out << '\n';
    }
    if (!a.bands.empty()) {
        if (bands.empty()) throw InputError("--bands needs --ci");
        std::ofstream f(a.bands);
        if (!f) throw InputError("cannot write '" + a.bands + "'");
        write_band_csv(f, bands);
    }
}

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    SimulationOptions o;
    o.reps = a.reps;
    o.seed = a.seed;
    o.n = a.n;
    o.sigma = a.sigma;
    write_csv(out, simulate(a.scenario, o));
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Constrained additive models by component-wise boosting", "shapeboost"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP worker threads (0 keeps the runtime default)")
        ->check(CLI::NonNegativeNumber);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model from CSV data and a YAML config");
    fit_cmd->add_option("--data", fit.data, "Training CSV")->required();
    fit_cmd->add_option("--config", fit.config, "Model config (YAML)")->required();
    fit_cmd->add_option("--out", fit.out, "Output model file")->required();

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "Predict for the rows of a CSV file");
    pred_cmd->add_option("--model", pred.model, "Model file")->required();
    pred_cmd->add_option("--data", pred.data, "Input CSV")->required();
    pred_cmd->add_option("--type", pred.type, "link or response")->check(CLI::IsMember({"link", "response"}));

    EffectsArgs eff;
    auto* eff_cmd = app.add_subcommand("effects", "Export a learner's centered effect on a grid");
    eff_cmd->add_option("--model", eff.model, "Model file")->required();
    eff_cmd->add_option("--learner", eff.learner, "Learner name or index")->required();
    eff_cmd->add_option("--grid", eff.grid, "Grid points per axis")->check(CLI::PositiveNumber);
    eff_cmd->add_option("--data", eff.data, "Training CSV (bootstrap and linear grid range)");
    eff_cmd->add_flag("--ci", eff.ci, "Add bootstrap confidence bands");
    eff_cmd->add_option("--boot", eff.boot, "Outer bootstrap samples")->check(CLI::Range(2, 1000000));
    eff_cmd->add_option("--levels", eff.levels, "Confidence levels")->delimiter(',');
    eff_cmd->add_flag("--simultaneous", eff.simultaneous, "Also report simultaneous bands");
    eff_cmd->add_option("--inner-folds", eff.inner_folds, "Folds of the inner stopping CV");
    eff_cmd->add_option("--inner-mmax", eff.inner_m_max, "Iterations scanned by the inner CV");
    eff_cmd->add_option("--bands", eff.bands, "Write bands in long format to this CSV");
    eff_cmd->add_option("--seed", eff.seed, "Bootstrap seed (defaults to the model seed)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation scenario and print metrics");
    sim_cmd->add_option("scenario", sim.scenario, "cyclic, monotone or qp-vs-iter")->required();
    sim_cmd->add_option("--reps", sim.reps, "Replications")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "Random seed");
    sim_cmd->add_option("--n", sim.n, "Sample size (scenario default when 0)");
    sim_cmd->add_option("--sigma", sim.sigma, "Noise standard deviation (scenario default when negative)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    }

    auto prev = set_warning_handler([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
    int code = kExitOk;
    try {
        if (threads > 0) omp_set_num_threads(threads);
        if (*fit_cmd) cmd_fit(fit, out);
        if (*pred_cmd) cmd_predict(pred, out);
        if (*eff_cmd) cmd_effects(eff, out);
        if (*sim_cmd) cmd_simulate(sim, out);
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        code = kExitNumericalError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        code = kExitUserError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        code = kExitNumericalError;
    }
    set_warning_handler(std::move(prev));
    return code;
}

} // namespace shapeboost
