#include "shapeboost/boost.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include "shapeboost/error.hpp"
#include "shapeboost/rng.hpp"

namespace shapeboost {

std::string_view to_string(LossKind k) { return k == LossKind::gaussian ? "gaussian" : "poisson"; }

LossKind parse_loss(std::string_view s) {
    if (s == "gaussian") return LossKind::gaussian;
    if (s == "poisson") return LossKind::poisson;
    throw InputError("unknown loss '" + std::string(s) + "'");
}

double loss_risk(LossKind loss, double y, double eta) {
    if (loss == LossKind::gaussian) return 0.5 * (y - eta) * (y - eta);
    return std::exp(eta) - y * eta;
}

Vector negative_gradient(LossKind loss, const Vector& y, const Vector& eta) {
    if (y.size() != eta.size()) throw InputError("negative_gradient: length mismatch");
    if (loss == LossKind::gaussian) return y - eta;
    return y - eta.array().exp().matrix();
}

void check_response(LossKind loss, const Vector& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) throw InputError("row " + std::to_string(i) + ": non-finite response");
        if (loss == LossKind::poisson && (y[i] < 0.0 || y[i] != std::floor(y[i])))
            throw InputError("row " + std::to_string(i) + ": poisson response must be a non-negative count");
    }
}

double loss_offset(LossKind loss, const Vector& y, const Vector& weights) {
    double sw = 0.0;
    double swy = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double w = weights.size() == 0 ? 1.0 : weights[i];
        sw += w;
        swy += w * y[i];
    }
    if (!(sw > 0.0)) throw InputError("offset: no observations with positive weight");
    const double mean = swy / sw;
    if (loss == LossKind::gaussian) return mean;
    if (!(mean > 0.0)) throw InputError("offset: poisson response is zero everywhere");
    return std::log(mean);
}

Vector inverse_link(LossKind loss, const Vector& eta) {
    if (loss == LossKind::gaussian) return eta;
    return eta.array().exp().matrix();
}

double mean_risk(LossKind loss, const Vector& y, const Vector& eta, const Vector& weights) {
    double sw = 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double w = weights.size() == 0 ? 1.0 : weights[i];
        if (w <= 0.0) continue;
        sw += w;
        s += w * loss_risk(loss, y[i], eta[i]);
    }
    if (!(sw > 0.0)) throw InputError("empty out-of-sample fold");
    return s / sw;
}

void BoostConfig::validate() const {
    if (!(step > 0.0 && step <= 1.0)) throw InputError("step must lie in (0, 1]");
    if (m_stop < 0) throw InputError("mstop must be >= 0");
}

namespace {

[[noreturn]] void rethrow_with_context(std::exception_ptr e, const std::string& context) {
    try {
        std::rethrow_exception(e);
    } catch (const NumericalError& ex) {
        throw NumericalError(context + ex.what());
    } catch (const InputError& ex) {
        throw InputError(context + ex.what());
    }
}

} // namespace

BoostRun run_boost(const std::vector<std::shared_ptr<const LearnerBlueprint>>& learners, const Vector& y,
                   const Vector& weights, LossKind loss, double step, int m_stop, bool parallel,
                   const IterationHook& hook) {
    if (learners.empty()) throw InputError("boosting needs at least one learner");
    if (!(step > 0.0 && step <= 1.0)) throw InputError("step must lie in (0, 1]");
    if (m_stop < 0) throw InputError("mstop must be >= 0");
    const Eigen::Index n = y.size();
    for (const auto& bp : learners)
        if (bp->design().rows() != n)
            throw InputError("learner '" + bp->spec().name + "' has a design for a different data set");
    const int n_learners = static_cast<int>(learners.size());

    std::vector<std::unique_ptr<BaseLearner>> base(learners.size());
    std::vector<std::exception_ptr> errors(learners.size());
#pragma omp parallel for schedule(static) if (parallel && n_learners > 1)
    for (int l = 0; l < n_learners; ++l) {
        try {
            base[l] = std::make_unique<BaseLearner>(learners[l], weights, l);
        } catch (...) {
            errors[l] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    BoostRun run;
    std::vector<Eigen::Index> sizes;
    for (const auto& bp : learners) sizes.push_back(bp->n_coef());
    run.coef = CoefficientStore(sizes);
    run.offset = loss_offset(loss, y, weights);
    run.eta = Vector::Constant(n, run.offset);
    run.trace.reserve(static_cast<std::size_t>(m_stop));
    if (hook) hook(0, run.eta);

    std::vector<FittedComponent> fits(learners.size());
    for (int m = 1; m <= m_stop; ++m) {
        const Vector u = negative_gradient(loss, y, run.eta);
#pragma omp parallel for schedule(static) if (parallel && n_learners > 1)
        for (int l = 0; l < n_learners; ++l) {
            try {
                fits[l] = base[l]->fit(u, run.coef.beta[l], step);
            } catch (...) {
                errors[l] = std::current_exception();
            }
        }
        for (std::size_t l = 0; l < errors.size(); ++l)
            if (errors[l]) rethrow_with_context(errors[l], "iteration " + std::to_string(m) + ": ");

        std::size_t best = 0;
        for (std::size_t l = 1; l < fits.size(); ++l)
            if (fits[l].rss < fits[best].rss) best = l;
        run.coef.add(best, step, fits[best].beta);
        run.eta.noalias() += step * fits[best].fitted;
        run.trace.push_back(static_cast<int>(best));
        if (hook) hook(m, run.eta);
    }
    return run;
}

PredictType parse_predict_type(std::string_view s) {
    if (s == "link") return PredictType::link;
    if (s == "response") return PredictType::response;
    throw InputError("unknown prediction type '" + std::string(s) + "'");
}

BoostModel::BoostModel(LossKind loss, BoostConfig config, std::string response, double offset,
                       std::vector<std::shared_ptr<const LearnerBlueprint>> learners, CoefficientStore coef,
                       std::vector<int> trace)
    : loss_(loss),
      config_(config),
      response_(std::move(response)),
      offset_(offset),
      learners_(std::move(learners)),
      coef_(std::move(coef)),
      trace_(std::move(trace)) {}

std::size_t BoostModel::learner_index(const std::string& name) const {
    for (std::size_t l = 0; l < learners_.size(); ++l)
        if (learners_[l]->spec().name == name) return l;
    throw InputError("unknown learner '" + name + "'");
}

Vector BoostModel::contribution(std::size_t learner, const DataFrame& data) const {
    if (learner >= learners_.size()) throw InputError("unknown learner id " + std::to_string(learner));
    return learners_[learner]->design_for(data) * coef_.beta[learner];
}

Vector BoostModel::predict(const DataFrame& data, PredictType type) const {
    Vector eta = Vector::Constant(static_cast<Eigen::Index>(data.rows()), offset_);
    for (std::size_t l = 0; l < learners_.size(); ++l) eta += contribution(l, data);
    return type == PredictType::link ? eta : inverse_link(loss_, eta);
}

std::vector<int> BoostModel::selection_counts() const {
    std::vector<int> counts(learners_.size(), 0);
    for (int t : trace_) ++counts.at(static_cast<std::size_t>(t));
    return counts;
}

Vector response_vector(const DataFrame& data, const std::string& response, LossKind loss) {
    const auto& col = data.column(response);
    Vector y = Eigen::Map<const Vector>(col.data(), static_cast<Eigen::Index>(col.size()));
    check_response(loss, y);
    return y;
}

std::vector<std::shared_ptr<const LearnerBlueprint>> build_learners(const std::vector<LearnerSpec>& specs,
                                                                    const DataFrame& data) {
    if (specs.empty()) throw InputError("boosting needs at least one learner");
    std::vector<std::shared_ptr<const LearnerBlueprint>> out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (specs[j].name == specs[i].name) throw InputError("duplicate learner name '" + specs[i].name + "'");
        out.push_back(LearnerBlueprint::build(specs[i], data));
    }
    return out;
}

BoostModel boost(const DataFrame& data, const std::string& response, const std::vector<LearnerSpec>& specs,
                 LossKind loss, const BoostConfig& config) {
    config.validate();
    const Vector y = response_vector(data, response, loss);
    auto learners = build_learners(specs, data);
    BoostRun run = run_boost(learners, y, Vector(), loss, config.step, config.m_stop, config.parallel);
    return BoostModel(loss, config, response, run.offset, std::move(learners), std::move(run.coef),
                      std::move(run.trace));
}

void ResampleConfig::validate() const {
    if (count < 2) throw InputError(kind == Kind::kfold ? "cv needs at least 2 folds" : "cv needs at least 2 bootstrap samples");
    if (m_max < 0) throw InputError("m_max must be >= 0");
}

Vector CVResult::mean_risk() const { return risk.colwise().mean().transpose(); }

CVResult cvrisk(const std::vector<std::shared_ptr<const LearnerBlueprint>>& learners, const Vector& y,
                const Vector& base_weights, LossKind loss, const BoostConfig& config,
                const ResampleConfig& resample) {
    config.validate();
    resample.validate();
    const Eigen::Index n = y.size();
    const Vector base = base_weights.size() == 0 ? Vector::Ones(n) : base_weights;
    if (base.size() != n) throw InputError("cvrisk: weight length does not match the response");
    std::vector<Eigen::Index> population;
    for (Eigen::Index i = 0; i < n; ++i)
        if (base[i] > 0.0) population.push_back(i);

    const int n_res = resample.count;
    std::vector<Vector> train(static_cast<std::size_t>(n_res), Vector::Zero(n));
    std::vector<Vector> test(static_cast<std::size_t>(n_res), Vector::Zero(n));
    if (resample.kind == ResampleConfig::Kind::kfold) {
        if (population.size() < static_cast<std::size_t>(n_res))
            throw InputError("cvrisk: fewer observations than folds");
        auto rng = rng_stream(config.seed, 0);
        std::vector<Eigen::Index> perm = population;
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t pos = 0; pos < perm.size(); ++pos) {
            const auto i = perm[pos];
            const std::size_t fold = pos % static_cast<std::size_t>(n_res);
            for (std::size_t f = 0; f < train.size(); ++f)
                (f == fold ? test[f] : train[f])[i] = base[i];
        }
    } else {
        std::vector<double> probs(base.data(), base.data() + n);
        for (int r = 0; r < n_res; ++r) {
            auto rng = rng_stream(config.seed, static_cast<std::uint64_t>(r) + 1);
            std::discrete_distribution<Eigen::Index> draw(probs.begin(), probs.end());
            auto& w = train[static_cast<std::size_t>(r)];
            for (std::size_t k = 0; k < population.size(); ++k) w[draw(rng)] += 1.0;
            for (auto i : population)
                if (w[i] == 0.0) test[static_cast<std::size_t>(r)][i] = base[i];
        }
    }
    for (int r = 0; r < n_res; ++r)
        if (test[static_cast<std::size_t>(r)].sum() <= 0.0)
            throw InputError("cvrisk: resample " + std::to_string(r) + " has an empty out-of-sample fold");

    CVResult out;
    out.risk.resize(n_res, resample.m_max + 1);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_res));
#pragma omp parallel for schedule(dynamic) if (config.parallel && n_res > 1)
    for (int r = 0; r < n_res; ++r) {
        try {
            const Vector& oos = test[static_cast<std::size_t>(r)];
            run_boost(learners, y, train[static_cast<std::size_t>(r)], loss, config.step, resample.m_max, false,
                      [&](int m, const Vector& eta) { out.risk(r, m) = mean_risk(loss, y, eta, oos); });
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (std::size_t r = 0; r < errors.size(); ++r)
        if (errors[r]) rethrow_with_context(errors[r], "resample " + std::to_string(r) + ": ");

    const Vector mean = out.mean_risk();
    Eigen::Index best = 0;
    for (Eigen::Index m = 1; m < mean.size(); ++m)
        if (mean[m] < mean[best]) best = m;
    out.optimal = static_cast<int>(best);
    out.train_weights = std::move(train);
    out.test_weights = std::move(test);
    return out;
}

CVResult cvrisk(const DataFrame& data, const std::string& response, const std::vector<LearnerSpec>& specs,
                LossKind loss, const BoostConfig& config, const ResampleConfig& resample) {
    const Vector y = response_vector(data, response, loss);
    return cvrisk(build_learners(specs, data), y, Vector(), loss, config, resample);
}

} // namespace shapeboost
