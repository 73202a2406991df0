#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "shapeboost/data.hpp"
#include "shapeboost/learner.hpp"

namespace shapeboost {

enum class LossKind { gaussian, poisson };

std::string_view to_string(LossKind k);
LossKind parse_loss(std::string_view s);

/// Risk of one observation: 1/2 (y - eta)^2, or exp(eta) - y eta for Poisson
/// counts with log link (log y! dropped).
double loss_risk(LossKind loss, double y, double eta);

/// -d risk / d eta for every observation.
Vector negative_gradient(LossKind loss, const Vector& y, const Vector& eta);

/// Constant eta minimizing the (weighted) risk: mean of y, or log of it.
double loss_offset(LossKind loss, const Vector& y, const Vector& weights = Vector());

/// Throws InputError when y is outside the loss' support.
void check_response(LossKind loss, const Vector& y);

/// Inverse link.
Vector inverse_link(LossKind loss, const Vector& eta);

/// Weighted mean risk over rows with positive weight.
double mean_risk(LossKind loss, const Vector& y, const Vector& eta, const Vector& weights);

struct BoostConfig {
    double step = 0.1;
    int m_stop = 100;
    std::uint64_t seed = 1;
    bool parallel = true;  // fan learner fits out over OpenMP threads

    void validate() const;
    friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

/// Outcome of one boosting run over prepared blueprints.
struct BoostRun {
    double offset = 0.0;
    CoefficientStore coef;
    std::vector<int> trace;
    Vector eta;  // final predictor on every design row
};

using IterationHook = std::function<void(int iteration, const Vector& eta)>;

/// Component-wise boosting on the blueprints' training designs. Rows with
/// zero weight do not enter the fit but receive eta updates, so `hook` can
/// score them; it runs once for iteration 0 (offset only) and after every step.
BoostRun run_boost(const std::vector<std::shared_ptr<const LearnerBlueprint>>& learners,
                   const Vector& y, const Vector& weights, LossKind loss, double step, int m_stop,
                   bool parallel, const IterationHook& hook = {});

enum class PredictType { link, response };

PredictType parse_predict_type(std::string_view s);

class BoostModel {
public:
    BoostModel() = default;
    BoostModel(LossKind loss, BoostConfig config, std::string response, double offset,
               std::vector<std::shared_ptr<const LearnerBlueprint>> learners, CoefficientStore coef,
               std::vector<int> trace);

    [[nodiscard]] LossKind loss() const noexcept { return loss_; }
    [[nodiscard]] const BoostConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::string& response() const noexcept { return response_; }
    [[nodiscard]] double offset() const noexcept { return offset_; }
    [[nodiscard]] const std::vector<std::shared_ptr<const LearnerBlueprint>>& learners() const noexcept {
        return learners_;
    }
    [[nodiscard]] const CoefficientStore& coefficients() const noexcept { return coef_; }
    [[nodiscard]] const std::vector<int>& trace() const noexcept { return trace_; }

    /// Index of the learner called `name`; throws InputError if absent.
    [[nodiscard]] std::size_t learner_index(const std::string& name) const;

    /// offset + sum of learner contributions (link), or its inverse link.
    [[nodiscard]] Vector predict(const DataFrame& data, PredictType type = PredictType::link) const;
    /// Uncentered contribution B(x) beta of one learner.
    [[nodiscard]] Vector contribution(std::size_t learner, const DataFrame& data) const;

    /// Number of times each learner was selected.
    [[nodiscard]] std::vector<int> selection_counts() const;

private:
    LossKind loss_ = LossKind::gaussian;
    BoostConfig config_;
    std::string response_;
    double offset_ = 0.0;
    std::vector<std::shared_ptr<const LearnerBlueprint>> learners_;
    CoefficientStore coef_;
    std::vector<int> trace_;
};

/// Column `response` of `data` as a vector, validated for the loss.
Vector response_vector(const DataFrame& data, const std::string& response, LossKind loss);

/// Resolves every spec against `data` (knots, levels, centering).
std::vector<std::shared_ptr<const LearnerBlueprint>> build_learners(const std::vector<LearnerSpec>& specs,
                                                                    const DataFrame& data);

BoostModel boost(const DataFrame& data, const std::string& response, const std::vector<LearnerSpec>& specs,
                 LossKind loss, const BoostConfig& config);

struct ResampleConfig {
    enum class Kind { kfold, bootstrap };
    Kind kind = Kind::kfold;
    int count = 10;
    int m_max = 1000;

    void validate() const;
    friend bool operator==(const ResampleConfig&, const ResampleConfig&) = default;
};

struct CVResult {
    Matrix risk;  // resamples x (m_max + 1); column m is the risk after m iterations
    int optimal = 0;
    std::vector<Vector> train_weights;  // per resample
    std::vector<Vector> test_weights;

    [[nodiscard]] Vector mean_risk() const;
};

/// Out-of-sample risk path per resample. `base_weights` restricts the
/// population (empty means every row once); folds partition rows with
/// positive base weight.
CVResult cvrisk(const std::vector<std::shared_ptr<const LearnerBlueprint>>& learners, const Vector& y,
                const Vector& base_weights, LossKind loss, const BoostConfig& config,
                const ResampleConfig& resample);

CVResult cvrisk(const DataFrame& data, const std::string& response, const std::vector<LearnerSpec>& specs,
                LossKind loss, const BoostConfig& config, const ResampleConfig& resample);

/// Versioned JSON text holding config, resolved learner specs and coefficients.
std::string save_model(const BoostModel& model);
/// Throws FormatError for malformed or inconsistent payloads.
BoostModel load_model(std::string_view text);

void save_model_file(const BoostModel& model, const std::string& path);
BoostModel load_model_file(const std::string& path);

} // namespace shapeboost
