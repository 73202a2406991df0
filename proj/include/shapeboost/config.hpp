#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shapeboost/boost.hpp"

namespace shapeboost {

inline constexpr int kConfigVersion = 1;

/// Declarative model description read from a YAML file.
///
///   version: 1
///   response: y
///   loss: gaussian            # or poisson
///   step: 0.1
///   mstop: 100
///   seed: 1
///   cv: {folds: 10, m_max: 1000}    # or {bootstrap: 25, m_max: 1000}; optional
///   terms:
///     - name: f_day
///       kind: cyclic-pspline
///       covariates: [day]
///       range: [0, 365]
///       knots: 20
///       degree: 3
///       diff_order: 2
///       df: 4
///
/// Univariate and varying terms take margin keys (knots, degree, diff_order,
/// constraint, constraint_lambda, bounds, range) inline; tensor terms list
/// two of them under `margins`.
struct ModelConfig {
    int version = kConfigVersion;
    std::string response = "y";
    LossKind loss = LossKind::gaussian;
    BoostConfig boost;
    std::optional<ResampleConfig> cv;
    std::vector<LearnerSpec> terms;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws InputError with the offending key for malformed input.
ModelConfig parse_config(const std::string& text);
ModelConfig read_config_file(const std::string& path);

/// Emits every field explicitly, so parse_config(write_config(c)) == c.
std::string write_config(const ModelConfig& config);

} // namespace shapeboost
