#pragma once

#include <cstdint>
#include <string>

#include "shapeboost/data.hpp"

namespace shapeboost {

struct SimulationOptions {
    int reps = 100;
    std::uint64_t seed = 1;
    int n = 0;          // 0 picks the scenario default
    double sigma = -1;  // < 0 picks the scenario default
    bool parallel = true;
};

/// Runs one of the scenarios "cyclic", "monotone", "qp-vs-iter" and returns
/// one metrics row per replication.
///
///   cyclic       rep, mse_cyclic, mse_unconstrained, seam_gap_cyclic, seam_gap_unconstrained
///   monotone     rep, mse_constrained, mse_unconstrained, violations_constrained, violations_unconstrained
///   qp-vs-iter   rep, max_abs_diff, rel_diff, active_constraints, qp_iterations, iterative_iterations
DataFrame simulate(const std::string& scenario, const SimulationOptions& options);

/// Truth functions of the scenarios.
double cyclic_truth(double x);
double monotone_truth(double x);

} // namespace shapeboost
