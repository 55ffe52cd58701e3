#pragma once

#include <vector>

#include "wpt/allocation.hpp"
#include "wpt/eh.hpp"
#include "wpt/scenario.hpp"
#include "wpt/solver.hpp"

// Iterative power allocation across the WPT sources under a fixed frame:
// linearize the harvested-power map in reciprocal powers, solve the
// resulting convex subproblem, move the expansion point, repeat.

namespace wpt {

struct ScaOptions {
    double converge_rel = 1e-8;
    int max_rounds = 50;
    solver::SolveOptions solve;
};

struct ScaResult {
    Allocation allocation;
    ScaTrace trace;
};

/// Smallest uniform source power (capped per-source) meeting the SNR
/// bound for every sensor. Throws InfeasibleScenario naming the worst
/// sensor when even the cap fails.
std::vector<double> min_power_feasibility(const Scenario& sc,
                                          const eh::EhCircuit& circuit);

/// Improved initial point: minimum feasible power plus an equal share of
/// the remaining budget, returned as reciprocal powers.
std::vector<double> init_iip(const Scenario& sc, const eh::EhCircuit& circuit);

/// Convex subproblem over (reciprocal source powers, sensor powers) for
/// given per-sensor tangents. The caller assigns x0.
solver::ConvexProgram build_sp1(const Scenario& sc,
                                const std::vector<eh::Tangent>& tangents);

/// Strictly feasible SP1 start near the expansion point: reciprocal powers
/// pulled off their bounds and paired with near-full-energy sensor powers.
Eigen::VectorXd sp1_feasible_start(const Scenario& sc,
                                   const std::vector<eh::Tangent>& tangents,
                                   std::vector<double> p_inv);

ScaResult algorithm1(const Scenario& sc, const eh::EhCircuit& circuit,
                     const ScaOptions& opts = {});

}  // namespace wpt
