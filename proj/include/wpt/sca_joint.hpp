#pragma once

#include <optional>
#include <vector>

#include "wpt/allocation.hpp"
#include "wpt/eh.hpp"
#include "wpt/scenario.hpp"
#include "wpt/sca_power.hpp"
#include "wpt/solver.hpp"

// Joint allocation of source powers, WPT blocklength and per-sensor WIT
// blocklengths under a total blocklength budget. The SCA loop works in
// substituted variables: reciprocal source powers, square-root sensor
// powers and reciprocal WIT blocklengths.

namespace wpt {

struct JointVars {
    std::vector<double> p_inv;            // 1/P_j
    std::vector<double> sqrt_power;       // sqrt(Pbar_i)
    std::vector<double> inv_blocklength;  // 1/m_i
    double m0 = 0.0;
};

/// AM-GM surrogate weight, tight at the local point.
double amgm_coeff(const std::vector<double>& p_inv_local, double m0_local,
                  const std::vector<double>& a_row);

/// Convex subproblem over (p_inv, sqrt_power, inv_blocklength, m0) for the
/// given tangents and AM-GM weights. The caller assigns x0.
solver::ConvexProgram build_sp3(const Scenario& sc,
                                const std::vector<eh::Tangent>& tangents,
                                const std::vector<double>& amgm);

/// Minimal uniform-power / uniform-blocklength feasible configuration with
/// the leftover power and blocklength spread equally.
JointVars init_joint(const Scenario& sc, const eh::EhCircuit& circuit);

struct JointOptions : ScaOptions {
    // additional SCA starting points, e.g. a known fixed-frame solution
    std::vector<JointVars> extra_starts;
    bool multi_start = true;  // also try an average-sharing based start
};

struct JointResult {
    Allocation allocation;       // integer blocklengths, repaired
    ScaTrace trace;              // trace of the winning SCA run
    double continuous_eps = 0.0; // overall error before rounding
};

JointResult algorithm2(const Scenario& sc, const eh::EhCircuit& circuit,
                       const JointOptions& opts = {});

/// Blocklength-only restriction at fixed source powers. With the powers
/// pinned the harvested power is a constant, so the energy constraint is
/// convex without any surrogate and one solve is globally optimal for the
/// restriction. `start` supplies a near-feasible frame to start from.
JointVars optimize_frame(const Scenario& sc, const eh::EhCircuit& circuit,
                         const std::vector<double>& source_power,
                         const JointVars& start,
                         const solver::SolveOptions& opts = {});

/// Round-half-even blocklengths, repair the budget, recompute sensor
/// powers from the true energy balance and re-evaluate all errors.
Allocation round_blocklengths(const Scenario& sc, const eh::EhCircuit& circuit,
                              const std::vector<double>& source_power,
                              double m0, const std::vector<double>& wit_m);

}  // namespace wpt
