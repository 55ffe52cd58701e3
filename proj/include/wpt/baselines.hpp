#pragma once

#include <vector>

#include "json.hpp"
#include "wpt/allocation.hpp"
#include "wpt/eh.hpp"
#include "wpt/sca_joint.hpp"
#include "wpt/sca_power.hpp"
#include "wpt/scenario.hpp"

// Reference allocators: average sharing, exhaustive grid search, a
// linear-harvester power allocation with true-model re-evaluation, and
// the single-resource ablations (power only / blocklengths only).

namespace wpt::baselines {

/// Uniform source powers min(p_total/M, p_max).
std::vector<double> as_power(const Scenario& sc);

enum class Mode { kFixed, kDynamic };

/// Average sharing. Fixed mode keeps the scenario's blocklengths; dynamic
/// mode picks the WPT share by a 1-D scan and splits the rest equally,
/// then rounds to integer blocklengths.
Allocation average_sharing(const Scenario& sc, const eh::EhCircuit& circuit,
                           Mode mode);

struct SharePoint {
    double rho = 0.0;  // m0 / m_total
    bool feasible = false;
    Allocation alloc;
};

/// AS error across normalized WPT blocklengths at the given source powers.
std::vector<SharePoint> share_sweep(const Scenario& sc,
                                    const eh::EhCircuit& circuit,
                                    const std::vector<double>& source_power,
                                    int grid_points);

struct EsResult {
    Allocation allocation;
    bool found = false;
    nlohmann::json grid_spec;
};

/// Best feasible grid point under the true nonlinear model. Power axes are
/// log-spaced between the uniform feasibility floor and p_max; dynamic
/// mode also grids the blocklengths. Guarded to M <= 4 (and N <= 3 when
/// dynamic).
EsResult exhaustive_search(const Scenario& sc, const eh::EhCircuit& circuit,
                           int points_per_axis);

struct LpaResult {
    Allocation predicted;     // under the linear harvester model
    Allocation actual;        // same powers re-evaluated with the true model
    double eta = 0.0;
};

/// Power allocation assuming a linear harvester with efficiency eta: the
/// energy constraint becomes linear in P, so one convex solve suffices.
LpaResult lpa(const Scenario& sc, const eh::EhCircuit& circuit, double eta);

/// Power-only ablation: average-sharing blocklengths held fixed, powers
/// optimized by the fixed-frame SCA.
ScaResult ipa(const Scenario& sc, const eh::EhCircuit& circuit,
              const ScaOptions& opts = {});

/// Blocklength-only ablation: powers pinned at average sharing, one convex
/// solve over (sqrt sensor powers, reciprocal WIT blocklengths, m0).
JointResult iba(const Scenario& sc, const eh::EhCircuit& circuit,
                const solver::SolveOptions& opts = {});

}  // namespace wpt::baselines
