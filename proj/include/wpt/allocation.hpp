#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "wpt/eh.hpp"
#include "wpt/scenario.hpp"

// A full resource-allocation decision plus shared evaluation and
// feasibility auditing used by every allocator.

namespace wpt {

struct Allocation {
    std::vector<double> source_power;      // watts, per WPT source
    std::vector<double> sensor_power;      // watts, per sensor
    double wpt_blocklength = 0.0;          // m0
    std::vector<double> wit_blocklengths;  // m_i
    std::vector<double> per_link_error;
    double overall_error_approx = 0.0;
    double overall_error_exact = 0.0;
    bool reliability_flag = false;  // any per-link error above 0.1
};

struct ScaTrace {
    struct Row {
        int iter = 0;
        double eps_overall = 0.0;
        std::vector<double> eps_per_link;
    };
    std::vector<Row> rows;
    bool converged = false;
    int iterations = 0;
};

/// Evaluates an allocation with the full energy balance: the sensor
/// transmit power is f_nl(Q_i(P)) * m0 / m_i, and per-link errors come
/// from the nonlinear model.
Allocation evaluate_allocation(const Scenario& sc, const eh::EhCircuit& circuit,
                               const std::vector<double>& source_power,
                               double m0, const std::vector<double>& wit_m);

struct FeasibilityReport {
    bool feasible = true;
    std::vector<std::string> violations;
};

/// Audits the allocation against the true nonlinear model: power budget
/// and caps, energy balance, SNR bounds, blocklength budget.
FeasibilityReport check_allocation(const Scenario& sc,
                                   const eh::EhCircuit& circuit,
                                   const Allocation& alloc,
                                   double rel_tol = 1e-9);

nlohmann::json allocation_to_json(const Allocation& a);
nlohmann::json trace_to_json(const ScaTrace& t);
std::string trace_to_csv(const ScaTrace& t);

}  // namespace wpt
