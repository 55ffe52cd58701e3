#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

// Nonlinear multi-source energy-harvesting model: rectifier circuit
// constants, the RF-combining polynomial phi, the Lambert-W harvested
// power map, its gradient in reciprocal source powers, the tangent
// linearization used by the SCA loops, and the linear-EH baseline.

namespace wpt::eh {

struct ModelRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EhCircuit {
    double i_s = 5e-6;        // reverse bias saturation current [A]
    double r_l = 200.0;       // load resistance [Ohm]
    double ideality = 1.05;   // diode ideality factor
    double v_t = 25.86e-3;    // thermal voltage [V]
    double r_ant = 200.0;     // matched antenna impedance [Ohm]
    int truncation_order = 4;
    // lambda[j][i-1]: waveform factor of source j at order i (1..n0).
    // Order 0 is implicitly 1; odd orders default to 0.
    std::vector<std::vector<double>> lambda;

    double a() const { return r_l / (ideality * v_t); }
    double beta(int order) const;
    double lambda_factor(int source, int order) const;
    void validate() const;

    static EhCircuit defaults(int num_sources);
    static EhCircuit from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Elementwise product Q_j = P_j * z_j.
std::vector<double> received_powers(const std::vector<double>& source_power,
                                    const std::vector<double>& gains);

/// All nonnegative integer sequences of length `parts` summing to `total`.
/// Memoized; the returned reference stays valid for the process lifetime.
const std::vector<std::vector<int>>& compositions(int total, int parts);

/// RF combining sum: I_s + sum_i beta_i sum_comps C_hat prod Q_m^{i_m/2}.
double phi(const std::vector<double>& q, const EhCircuit& c);

/// phi minus the saturation current (the input-dependent part only).
double phi_excess(const std::vector<double>& q, const EhCircuit& c);

/// Principal Lambert branch: w with w*e^w = x, for x >= -1/e.
double lambert_w0(double x);

/// Harvested DC power ((1/a) W0(a e^{a I_s} phi(Q)) - I_s)^2 R_L.
/// Exactly 0 for zero input.
double f_nl(const std::vector<double>& q, const EhCircuit& c);

/// Gradient of f_nl with respect to reciprocal source powers, with
/// Q_j = z_j / p_inv_j. Every component is <= 0.
std::vector<double> f_nl_grad_inv_power(const std::vector<double>& p_inv,
                                        const std::vector<double>& gains,
                                        const EhCircuit& c);

struct Tangent {
    std::vector<double> a;  // nonnegative slopes, tangent is -sum a_j p_inv_j + b
    double b = 0.0;
};

/// First-order underestimator of f_nl in reciprocal powers, tight at
/// p_inv_local.
Tangent linearize(const std::vector<double>& p_inv_local,
                  const std::vector<double>& gains, const EhCircuit& c);

/// Value of a tangent at a point.
double tangent_value(const Tangent& t, const std::vector<double>& p_inv);

/// Linear-EH baseline eta * sum(Q).
double linear_eh(const std::vector<double>& q, double eta);

/// eta such that linear_eh matches f_nl at the reference input.
double calibrate_eta(const std::vector<double>& q_ref, const EhCircuit& c);

}  // namespace wpt::eh
