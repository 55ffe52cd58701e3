#pragma once

#include <vector>

// Finite-blocklength reliability math: Gaussian Q-function, Shannon
// capacity, channel dispersion, the normal-approximation error
// probability and its derivatives, and overall-error aggregation.

namespace wpt::fbl {

inline constexpr double kLog2E = 1.4426950408889634074;

// Error probabilities below this are clamped so log-domain scaling of
// objectives never hits a hard zero.
inline constexpr double kEpsFloor = 1e-300;

struct FblPoint {
    double snr = 0.0;          // linear SNR, >= 0
    double rate = 0.0;         // bits per symbol
    double blocklength = 1.0;  // symbols, >= 1
};

/// Upper-tail Gaussian probability Q(x) = P[N(0,1) > x].
double q_function(double x);

/// Inverse of q_function on (0,1). Throws std::domain_error outside (0,1).
double q_inverse(double p);

/// Shannon capacity log2(1 + snr) in bits per symbol.
double capacity(double snr);

/// Channel dispersion (1 - 1/(1+snr)^2) * log2(e)^2.
double dispersion(double snr);

/// Normal-approximation decoding error probability.
/// snr == 0 with a positive rate returns 1 by convention.
double error_prob(const FblPoint& p);
double error_prob(double snr, double rate, double blocklength);

/// d error_prob / d snr at fixed rate and blocklength.
double error_prob_dsnr(double snr, double rate, double blocklength);

struct ErrorPartials {
    double d_sqrt_power;       // d eps / d sqrt(sensor power)
    double d_inv_blocklength;  // d eps / d (1/blocklength)
};

/// Error probability expressed in the substituted variables
/// sqrt_power = sqrt(Pbar) and inv_blocklength = 1/m, with
/// snr = sqrt_power^2 * wit_gain / noise_power and rate = bits * inv_blocklength.
double error_prob_tilde(double sqrt_power, double inv_blocklength,
                        double wit_gain, double noise_power, double packet_bits);

/// Analytic partials of error_prob_tilde.
ErrorPartials error_prob_partials(double sqrt_power, double inv_blocklength,
                                  double wit_gain, double noise_power,
                                  double packet_bits);

/// 1 - prod(1 - eps_i).
double overall_error_exact(const std::vector<double>& eps);

/// sum(eps_i), clamped at 1 for reporting.
double overall_error_approx(const std::vector<double>& eps);

}  // namespace wpt::fbl
