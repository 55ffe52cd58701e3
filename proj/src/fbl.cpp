#include "wpt/fbl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wpt::fbl {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("q_inverse: argument must lie in (0,1)");
    }
    // Bracketed Newton on Q(x) - p = 0. Q is strictly decreasing.
    double lo = -40.0, hi = 40.0;
    double x = 0.0;
    for (int it = 0; it < 200; ++it) {
        double q = q_function(x);
        if (q > p) {
            lo = x;
        } else {
            hi = x;
        }
        double pdf = normal_pdf(x);
        double step = (pdf > 0.0) ? (q - p) / pdf : 0.0;
        double next = x + step;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

double capacity(double snr) { return std::log2(1.0 + snr); }

double dispersion(double snr) {
    double inv = 1.0 / (1.0 + snr);
    return (1.0 - inv * inv) * kLog2E * kLog2E;
}

double error_prob(double snr, double rate, double blocklength) {
    if (snr <= 0.0) {
        return rate > 0.0 ? 1.0 : 0.5;
    }
    double v = dispersion(snr);
    double w = (capacity(snr) - rate) * std::sqrt(blocklength / v);
    double eps = q_function(w);
    return std::clamp(eps, kEpsFloor, 1.0);
}

double error_prob(const FblPoint& p) {
    return error_prob(p.snr, p.rate, p.blocklength);
}

double error_prob_dsnr(double snr, double rate, double blocklength) {
    if (snr <= 0.0) return 0.0;
    double v = dispersion(snr);
    double sqv = std::sqrt(blocklength / v);
    double w = (capacity(snr) - rate) * sqv;
    double c_prime = kLog2E / (1.0 + snr);
    double inv3 = 1.0 / ((1.0 + snr) * (1.0 + snr) * (1.0 + snr));
    double v_prime = 2.0 * kLog2E * kLog2E * inv3;
    // dw/dsnr = C' sqrt(m/V) - (C - r) sqrt(m) V' / (2 V^{3/2})
    double dw = c_prime * sqv - (capacity(snr) - rate) * std::sqrt(blocklength) *
                                    v_prime / (2.0 * std::pow(v, 1.5));
    return -normal_pdf(w) * dw;
}

double error_prob_tilde(double sqrt_power, double inv_blocklength,
                        double wit_gain, double noise_power, double packet_bits) {
    double snr = sqrt_power * sqrt_power * wit_gain / noise_power;
    return error_prob(snr, packet_bits * inv_blocklength, 1.0 / inv_blocklength);
}

ErrorPartials error_prob_partials(double sqrt_power, double inv_blocklength,
                                  double wit_gain, double noise_power,
                                  double packet_bits) {
    double snr = sqrt_power * sqrt_power * wit_gain / noise_power;
    double c = capacity(snr);
    double v = dispersion(snr);
    double s = std::sqrt(v * inv_blocklength);
    double num = c - packet_bits * inv_blocklength;
    double w = num / s;
    double pdf = normal_pdf(w);

    double dsnr_dpt = 2.0 * sqrt_power * wit_gain / noise_power;
    double c_prime = kLog2E / (1.0 + snr);
    double inv3 = 1.0 / ((1.0 + snr) * (1.0 + snr) * (1.0 + snr));
    double v_prime = 2.0 * kLog2E * kLog2E * inv3;
    double s3 = s * s * s;

    double dw_dpt = c_prime * dsnr_dpt / s -
                    num * inv_blocklength * v_prime * dsnr_dpt / (2.0 * s3);
    double dw_dmt = -packet_bits / s - num * v / (2.0 * s3);
    return ErrorPartials{-pdf * dw_dpt, -pdf * dw_dmt};
}

double overall_error_exact(const std::vector<double>& eps) {
    double prod = 1.0;
    for (double e : eps) prod *= (1.0 - e);
    return 1.0 - prod;
}

double overall_error_approx(const std::vector<double>& eps) {
    double sum = 0.0;
    for (double e : eps) sum += e;
    return std::min(sum, 1.0);
}

}  // namespace wpt::fbl
