#include "wpt/sca_power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wpt/fbl.hpp"

namespace wpt {

namespace {

constexpr double kInvPowerCap = 1e12;  // P_j >= 1e-12 W

double snr_floor_power(const Scenario& sc, int i, double m_i) {
    double bound = std::max(1.0, std::pow(2.0, sc.packet_bits[i] / m_i) - 1.0);
    return bound * sc.noise_power[i] / sc.wit_gains[i];
}

// Sensor power cap from the tangent surrogate at a given point.
double surrogate_cap(const Scenario& sc, const eh::Tangent& tan, int i,
                     const std::vector<double>& p_inv) {
    return sc.m0_fixed / sc.m_fixed[i] * eh::tangent_value(tan, p_inv);
}

// Worst SNR-bound margin across sensors at uniform source power t (capped).
double feasibility_margin(const Scenario& sc, const eh::EhCircuit& circuit,
                          double t, int* worst = nullptr) {
    std::vector<double> p(sc.num_sources, std::min(t, sc.p_max));
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sc.num_sensors; ++i) {
        auto q = eh::received_powers(p, sc.wpt_gains[i]);
        double pbar = eh::f_nl(q, circuit) * sc.m0_fixed / sc.m_fixed[i];
        double m = pbar - snr_floor_power(sc, i, sc.m_fixed[i]);
        if (m < margin) {
            margin = m;
            if (worst) *worst = i;
        }
    }
    return margin;
}

}  // namespace

std::vector<double> min_power_feasibility(const Scenario& sc,
                                          const eh::EhCircuit& circuit) {
    int worst = 0;
    if (feasibility_margin(sc, circuit, sc.p_max, &worst) < 0.0) {
        std::ostringstream os;
        os << "infeasible even at per-source cap; sensor " << worst
           << " cannot meet its SNR bound";
        throw InfeasibleScenario(os.str());
    }
    double lo = 0.0, hi = sc.p_max;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (feasibility_margin(sc, circuit, mid) >= 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= 1e-13 * sc.p_max) break;
    }
    std::vector<double> p_min(sc.num_sources, std::min(hi, sc.p_max));
    double sum = 0.0;
    for (double p : p_min) sum += p;
    if (sum > sc.p_total * (1.0 + 1e-12)) {
        throw InfeasibleScenario("minimum feasible power exceeds the total budget");
    }
    return p_min;
}

std::vector<double> init_iip(const Scenario& sc, const eh::EhCircuit& circuit) {
    auto p_min = min_power_feasibility(sc, circuit);
    double used = 0.0;
    for (double p : p_min) used += p;
    double share = (sc.p_total - used) / sc.num_sources;
    std::vector<double> p_inv(sc.num_sources);
    for (int j = 0; j < sc.num_sources; ++j) {
        double p = std::min(p_min[j] + share, sc.p_max);
        p_inv[j] = 1.0 / p;
    }
    return p_inv;
}

solver::ConvexProgram build_sp1(const Scenario& sc,
                                const std::vector<eh::Tangent>& tangents) {
    const int m = sc.num_sources;
    const int n = sc.num_sensors;
    solver::ConvexProgram prog;
    prog.dim = m + n;
    prog.lower.setConstant(prog.dim, 0.0);
    prog.upper.setConstant(prog.dim, std::numeric_limits<double>::infinity());
    prog.scale.setOnes(prog.dim);
    for (int j = 0; j < m; ++j) {
        prog.lower[j] = 1.0 / sc.p_max;
        prog.upper[j] = kInvPowerCap;
        prog.scale[j] = std::max(1.0 / sc.p_max, m / sc.p_total);
    }
    for (int i = 0; i < n; ++i) {
        prog.lower[m + i] = snr_floor_power(sc, i, sc.m_fixed[i]);
        prog.scale[m + i] = prog.lower[m + i];
    }

    prog.objective = [sc, m, n](const Eigen::VectorXd& x,
                                Eigen::VectorXd* grad) {
        if (grad) grad->setZero(x.size());
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            double pbar = x[m + i];
            double snr = pbar * sc.wit_gains[i] / sc.noise_power[i];
            double rate = sc.packet_bits[i] / sc.m_fixed[i];
            sum += fbl::error_prob(snr, rate, sc.m_fixed[i]);
            if (grad) {
                (*grad)[m + i] = fbl::error_prob_dsnr(snr, rate, sc.m_fixed[i]) *
                                 sc.wit_gains[i] / sc.noise_power[i];
            }
        }
        return sum;
    };

    for (int i = 0; i < n; ++i) {
        const auto tan = tangents[i];
        double ratio = sc.m0_fixed / sc.m_fixed[i];
        prog.constraints.push_back(
            [tan, ratio, m, i](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                double lin = tan.b;
                for (int j = 0; j < m; ++j) lin -= tan.a[j] * x[j];
                if (grad) {
                    grad->setZero(x.size());
                    for (int j = 0; j < m; ++j) (*grad)[j] = ratio * tan.a[j];
                    (*grad)[m + i] = 1.0;
                }
                return x[m + i] - ratio * lin;
            });
    }
    double p_total = sc.p_total;
    prog.constraints.push_back(
        [p_total, m](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
            if (grad) grad->setZero(x.size());
            double sum = -p_total;
            for (int j = 0; j < m; ++j) {
                sum += 1.0 / x[j];
                if (grad) (*grad)[j] = -1.0 / (x[j] * x[j]);
            }
            return sum;
        });
    return prog;
}

Eigen::VectorXd sp1_feasible_start(const Scenario& sc,
                                   const std::vector<eh::Tangent>& tangents,
                                   std::vector<double> p_inv) {
    const int m = sc.num_sources;
    const int n = sc.num_sensors;
    for (int j = 0; j < m; ++j) {
        p_inv[j] = std::clamp(p_inv[j], (1.0 / sc.p_max) * (1.0 + 1e-10),
                              kInvPowerCap * (1.0 - 1e-10));
    }
    double used = 0.0;
    for (int j = 0; j < m; ++j) used += 1.0 / p_inv[j];
    if (used >= sc.p_total) {
        double c = used / sc.p_total * (1.0 + 1e-10);
        for (int j = 0; j < m; ++j) p_inv[j] *= c;
    }
    Eigen::VectorXd x(m + n);
    for (int j = 0; j < m; ++j) x[j] = p_inv[j];
    for (int i = 0; i < n; ++i) {
        double cap = surrogate_cap(sc, tangents[i], i, p_inv);
        double floor = snr_floor_power(sc, i, sc.m_fixed[i]);
        if (!(cap > floor)) {
            std::ostringstream os;
            os << "sensor " << i << " cannot meet its SNR bound at the expansion point";
            throw InfeasibleScenario(os.str());
        }
        x[m + i] = floor + (cap - floor) * (1.0 - 1e-7);
    }
    return x;
}

ScaResult algorithm1(const Scenario& sc, const eh::EhCircuit& circuit,
                     const ScaOptions& opts) {
    sc.validate();
    if (!sc.fixed_frame()) {
        throw std::invalid_argument("algorithm1 requires a fixed-frame scenario");
    }
    const int m = sc.num_sources;
    const int n = sc.num_sensors;

    std::vector<double> p_inv = init_iip(sc, circuit);
    std::vector<double> p0(m);
    for (int j = 0; j < m; ++j) p0[j] = 1.0 / p_inv[j];
    Allocation init = evaluate_allocation(sc, circuit, p0, sc.m0_fixed, sc.m_fixed);

    ScaResult out;
    out.trace.rows.push_back({0, init.overall_error_approx, init.per_link_error});
    double best_eps = init.overall_error_approx;
    std::vector<double> best_per_link = init.per_link_error;
    std::vector<double> best_p_inv = p_inv;

    for (int round = 1; round <= opts.max_rounds; ++round) {
        std::vector<eh::Tangent> tangents;
        tangents.reserve(n);
        for (int i = 0; i < n; ++i) {
            tangents.push_back(eh::linearize(p_inv, sc.wpt_gains[i], circuit));
        }
        auto prog = build_sp1(sc, tangents);
        prog.x0 = sp1_feasible_start(sc, tangents, p_inv);

        // normalize the objective so the barrier tolerance is relative
        double obj_scale = 1.0 / std::max(best_eps, 1e-30);
        auto raw = prog.objective;
        prog.objective = [raw, obj_scale](const Eigen::VectorXd& x,
                                          Eigen::VectorXd* grad) {
            double v = raw(x, grad);
            if (grad) *grad *= obj_scale;
            return v * obj_scale;
        };

        auto res = solver::minimize(prog, opts.solve);
        if (res.status == solver::SolveStatus::kInfeasibleStart) {
            throw InfeasibleScenario("SP1 start point rejected by the solver");
        }

        std::vector<double> cand_inv(m), cand_per_link(n);
        for (int j = 0; j < m; ++j) cand_inv[j] = res.x[j];
        double cand_eps = 0.0;
        for (int i = 0; i < n; ++i) {
            double snr = res.x[m + i] * sc.wit_gains[i] / sc.noise_power[i];
            cand_per_link[i] = fbl::error_prob(
                snr, sc.packet_bits[i] / sc.m_fixed[i], sc.m_fixed[i]);
            cand_eps += cand_per_link[i];
        }

        double eps_before = best_eps;
        if (cand_eps < best_eps) {
            best_eps = cand_eps;
            best_per_link = cand_per_link;
            best_p_inv = cand_inv;
            p_inv = cand_inv;
        }
        // relative change of the accepted best; a rejected candidate means
        // the linearization is exhausted at this point
        double rel = (eps_before - best_eps) / std::max(eps_before, 1e-300);
        out.trace.rows.push_back({round, best_eps, best_per_link});
        out.trace.iterations = round;
        // error sums this small are indistinguishable from perfect reliability;
        // stop instead of chasing numerical noise
        if (rel <= opts.converge_rel || best_eps <= 1e-30) {
            out.trace.converged = true;
            break;
        }
    }

    std::vector<double> p_final(m);
    for (int j = 0; j < m; ++j) p_final[j] = 1.0 / best_p_inv[j];
    out.allocation =
        evaluate_allocation(sc, circuit, p_final, sc.m0_fixed, sc.m_fixed);
    return out;
}

}  // namespace wpt
