#include "wpt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wpt/fbl.hpp"

namespace wpt::baselines {

namespace {

double snr_floor_power(const Scenario& sc, int i, double m_i) {
    double bound = std::max(1.0, std::pow(2.0, sc.packet_bits[i] / m_i) - 1.0);
    return bound * sc.noise_power[i] / sc.wit_gains[i];
}

bool snr_ok(const Scenario& sc, const Allocation& a, double rel_tol = 1e-9) {
    for (int i = 0; i < sc.num_sensors; ++i) {
        double floor = snr_floor_power(sc, i, a.wit_blocklengths[i]);
        if (a.sensor_power[i] < floor * (1.0 - rel_tol)) return false;
    }
    return true;
}

}  // namespace

std::vector<double> as_power(const Scenario& sc) {
    return std::vector<double>(sc.num_sources,
                               std::min(sc.p_total / sc.num_sources, sc.p_max));
}

std::vector<SharePoint> share_sweep(const Scenario& sc,
                                    const eh::EhCircuit& circuit,
                                    const std::vector<double>& source_power,
                                    int grid_points) {
    if (grid_points < 2) throw std::invalid_argument("share_sweep: grid_points < 2");
    std::vector<SharePoint> out;
    double rho_lo = 1.0 / sc.m_total;
    double rho_hi = 1.0 - sc.num_sensors / sc.m_total;
    for (int g = 0; g < grid_points; ++g) {
        SharePoint pt;
        pt.rho = rho_lo + (rho_hi - rho_lo) * g / (grid_points - 1);
        double m0 = pt.rho * sc.m_total;
        std::vector<double> m(sc.num_sensors,
                              (sc.m_total - m0) / sc.num_sensors);
        pt.alloc = evaluate_allocation(sc, circuit, source_power, m0, m);
        pt.feasible = snr_ok(sc, pt.alloc);
        out.push_back(std::move(pt));
    }
    return out;
}

Allocation average_sharing(const Scenario& sc, const eh::EhCircuit& circuit,
                           Mode mode) {
    sc.validate();
    auto power = as_power(sc);
    if (mode == Mode::kFixed) {
        if (!sc.fixed_frame()) {
            throw std::invalid_argument(
                "average_sharing fixed mode requires fixed-frame blocklengths");
        }
        Allocation a =
            evaluate_allocation(sc, circuit, power, sc.m0_fixed, sc.m_fixed);
        if (!snr_ok(sc, a)) {
            throw InfeasibleScenario(
                "average sharing: SNR bound unmet at uniform powers");
        }
        return a;
    }

    auto sweep = share_sweep(sc, circuit, power, 201);
    const SharePoint* best = nullptr;
    for (const auto& pt : sweep) {
        if (!pt.feasible) continue;
        if (!best ||
            pt.alloc.overall_error_approx < best->alloc.overall_error_approx) {
            best = &pt;
        }
    }
    if (!best) {
        throw InfeasibleScenario(
            "average sharing: no feasible WPT share at uniform powers");
    }
    Allocation rounded = round_blocklengths(sc, circuit, power,
                                            best->alloc.wpt_blocklength,
                                            best->alloc.wit_blocklengths);
    if (!snr_ok(sc, rounded)) {
        throw InfeasibleScenario(
            "average sharing: SNR bound unmet after rounding");
    }
    return rounded;
}

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = hi;
        return g;
    }
    double ratio = std::pow(hi / lo, 1.0 / (points - 1));
    for (int i = 0; i < points; ++i) g[i] = lo * std::pow(ratio, i);
    g.back() = hi;  // guard against rounding drift at the endpoint
    return g;
}

// Odometer-style walk over grid^axes.
bool advance(std::vector<int>& idx, int points) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (++idx[j] < points) return true;
        idx[j] = 0;
    }
    return false;
}

}  // namespace

EsResult exhaustive_search(const Scenario& sc, const eh::EhCircuit& circuit,
                           int points_per_axis) {
    sc.validate();
    bool dynamic = !sc.fixed_frame();
    if (sc.num_sources > 4 || (dynamic && sc.num_sensors > 3)) {
        throw std::invalid_argument("exhaustive_search: instance too large");
    }
    if (points_per_axis < 2) {
        throw std::invalid_argument("exhaustive_search: need >= 2 points per axis");
    }

    // uniform feasibility floor; at the cap every sensor must be reachable
    double p_lo = sc.p_max;
    {
        double lo = 0.0, hi = sc.p_max;
        auto feasible_at = [&](double t) {
            std::vector<double> p(sc.num_sources, std::min(t, sc.p_max));
            for (int i = 0; i < sc.num_sensors; ++i) {
                auto q = eh::received_powers(p, sc.wpt_gains[i]);
                double charged = eh::f_nl(q, circuit);
                if (dynamic) {
                    // feasible if any uniform WPT/WIT split works
                    bool ok = false;
                    for (int g = 1; g < 64 && !ok; ++g) {
                        double m0 = sc.m_total * g / 64.0;
                        double m_i = (sc.m_total - m0) / sc.num_sensors;
                        if (m0 < 1.0 || m_i < 1.0) continue;
                        if (charged * m0 / m_i >= snr_floor_power(sc, i, m_i)) {
                            ok = true;
                        }
                    }
                    if (!ok) return false;
                } else {
                    double pbar = charged * sc.m0_fixed / sc.m_fixed[i];
                    if (pbar < snr_floor_power(sc, i, sc.m_fixed[i])) return false;
                }
            }
            return true;
        };
        if (!feasible_at(sc.p_max)) {
            throw InfeasibleScenario("exhaustive_search: infeasible at power cap");
        }
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (lo + hi);
            if (feasible_at(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        p_lo = std::max(hi, sc.p_max * 1e-9);
    }

    auto p_grid = log_grid(p_lo, sc.p_max, points_per_axis);
    std::vector<double> m0_grid{sc.m0_fixed};
    std::vector<double> m_grid;
    if (dynamic) {
        m0_grid = log_grid(1.0, sc.m_total - sc.num_sensors, points_per_axis);
        m_grid = log_grid(1.0, sc.m_total - 1.0, points_per_axis);
        for (double& v : m0_grid) v = std::max(1.0, std::round(v));
        for (double& v : m_grid) v = std::max(1.0, std::round(v));
    }

    EsResult res;
    res.grid_spec = {{"points_per_axis", points_per_axis},
                     {"power_lo_watts", p_lo},
                     {"power_hi_watts", sc.p_max},
                     {"power_spacing", "geometric"},
                     {"dynamic_frame", dynamic}};

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pidx(sc.num_sources, 0);
    do {
        std::vector<double> power(sc.num_sources);
        double total = 0.0;
        for (int j = 0; j < sc.num_sources; ++j) {
            power[j] = p_grid[pidx[j]];
            total += power[j];
        }
        if (total > sc.p_total * (1.0 + 1e-12)) continue;

        if (!dynamic) {
            Allocation a = evaluate_allocation(sc, circuit, power, sc.m0_fixed,
                                               sc.m_fixed);
            if (snr_ok(sc, a) && a.overall_error_approx < best) {
                best = a.overall_error_approx;
                res.allocation = std::move(a);
                res.found = true;
            }
            continue;
        }
        for (double m0 : m0_grid) {
            std::vector<int> midx(sc.num_sensors, 0);
            do {
                std::vector<double> m(sc.num_sensors);
                double m_sum = m0;
                for (int i = 0; i < sc.num_sensors; ++i) {
                    m[i] = m_grid[midx[i]];
                    m_sum += m[i];
                }
                if (m_sum > sc.m_total * (1.0 + 1e-12)) continue;
                Allocation a = evaluate_allocation(sc, circuit, power, m0, m);
                if (snr_ok(sc, a) && a.overall_error_approx < best) {
                    best = a.overall_error_approx;
                    res.allocation = std::move(a);
                    res.found = true;
                }
            } while (advance(midx, static_cast<int>(m_grid.size())));
        }
    } while (advance(pidx, points_per_axis));

    if (!res.found) {
        throw InfeasibleScenario("exhaustive_search: no feasible grid point");
    }
    return res;
}

LpaResult lpa(const Scenario& sc, const eh::EhCircuit& circuit, double eta) {
    sc.validate();
    if (!sc.fixed_frame()) {
        throw std::invalid_argument("lpa requires a fixed-frame scenario");
    }
    const int m = sc.num_sources;
    const int n = sc.num_sensors;

    auto lin_charged = [&](const std::vector<double>& power, int i) {
        auto q = eh::received_powers(power, sc.wpt_gains[i]);
        return eh::linear_eh(q, eta);
    };

    // minimum uniform power under the linear model
    double lo = 0.0, hi = sc.p_max;
    auto margin = [&](double t) {
        std::vector<double> p(m, std::min(t, sc.p_max));
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double pbar = lin_charged(p, i) * sc.m0_fixed / sc.m_fixed[i];
            worst = std::min(worst, pbar - snr_floor_power(sc, i, sc.m_fixed[i]));
        }
        return worst;
    };
    if (margin(sc.p_max) < 0.0) {
        throw InfeasibleScenario("lpa: infeasible under the linear model");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (margin(mid) >= 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    double t_min = std::min(hi, sc.p_max);
    if (t_min * m > sc.p_total * (1.0 + 1e-12)) {
        throw InfeasibleScenario("lpa: minimum linear-model power exceeds budget");
    }
    double t0 = std::min(t_min + (sc.p_total - t_min * m) / m, sc.p_max);

    // one convex solve in (P, Pbar): all constraints are linear or convex
    solver::ConvexProgram prog;
    prog.dim = m + n;
    prog.lower.setConstant(prog.dim, 0.0);
    prog.upper.setConstant(prog.dim, std::numeric_limits<double>::infinity());
    prog.scale.setOnes(prog.dim);
    for (int j = 0; j < m; ++j) {
        prog.lower[j] = sc.p_max * 1e-12;
        prog.upper[j] = sc.p_max;
        prog.scale[j] = sc.p_max;
    }
    for (int i = 0; i < n; ++i) {
        prog.lower[m + i] = snr_floor_power(sc, i, sc.m_fixed[i]);
        prog.scale[m + i] = prog.lower[m + i];
    }
    prog.objective = [sc, m, n](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        if (grad) grad->setZero(x.size());
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            double snr = x[m + i] * sc.wit_gains[i] / sc.noise_power[i];
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
        double ratio = sc.m0_fixed / sc.m_fixed[i];
        std::vector<double> coeff(m);
        for (int j = 0; j < m; ++j) coeff[j] = eta * sc.wpt_gains[i][j] * ratio;
        prog.constraints.push_back(
            [coeff, m, i](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                double lin = 0.0;
                for (int j = 0; j < m; ++j) lin += coeff[j] * x[j];
                if (grad) {
                    grad->setZero(x.size());
                    for (int j = 0; j < m; ++j) (*grad)[j] = -coeff[j];
                    (*grad)[m + i] = 1.0;
                }
                return x[m + i] - lin;
            });
    }
    double p_total = sc.p_total;
    prog.constraints.push_back(
        [p_total, m](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
            if (grad) grad->setZero(x.size());
            double sum = -p_total;
            for (int j = 0; j < m; ++j) {
                sum += x[j];
                if (grad) (*grad)[j] = 1.0;
            }
            return sum;
        });

    prog.x0.resize(prog.dim);
    std::vector<double> start_power(m, t0 * (1.0 - 1e-9));
    for (int j = 0; j < m; ++j) prog.x0[j] = start_power[j];
    for (int i = 0; i < n; ++i) {
        double cap = lin_charged(start_power, i) * sc.m0_fixed / sc.m_fixed[i];
        double floor = prog.lower[m + i];
        if (!(cap > floor)) {
            throw InfeasibleScenario("lpa: start point infeasible");
        }
        prog.x0[m + i] = floor + (cap - floor) * (1.0 - 1e-7);
    }

    auto res = solver::minimize(prog);
    std::vector<double> power(m);
    for (int j = 0; j < m; ++j) power[j] = res.x[j];

    LpaResult out;
    out.eta = eta;
    // predicted allocation under the linear model
    out.predicted.source_power = power;
    out.predicted.wpt_blocklength = sc.m0_fixed;
    out.predicted.wit_blocklengths = sc.m_fixed;
    out.predicted.sensor_power.resize(n);
    out.predicted.per_link_error.resize(n);
    for (int i = 0; i < n; ++i) {
        double pbar = lin_charged(power, i) * sc.m0_fixed / sc.m_fixed[i];
        double snr = pbar * sc.wit_gains[i] / sc.noise_power[i];
        out.predicted.sensor_power[i] = pbar;
        out.predicted.per_link_error[i] = fbl::error_prob(
            snr, sc.packet_bits[i] / sc.m_fixed[i], sc.m_fixed[i]);
        if (out.predicted.per_link_error[i] > 0.1) {
            out.predicted.reliability_flag = true;
        }
    }
    out.predicted.overall_error_approx =
        fbl::overall_error_approx(out.predicted.per_link_error);
    out.predicted.overall_error_exact =
        fbl::overall_error_exact(out.predicted.per_link_error);
    out.actual = evaluate_allocation(sc, circuit, power, sc.m0_fixed, sc.m_fixed);
    return out;
}

ScaResult ipa(const Scenario& sc, const eh::EhCircuit& circuit,
              const ScaOptions& opts) {
    sc.validate();
    if (sc.fixed_frame()) {
        throw std::invalid_argument("ipa expects a dynamic-frame scenario");
    }
    Allocation as = average_sharing(sc, circuit, Mode::kDynamic);
    Scenario fixed = sc;
    fixed.m0_fixed = as.wpt_blocklength;
    fixed.m_fixed = as.wit_blocklengths;
    return algorithm1(fixed, circuit, opts);
}

JointResult iba(const Scenario& sc, const eh::EhCircuit& circuit,
                const solver::SolveOptions& opts) {
    sc.validate();
    if (sc.fixed_frame()) {
        throw std::invalid_argument("iba expects a dynamic-frame scenario");
    }
    const int n = sc.num_sensors;
    auto power = as_power(sc);

    // seed the frame restriction with the best scanned WPT share
    auto sweep = share_sweep(sc, circuit, power, 201);
    const SharePoint* seed = nullptr;
    for (const auto& pt : sweep) {
        if (!pt.feasible) continue;
        if (!seed ||
            pt.alloc.overall_error_approx < seed->alloc.overall_error_approx) {
            seed = &pt;
        }
    }
    if (!seed) throw InfeasibleScenario("iba: no feasible WPT share");

    JointVars start;
    start.p_inv.resize(sc.num_sources);
    for (int j = 0; j < sc.num_sources; ++j) start.p_inv[j] = 1.0 / power[j];
    start.m0 = seed->alloc.wpt_blocklength;
    start.inv_blocklength.resize(n);
    start.sqrt_power.resize(n);
    for (int i = 0; i < n; ++i) {
        start.inv_blocklength[i] = 1.0 / seed->alloc.wit_blocklengths[i];
        start.sqrt_power[i] = std::sqrt(seed->alloc.sensor_power[i]);
    }
    JointVars best = optimize_frame(sc, circuit, power, start, opts);

    JointResult out;
    out.continuous_eps = 0.0;
    std::vector<double> wit_m(n), links(n);
    for (int i = 0; i < n; ++i) {
        wit_m[i] = 1.0 / best.inv_blocklength[i];
        links[i] = fbl::error_prob_tilde(best.sqrt_power[i],
                                         best.inv_blocklength[i],
                                         sc.wit_gains[i], sc.noise_power[i],
                                         sc.packet_bits[i]);
        out.continuous_eps += links[i];
    }
    out.trace.rows.push_back({0, out.continuous_eps, links});
    out.trace.converged = true;
    out.trace.iterations = 1;
    out.allocation = round_blocklengths(sc, circuit, power, best.m0, wit_m);
    return out;
}

}  // namespace wpt::baselines
