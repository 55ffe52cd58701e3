#include "wpt/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wpt/fbl.hpp"

namespace wpt {

Allocation evaluate_allocation(const Scenario& sc, const eh::EhCircuit& circuit,
                               const std::vector<double>& source_power,
                               double m0, const std::vector<double>& wit_m) {
    Allocation a;
    a.source_power = source_power;
    a.wpt_blocklength = m0;
    a.wit_blocklengths = wit_m;
    a.sensor_power.resize(sc.num_sensors);
    a.per_link_error.resize(sc.num_sensors);
    for (int i = 0; i < sc.num_sensors; ++i) {
        auto q = eh::received_powers(source_power, sc.wpt_gains[i]);
        double charged = eh::f_nl(q, circuit);
        double pbar = charged * m0 / wit_m[i];
        double snr = pbar * sc.wit_gains[i] / sc.noise_power[i];
        a.sensor_power[i] = pbar;
        a.per_link_error[i] =
            fbl::error_prob(snr, sc.packet_bits[i] / wit_m[i], wit_m[i]);
        if (a.per_link_error[i] > 0.1) a.reliability_flag = true;
    }
    a.overall_error_approx = fbl::overall_error_approx(a.per_link_error);
    a.overall_error_exact = fbl::overall_error_exact(a.per_link_error);
    return a;
}

FeasibilityReport check_allocation(const Scenario& sc,
                                   const eh::EhCircuit& circuit,
                                   const Allocation& alloc, double rel_tol) {
    FeasibilityReport rep;
    auto violate = [&](const std::string& msg) {
        rep.feasible = false;
        rep.violations.push_back(msg);
    };
    std::ostringstream os;

    double total = 0.0;
    for (int j = 0; j < sc.num_sources; ++j) {
        double p = alloc.source_power[j];
        total += p;
        if (p < -rel_tol * sc.p_max || p > sc.p_max * (1.0 + rel_tol)) {
            os.str("");
            os << "source " << j << " power " << p << " outside [0, p_max]";
            violate(os.str());
        }
    }
    if (total > sc.p_total * (1.0 + rel_tol)) violate("total power budget exceeded");

    double m_sum = 0.0;
    for (double m : alloc.wit_blocklengths) m_sum += m;
    if (sc.fixed_frame()) {
        if (m_sum > sc.m_total * (1.0 + rel_tol)) violate("WIT blocklength budget exceeded");
    } else {
        if (alloc.wpt_blocklength + m_sum > sc.m_total * (1.0 + rel_tol))
            violate("total blocklength budget exceeded");
    }
    if (alloc.wpt_blocklength < 1.0 - rel_tol) violate("WPT blocklength below 1");

    for (int i = 0; i < sc.num_sensors; ++i) {
        double m_i = alloc.wit_blocklengths[i];
        if (m_i < 1.0 - rel_tol) {
            os.str("");
            os << "sensor " << i << " WIT blocklength below 1";
            violate(os.str());
        }
        auto q = eh::received_powers(alloc.source_power, sc.wpt_gains[i]);
        double charged = eh::f_nl(q, circuit);
        double energy_cap = charged * alloc.wpt_blocklength;
        if (alloc.sensor_power[i] * m_i > energy_cap * (1.0 + rel_tol)) {
            os.str("");
            os << "sensor " << i << " energy balance violated";
            violate(os.str());
        }
        double snr = alloc.sensor_power[i] * sc.wit_gains[i] / sc.noise_power[i];
        double bound =
            std::max(1.0, std::pow(2.0, sc.packet_bits[i] / m_i) - 1.0);
        if (snr < bound - rel_tol * std::max(1.0, bound)) {
            os.str("");
            os << "sensor " << i << " SNR " << snr << " below bound " << bound;
            violate(os.str());
        }
    }
    return rep;
}

nlohmann::json allocation_to_json(const Allocation& a) {
    return nlohmann::json{{"source_power", a.source_power},
                          {"sensor_power", a.sensor_power},
                          {"m0", a.wpt_blocklength},
                          {"m", a.wit_blocklengths},
                          {"per_link_error", a.per_link_error},
                          {"overall_error_approx", a.overall_error_approx},
                          {"overall_error_exact", a.overall_error_exact},
                          {"reliability_flag", a.reliability_flag}};
}

nlohmann::json trace_to_json(const ScaTrace& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"iter", r.iter},
                        {"eps_overall", r.eps_overall},
                        {"eps_per_link", r.eps_per_link}});
    }
    return nlohmann::json{
        {"rows", rows}, {"converged", t.converged}, {"iterations", t.iterations}};
}

std::string trace_to_csv(const ScaTrace& t) {
    std::ostringstream os;
    os.precision(17);
    std::size_t n_links = t.rows.empty() ? 0 : t.rows.front().eps_per_link.size();
    os << "iter,eps_overall";
    for (std::size_t i = 0; i < n_links; ++i) os << ",eps_link_" << i;
    os << "\n";
    for (const auto& r : t.rows) {
        os << r.iter << "," << r.eps_overall;
        for (double e : r.eps_per_link) os << "," << e;
        os << "\n";
    }
    return os.str();
}

}  // namespace wpt
