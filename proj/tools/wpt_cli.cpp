#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wpt/baselines.hpp"
#include "wpt/eh.hpp"
#include "wpt/experiments.hpp"
#include "wpt/fbl.hpp"
#include "wpt/sca_joint.hpp"
#include "wpt/sca_power.hpp"
#include "wpt/scenario.hpp"

// Command-line front end: solve one scenario, run a config-driven sweep,
// run the built-in self checks, or generate a scenario file.

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 2;
constexpr int kConfigError = 3;
constexpr int kNumericalError = 4;

wpt::eh::EhCircuit load_circuit(const std::string& path, int num_sources) {
    if (path.empty()) return wpt::eh::EhCircuit::defaults(num_sources);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open circuit file: " + path);
    nlohmann::json j;
    in >> j;
    return wpt::eh::EhCircuit::from_json(j);
}

void write_output(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << j.dump(2) << "\n";
}

int cmd_solve(const std::string& scenario_path, const std::string& circuit_path,
              const std::string& method, const std::string& out_path,
              const std::string& format, int grid) {
    wpt::Scenario sc = wpt::load_scenario(scenario_path);
    auto circuit = load_circuit(circuit_path, sc.num_sources);

    nlohmann::json result;
    result["method"] = method;
    wpt::ScaTrace trace;
    if (method == "PD") {
        auto r = wpt::algorithm2(sc, circuit);
        result["allocation"] = wpt::allocation_to_json(r.allocation);
        result["continuous_eps"] = r.continuous_eps;
        trace = r.trace;
    } else if (method == "IP" || method == "NPA") {
        auto r = wpt::algorithm1(sc, circuit);
        result["allocation"] = wpt::allocation_to_json(r.allocation);
        trace = r.trace;
    } else if (method == "AS") {
        auto mode = sc.fixed_frame() ? wpt::baselines::Mode::kFixed
                                     : wpt::baselines::Mode::kDynamic;
        result["allocation"] = wpt::allocation_to_json(
            wpt::baselines::average_sharing(sc, circuit, mode));
    } else if (method == "ES") {
        auto r = wpt::baselines::exhaustive_search(sc, circuit, grid);
        result["allocation"] = wpt::allocation_to_json(r.allocation);
        result["grid_spec"] = r.grid_spec;
    } else if (method == "LPA") {
        auto r = wpt::baselines::lpa(sc, circuit, 0.5);
        result["allocation"] = wpt::allocation_to_json(r.actual);
        result["predicted"] = wpt::allocation_to_json(r.predicted);
        result["eta"] = r.eta;
    } else if (method == "IPA") {
        auto r = wpt::baselines::ipa(sc, circuit);
        result["allocation"] = wpt::allocation_to_json(r.allocation);
        trace = r.trace;
    } else if (method == "IBA") {
        auto r = wpt::baselines::iba(sc, circuit);
        result["allocation"] = wpt::allocation_to_json(r.allocation);
        trace = r.trace;
    } else {
        throw std::invalid_argument("unknown method: " + method);
    }
    if (!trace.rows.empty()) result["trace"] = wpt::trace_to_json(trace);

    auto audit = wpt::check_allocation(
        sc, circuit,
        wpt::Allocation{
            result["allocation"].at("source_power").get<std::vector<double>>(),
            result["allocation"].at("sensor_power").get<std::vector<double>>(),
            result["allocation"].at("m0").get<double>(),
            result["allocation"].at("m").get<std::vector<double>>(),
            result["allocation"].at("per_link_error").get<std::vector<double>>(),
            result["allocation"].at("overall_error_approx").get<double>(),
            result["allocation"].at("overall_error_exact").get<double>(),
            result["allocation"].at("reliability_flag").get<bool>()});
    result["feasible"] = audit.feasible;
    result["violations"] = audit.violations;

    if (format == "csv" && !trace.rows.empty()) {
        if (out_path.empty()) {
            std::cout << wpt::trace_to_csv(trace);
        } else {
            std::ofstream out(out_path);
            if (!out) throw std::runtime_error("cannot open output file: " + out_path);
            out << wpt::trace_to_csv(trace);
        }
    } else {
        write_output(result, out_path);
    }
    return kOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              const std::string& format) {
    auto cfg = wpt::experiments::load_sweep_config(config_path);
    auto records = wpt::experiments::run_sweep(cfg);
    std::string path = out_path.empty() ? ("sweep." + format) : out_path;
    wpt::experiments::emit(records, format, path);
    std::cout << "wrote " << records.size() << " records to " << path << "\n";
    return kOk;
}

int cmd_validate(std::uint64_t seed) {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
        if (!ok) ++failures;
    };

    // Gaussian tail round-trip
    {
        bool ok = true;
        for (double p : {1e-9, 1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999}) {
            double r = wpt::fbl::q_function(wpt::fbl::q_inverse(p));
            if (std::abs(r - p) > 1e-10 * std::max(1.0, p)) ok = false;
        }
        check("q-function round trip", ok);
    }
    // Lambert W residual
    {
        bool ok = true;
        for (double x : {-0.36, -0.1, 0.0, 1e-6, 1.0, 1e3, 1e12}) {
            double w = wpt::eh::lambert_w0(x);
            double resid = std::abs(w * std::exp(w) - x);
            if (resid > 1e-12 * std::max(1.0, std::abs(x))) ok = false;
        }
        check("lambert w residual", ok);
    }
    // tangent underestimation on a random scenario
    {
        auto topo = wpt::default_topology(3, 3, seed);
        wpt::FrameConfig frame;
        frame.p_total = wpt::dbm_to_watts(36.0);
        frame.p_max = wpt::dbm_to_watts(33.0);
        frame.m_total = 400.0;
        frame.m0_fixed = 200.0;
        frame.m_fixed = {66.0, 66.0, 66.0};
        auto sc = wpt::generate_scenario(topo, frame);
        auto circuit = wpt::eh::EhCircuit::defaults(3);
        std::vector<double> p_inv(3, 3.0 / sc.p_total);
        auto tan = wpt::eh::linearize(p_inv, sc.wpt_gains[0], circuit);
        bool ok = true;
        for (int t = 0; t < 200; ++t) {
            std::vector<double> probe(3);
            double u = 0.1 + 0.9 * (t % 20) / 20.0;
            for (int j = 0; j < 3; ++j) {
                probe[j] = (1.0 / sc.p_max) / u * (1.0 + 0.3 * ((t + j) % 7));
            }
            double f = wpt::eh::f_nl(
                wpt::eh::received_powers(
                    {1.0 / probe[0], 1.0 / probe[1], 1.0 / probe[2]},
                    sc.wpt_gains[0]),
                circuit);
            double lin = wpt::eh::tangent_value(tan, probe);
            if (lin > f + 1e-9 * std::max(1.0, f)) ok = false;
        }
        check("tangent underestimates harvested power", ok);

        // monotone error trace on the same scenario
        auto r = wpt::algorithm1(sc, circuit);
        bool mono = true;
        for (std::size_t i = 1; i < r.trace.rows.size(); ++i) {
            if (r.trace.rows[i].eps_overall >
                r.trace.rows[i - 1].eps_overall * (1.0 + 1e-12)) {
                mono = false;
            }
        }
        check("power-only optimizer trace is nonincreasing", mono);
        check("power-only optimizer converged", r.trace.converged);
    }
    std::cout << (failures == 0 ? "ALL CHECKS PASSED" : "CHECKS FAILED") << "\n";
    return failures == 0 ? kOk : kNumericalError;
}

int cmd_gen(std::uint64_t seed, int sources, int sensors, double p_total_dbm,
            double p_max_dbm, double m_total, double m0_share, bool fixed,
            double source_distance, const std::string& out_path) {
    auto topo = wpt::default_topology(sources, sensors, seed, source_distance);
    wpt::FrameConfig frame;
    frame.p_total = wpt::dbm_to_watts(p_total_dbm);
    frame.p_max = wpt::dbm_to_watts(p_max_dbm);
    frame.m_total = m_total;
    if (fixed) {
        frame.m0_fixed = std::max(1.0, std::round(m0_share * m_total));
        frame.m_fixed.assign(
            sensors, std::max(1.0, std::floor((m_total - frame.m0_fixed) / sensors)));
    }
    auto sc = wpt::generate_scenario(topo, frame);
    write_output(wpt::scenario_to_json(sc), out_path);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-source WPT / finite-blocklength resource allocation"};
    app.require_subcommand(1);

    std::string scenario_path, circuit_path, out_path;
    std::string method = "PD", format = "json";
    std::uint64_t seed = 1;
    int grid = 8;

    auto* solve = app.add_subcommand("solve", "optimize one scenario");
    solve->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    solve->add_option("--circuit", circuit_path, "harvester circuit JSON file");
    solve->add_option("--method", method, "PD|IP|NPA|AS|ES|LPA|IPA|IBA");
    solve->add_option("--out", out_path, "output path (stdout if omitted)");
    solve->add_option("--format", format, "json|csv (csv emits the trace)");
    solve->add_option("--grid", grid, "points per axis for ES");

    std::string config_path;
    auto* sweep = app.add_subcommand("sweep", "run a config-driven sweep");
    sweep->add_option("config", config_path, "sweep config JSON file")->required();
    sweep->add_option("--out", out_path, "output path");
    sweep->add_option("--format", format, "csv|json");

    auto* validate = app.add_subcommand("validate", "run built-in self checks");
    validate->add_option("--seed", seed, "seed for randomized checks");

    int sources = 3, sensors = 3;
    double p_total_dbm = 36.0, p_max_dbm = 33.0, m_total = 400.0,
           m0_share = 0.5, source_distance = 20.0;
    bool fixed = false;
    auto* gen = app.add_subcommand("gen-scenario", "generate a scenario file");
    gen->add_option("--seed", seed, "channel seed");
    gen->add_option("--sources", sources, "number of WPT sources");
    gen->add_option("--sensors", sensors, "number of sensors");
    gen->add_option("--p-total-dbm", p_total_dbm, "total power budget [dBm]");
    gen->add_option("--p-max-dbm", p_max_dbm, "per-source cap [dBm]");
    gen->add_option("--m-total", m_total, "total blocklength [symbols]");
    gen->add_option("--m0-share", m0_share, "WPT share for fixed frames");
    gen->add_flag("--fixed", fixed, "emit a fixed-frame scenario");
    gen->add_option("--source-distance", source_distance, "source distance [m]");
    gen->add_option("--out", out_path, "output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (solve->parsed()) {
            return cmd_solve(scenario_path, circuit_path, method, out_path,
                             format, grid);
        }
        if (sweep->parsed()) return cmd_sweep(config_path, out_path, format);
        if (validate->parsed()) return cmd_validate(seed);
        if (gen->parsed()) {
            return cmd_gen(seed, sources, sensors, p_total_dbm, p_max_dbm,
                           m_total, m0_share, fixed, source_distance, out_path);
        }
    } catch (const wpt::InfeasibleScenario& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    }
    return kConfigError;
}
