#include "wpt/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "wpt/baselines.hpp"
#include "wpt/sca_joint.hpp"
#include "wpt/sca_power.hpp"

namespace wpt::experiments {

namespace {

const std::set<std::string> kAxes = {
    "p_total_dbm", "p_max_dbm",    "m_total",         "packet_bits",
    "m0_share",    "sensor_count", "source_count",    "source_distance",
    "sensor_radius"};

const std::set<std::string> kMethods = {"PD",  "IP",  "AS",  "ES",
                                        "LPA", "NPA", "IPA", "IBA"};

bool needs_fixed_frame(const std::string& method) {
    return method == "IP" || method == "LPA" || method == "NPA";
}

}  // namespace

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    cfg.axis = j.at("axis").get<std::string>();
    if (!kAxes.count(cfg.axis)) {
        throw std::invalid_argument("unknown sweep axis: " + cfg.axis);
    }
    cfg.values = j.at("values").get<std::vector<double>>();
    cfg.methods = j.at("methods").get<std::vector<std::string>>();
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.values.empty() || cfg.methods.empty() || cfg.seeds.empty()) {
        throw std::invalid_argument("sweep config: values, methods and seeds must be nonempty");
    }
    for (const auto& m : cfg.methods) {
        if (!kMethods.count(m)) {
            throw std::invalid_argument("unknown method tag: " + m);
        }
    }
    if (j.contains("es_grid")) cfg.es_grid = j.at("es_grid").get<int>();
    if (j.contains("base")) {
        const auto& b = j.at("base");
        auto get = [&](const char* key, double fallback) {
            return b.contains(key) ? b.at(key).get<double>() : fallback;
        };
        cfg.base.num_sources =
            b.contains("num_sources") ? b.at("num_sources").get<int>() : 3;
        cfg.base.num_sensors =
            b.contains("num_sensors") ? b.at("num_sensors").get<int>() : 3;
        cfg.base.p_total_dbm = get("p_total_dbm", cfg.base.p_total_dbm);
        cfg.base.p_max_dbm = get("p_max_dbm", cfg.base.p_max_dbm);
        cfg.base.m_total = get("m_total", cfg.base.m_total);
        cfg.base.m0_share = get("m0_share", cfg.base.m0_share);
        cfg.base.packet_bits = get("packet_bits", cfg.base.packet_bits);
        cfg.base.noise_dbm = get("noise_dbm", cfg.base.noise_dbm);
        cfg.base.source_distance = get("source_distance", cfg.base.source_distance);
        cfg.base.sensor_radius = get("sensor_radius", cfg.base.sensor_radius);
        if (b.contains("circuit")) {
            cfg.base.circuit = eh::EhCircuit::from_json(b.at("circuit"));
            cfg.base.circuit_given = true;
        }
    }
    return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep config: " + path);
    nlohmann::json j;
    in >> j;
    return sweep_config_from_json(j);
}

Scenario scenario_for_point(const SweepConfig& cfg, double value,
                            std::uint64_t master_seed, std::uint64_t index,
                            bool fixed_frame, eh::EhCircuit* circuit) {
    SweepBase b = cfg.base;
    const std::string& ax = cfg.axis;
    if (ax == "p_total_dbm") b.p_total_dbm = value;
    else if (ax == "p_max_dbm") b.p_max_dbm = value;
    else if (ax == "m_total") b.m_total = value;
    else if (ax == "packet_bits") b.packet_bits = value;
    else if (ax == "m0_share") b.m0_share = value;
    else if (ax == "sensor_count") b.num_sensors = static_cast<int>(value);
    else if (ax == "source_count") b.num_sources = static_cast<int>(value);
    else if (ax == "source_distance") b.source_distance = value;
    else if (ax == "sensor_radius") b.sensor_radius = value;

    TopologySpec topo = default_topology(b.num_sources, b.num_sensors,
                                         split_seed(master_seed, index),
                                         b.source_distance, {-15.0, -15.0},
                                         b.sensor_radius);
    FrameConfig frame;
    frame.p_total = dbm_to_watts(b.p_total_dbm);
    frame.p_max = dbm_to_watts(b.p_max_dbm);
    frame.m_total = b.m_total;
    if (fixed_frame) {
        frame.m0_fixed = std::max(1.0, std::round(b.m0_share * b.m_total));
        frame.m_fixed.assign(
            b.num_sensors,
            std::max(1.0, std::floor((b.m_total - frame.m0_fixed) / b.num_sensors)));
    }
    Scenario sc = generate_scenario(topo, frame);
    for (auto& v : sc.noise_power) v = dbm_to_watts(b.noise_dbm);
    for (auto& v : sc.packet_bits) v = b.packet_bits;
    if (circuit) {
        *circuit = b.circuit_given ? b.circuit
                                   : eh::EhCircuit::defaults(b.num_sources);
    }
    return sc;
}

namespace {

void fill_from_allocation(SweepRecord& rec, const Allocation& a, int iters) {
    rec.eps_approx = a.overall_error_approx;
    rec.eps_exact = a.overall_error_exact;
    rec.per_link = a.per_link_error;
    rec.iterations = iters;
}

SweepRecord run_one(const SweepConfig& cfg, const std::string& method,
                    double value, std::uint64_t seed, std::uint64_t index) {
    SweepRecord rec;
    rec.method = method;
    rec.axis = cfg.axis;
    rec.value = value;
    rec.seed = seed;
    rec.eps_approx = std::numeric_limits<double>::quiet_NaN();
    rec.eps_exact = std::numeric_limits<double>::quiet_NaN();

    auto t0 = std::chrono::steady_clock::now();
    try {
        eh::EhCircuit circuit = cfg.base.circuit;
        Scenario sc = scenario_for_point(cfg, value, seed, index,
                                         needs_fixed_frame(method), &circuit);
        if (method == "PD") {
            auto r = algorithm2(sc, circuit);
            fill_from_allocation(rec, r.allocation, r.trace.iterations);
        } else if (method == "IP" || method == "NPA") {
            auto r = algorithm1(sc, circuit);
            fill_from_allocation(rec, r.allocation, r.trace.iterations);
        } else if (method == "AS") {
            auto mode = sc.fixed_frame() ? baselines::Mode::kFixed
                                         : baselines::Mode::kDynamic;
            fill_from_allocation(rec, baselines::average_sharing(sc, circuit, mode), 1);
        } else if (method == "ES") {
            auto r = baselines::exhaustive_search(sc, circuit, cfg.es_grid);
            fill_from_allocation(rec, r.allocation, 1);
        } else if (method == "LPA") {
            auto r = baselines::lpa(sc, circuit, 0.5);
            // report the actual error under the true harvester model
            fill_from_allocation(rec, r.actual, 1);
        } else if (method == "IPA") {
            auto r = baselines::ipa(sc, circuit);
            fill_from_allocation(rec, r.allocation, r.trace.iterations);
        } else if (method == "IBA") {
            auto r = baselines::iba(sc, circuit);
            fill_from_allocation(rec, r.allocation, r.trace.iterations);
        }
    } catch (const InfeasibleScenario&) {
        rec.status = "infeasible";
    } catch (const std::exception&) {
        rec.status = "error";
    }
    auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rec;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
    std::vector<SweepRecord> records;
    for (std::uint64_t s = 0; s < cfg.seeds.size(); ++s) {
        for (std::uint64_t v = 0; v < cfg.values.size(); ++v) {
            // one channel realization per master seed: values on a budget or
            // frame axis reuse the identical draw, so curves are comparable
            for (const auto& method : cfg.methods) {
                records.push_back(
                    run_one(cfg, method, cfg.values[v], cfg.seeds[s], 0));
            }
        }
    }
    return records;
}

nlohmann::json records_to_json(const std::vector<SweepRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        arr.push_back({{"method", r.method},
                       {"axis", r.axis},
                       {"value", r.value},
                       {"seed", r.seed},
                       {"status", r.status},
                       {"eps_approx", r.eps_approx},
                       {"eps_exact", r.eps_exact},
                       {"per_link", r.per_link},
                       {"iterations", r.iterations},
                       {"wall_ms", r.wall_ms}});
    }
    return arr;
}

std::vector<SweepRecord> records_from_json(const nlohmann::json& j) {
    std::vector<SweepRecord> out;
    for (const auto& e : j) {
        SweepRecord r;
        r.method = e.at("method").get<std::string>();
        r.axis = e.at("axis").get<std::string>();
        r.value = e.at("value").get<double>();
        r.seed = e.at("seed").get<std::uint64_t>();
        r.status = e.at("status").get<std::string>();
        r.eps_approx = e.at("eps_approx").is_null()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : e.at("eps_approx").get<double>();
        r.eps_exact = e.at("eps_exact").is_null()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : e.at("eps_exact").get<double>();
        r.per_link = e.at("per_link").get<std::vector<double>>();
        r.iterations = e.at("iterations").get<int>();
        r.wall_ms = e.at("wall_ms").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream os;
    os.precision(17);
    os << "method,axis,value,seed,eps_approx,eps_exact,iters,wall_ms,per_link,status\n";
    for (const auto& r : records) {
        os << r.method << "," << r.axis << "," << r.value << "," << r.seed
           << "," << r.eps_approx << "," << r.eps_exact << "," << r.iterations
           << "," << r.wall_ms << ",";
        for (std::size_t i = 0; i < r.per_link.size(); ++i) {
            if (i) os << ";";
            os << r.per_link[i];
        }
        os << "," << r.status << "\n";
    }
    return os.str();
}

void emit(const std::vector<SweepRecord>& records, const std::string& format,
          const std::string& path) {
    if (records.empty()) {
        throw std::invalid_argument("emit: no records to write");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    if (format == "csv") {
        out << records_to_csv(records);
    } else if (format == "json") {
        out << records_to_json(records).dump(2) << "\n";
    } else {
        throw std::invalid_argument("emit: unknown format " + format);
    }
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

}  // namespace wpt::experiments
