#include "wpt/scenario.hpp"

#include <cmath>
#include <fstream>

namespace wpt {

namespace {

// Deterministic 64-bit generator (splitmix64) so generated scenarios are
// bit-identical across platforms.
struct Rng {
    std::uint64_t state;
    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double next_unit() {  // in (0,1)
        while (true) {
            double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
            if (u > 0.0 && u < 1.0) return u;
        }
    }
};

double rayleigh_draw(Rng& rng, double scale) {
    while (true) {
        double h = scale * std::sqrt(-2.0 * std::log(rng.next_unit()));
        if (h > 0.0) return h;
    }
}

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1];
    return std::hypot(dx, dy);
}

}  // namespace

void Scenario::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("Scenario: " + msg); };
    if (num_sources < 1 || num_sensors < 1) fail("need at least one source and sensor");
    if (static_cast<int>(wpt_gains.size()) != num_sensors ||
        static_cast<int>(wit_gains.size()) != num_sensors ||
        static_cast<int>(noise_power.size()) != num_sensors ||
        static_cast<int>(packet_bits.size()) != num_sensors)
        fail("per-sensor array size mismatch");
    for (const auto& row : wpt_gains) {
        if (static_cast<int>(row.size()) != num_sources) fail("gain row size mismatch");
        for (double z : row)
            if (!(z > 0.0) || !std::isfinite(z)) fail("WPT gains must be strictly positive");
    }
    for (double z : wit_gains)
        if (!(z > 0.0) || !std::isfinite(z)) fail("WIT gains must be strictly positive");
    for (double s : noise_power)
        if (!(s > 0.0)) fail("noise power must be strictly positive");
    for (double k : packet_bits)
        if (!(k > 0.0)) fail("packet size must be positive");
    if (!(p_total > 0.0) || !(p_max > 0.0)) fail("power budgets must be positive");
    if (!(symbol_duration > 0.0)) fail("symbol duration must be positive");
    if (!(m_total >= 1.0)) fail("blocklength budget must be at least one symbol");
    if (fixed_frame()) {
        if (static_cast<int>(m_fixed.size()) != num_sensors)
            fail("fixed-frame mode needs one WIT blocklength per sensor");
        double sum = 0.0;
        for (double m : m_fixed) {
            if (!(m >= 1.0)) fail("every WIT blocklength must be >= 1");
            sum += m;
        }
        if (sum > m_total * (1.0 + 1e-12))
            fail("sum of WIT blocklengths exceeds m_total");
    }
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

Scenario generate_scenario(const TopologySpec& topo, const FrameConfig& frame) {
    if (topo.source_positions.empty() || topo.sensor_positions.empty())
        throw std::invalid_argument("generate_scenario: empty topology");
    if (!(topo.pathloss_exponent >= 0.0) || !(topo.rayleigh_scale > 0.0) ||
        !(topo.reference_gain > 0.0))
        throw std::invalid_argument("generate_scenario: invalid propagation parameters");

    Scenario s;
    s.num_sources = static_cast<int>(topo.source_positions.size());
    s.num_sensors = static_cast<int>(topo.sensor_positions.size());
    s.p_total = frame.p_total;
    s.p_max = frame.p_max;
    s.m_total = frame.m_total;
    s.m0_fixed = frame.m0_fixed;
    s.m_fixed = frame.m_fixed;

    Rng rng{topo.rng_seed};
    auto gain = [&](double d) {
        if (!(d > 0.0))
            throw std::invalid_argument("generate_scenario: coincident nodes");
        double h = rayleigh_draw(rng, topo.rayleigh_scale);
        return topo.reference_gain * std::pow(d, -topo.pathloss_exponent) * h * h;
    };

    s.wpt_gains.resize(s.num_sensors);
    for (int i = 0; i < s.num_sensors; ++i) {
        s.wpt_gains[i].resize(s.num_sources);
        for (int j = 0; j < s.num_sources; ++j) {
            s.wpt_gains[i][j] =
                gain(distance(topo.sensor_positions[i], topo.source_positions[j]));
        }
    }
    s.wit_gains.resize(s.num_sensors);
    s.noise_power.assign(s.num_sensors, dbm_to_watts(-100.0));
    s.packet_bits.assign(s.num_sensors, 90.0);
    for (int i = 0; i < s.num_sensors; ++i) {
        s.wit_gains[i] = gain(distance(topo.sensor_positions[i], topo.destination));
    }
    s.validate();
    return s;
}

TopologySpec default_topology(int num_sources, int num_sensors,
                              std::uint64_t seed, double source_distance,
                              std::array<double, 2> sensor_center,
                              double sensor_radius) {
    TopologySpec topo;
    topo.rng_seed = seed;
    double azimuth = std::atan2(sensor_center[1], sensor_center[0]);
    double spread = 35.0 * M_PI / 180.0;
    for (int j = 0; j < num_sources; ++j) {
        double t = num_sources == 1
                       ? 0.0
                       : -0.5 + static_cast<double>(j) / (num_sources - 1);
        double ang = azimuth + t * spread;
        topo.source_positions.push_back(
            {source_distance * std::cos(ang), source_distance * std::sin(ang)});
    }
    for (int i = 0; i < num_sensors; ++i) {
        double ang = 2.0 * M_PI * i / num_sensors;
        topo.sensor_positions.push_back(
            {sensor_center[0] + sensor_radius * std::cos(ang),
             sensor_center[1] + sensor_radius * std::sin(ang)});
    }
    return topo;
}

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    s.num_sources = j.at("num_sources").get<int>();
    s.num_sensors = j.at("num_sensors").get<int>();
    s.wpt_gains = j.at("wpt_gains").get<std::vector<std::vector<double>>>();
    s.wit_gains = j.at("wit_gains").get<std::vector<double>>();
    // powers live in dBm on disk
    for (double dbm : j.at("noise_power").get<std::vector<double>>())
        s.noise_power.push_back(dbm_to_watts(dbm));
    s.packet_bits = j.at("packet_bits").get<std::vector<double>>();
    if (j.contains("symbol_duration")) s.symbol_duration = j.at("symbol_duration");
    s.p_total = dbm_to_watts(j.at("p_total").get<double>());
    s.p_max = dbm_to_watts(j.at("p_max").get<double>());
    s.m_total = j.at("m_total").get<double>();
    if (j.contains("m0_fixed")) s.m0_fixed = j.at("m0_fixed");
    if (j.contains("m_fixed")) s.m_fixed = j.at("m_fixed").get<std::vector<double>>();
    s.validate();
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    std::vector<double> noise_dbm;
    for (double w : s.noise_power) noise_dbm.push_back(watts_to_dbm(w));
    nlohmann::json j{{"num_sources", s.num_sources},
                     {"num_sensors", s.num_sensors},
                     {"wpt_gains", s.wpt_gains},
                     {"wit_gains", s.wit_gains},
                     {"noise_power", noise_dbm},
                     {"packet_bits", s.packet_bits},
                     {"symbol_duration", s.symbol_duration},
                     {"p_total", watts_to_dbm(s.p_total)},
                     {"p_max", watts_to_dbm(s.p_max)},
                     {"m_total", s.m_total}};
    if (s.fixed_frame()) {
        j["m0_fixed"] = s.m0_fixed;
        j["m_fixed"] = s.m_fixed;
    }
    return j;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace wpt
