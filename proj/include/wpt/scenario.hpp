#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

// Problem instances: network geometry, channel gains, budgets, frame
// configuration, unit conversions and reproducible random generation.

namespace wpt {

struct InfeasibleScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    int num_sources = 0;
    int num_sensors = 0;
    std::vector<std::vector<double>> wpt_gains;  // [sensor][source]
    std::vector<double> wit_gains;               // [sensor]
    std::vector<double> noise_power;             // watts
    std::vector<double> packet_bits;
    double symbol_duration = 66.7e-6;            // seconds
    double p_total = 0.0;                        // watts
    double p_max = 0.0;                          // watts
    double m_total = 0.0;                        // symbols
    // fixed-frame fields; m0_fixed == 0 marks a dynamic-frame scenario
    double m0_fixed = 0.0;
    std::vector<double> m_fixed;

    bool fixed_frame() const { return m0_fixed >= 1.0; }
    void validate() const;  // throws std::invalid_argument
};

struct TopologySpec {
    std::array<double, 2> destination{0.0, 0.0};
    std::vector<std::array<double, 2>> source_positions;
    std::vector<std::array<double, 2>> sensor_positions;
    double pathloss_exponent = 2.7;
    double reference_gain = 1e-3;  // at 1 m
    double rayleigh_scale = 1.0;
    std::uint64_t rng_seed = 1;
};

struct FrameConfig {
    double p_total = 0.0;  // watts
    double p_max = 0.0;    // watts
    double m_total = 0.0;
    double m0_fixed = 0.0;
    std::vector<double> m_fixed;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Pathloss + Rayleigh-squared gains from geometry; deterministic per seed.
Scenario generate_scenario(const TopologySpec& topo, const FrameConfig& frame);

/// Sources on an arc at `source_distance` from the destination toward the
/// sensor cluster; sensors evenly on a circle of `sensor_radius` around
/// `sensor_center`.
TopologySpec default_topology(int num_sources, int num_sensors,
                              std::uint64_t seed,
                              double source_distance = 20.0,
                              std::array<double, 2> sensor_center = {-15.0, -15.0},
                              double sensor_radius = 2.0);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

/// splitmix64 step; used to fan out per-scenario seeds from a master seed.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

}  // namespace wpt
