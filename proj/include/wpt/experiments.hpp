#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wpt/allocation.hpp"
#include "wpt/eh.hpp"
#include "wpt/scenario.hpp"

// Sweep harness: run a set of allocators across one swept parameter and a
// set of seeds, and persist the results as CSV or JSON plot data.

namespace wpt::experiments {

struct SweepRecord {
    std::string method;  // PD|IP|AS|ES|LPA|NPA|IPA|IBA
    std::string axis;
    double value = 0.0;
    std::uint64_t seed = 0;
    std::string status = "ok";  // ok|infeasible|error
    double eps_approx = 0.0;
    double eps_exact = 0.0;
    std::vector<double> per_link;
    int iterations = 0;
    double wall_ms = 0.0;
};

struct SweepBase {
    int num_sources = 3;
    int num_sensors = 3;
    double p_total_dbm = 36.0;
    double p_max_dbm = 33.0;
    double m_total = 400.0;
    double m0_share = 0.5;       // WPT share when a fixed frame is needed
    double packet_bits = 90.0;
    double noise_dbm = -100.0;
    double source_distance = 20.0;
    double sensor_radius = 2.0;
    eh::EhCircuit circuit = eh::EhCircuit::defaults(3);
    bool circuit_given = false;  // rebuild defaults when sources change
};

struct SweepConfig {
    std::string axis;  // p_total_dbm|p_max_dbm|m_total|packet_bits|m0_share|
                       // sensor_count|source_count|source_distance|sensor_radius
    std::vector<double> values;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    int es_grid = 8;
    SweepBase base;
};

SweepConfig sweep_config_from_json(const nlohmann::json& j);
SweepConfig load_sweep_config(const std::string& path);

/// Scenario for one sweep point. The channel seed depends only on the
/// master seed and the point index, never on the method list.
Scenario scenario_for_point(const SweepConfig& cfg, double value,
                            std::uint64_t master_seed, std::uint64_t index,
                            bool fixed_frame, eh::EhCircuit* circuit);

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

nlohmann::json records_to_json(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> records_from_json(const nlohmann::json& j);
std::string records_to_csv(const std::vector<SweepRecord>& records);

/// Writes CSV or JSON ("csv"|"json"). Throws on empty records or IO error.
void emit(const std::vector<SweepRecord>& records, const std::string& format,
          const std::string& path);

}  // namespace wpt::experiments
