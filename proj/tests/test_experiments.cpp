#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "wpt/experiments.hpp"
#include "wpt/scenario.hpp"

using namespace wpt;
using nlohmann::json;

namespace {

json base_config() {
    return json{{"axis", "p_total_dbm"},
                {"values", {33.0, 36.0}},
                {"methods", {"AS"}},
                {"seeds", {1, 2}}};
}

}  // namespace

TEST_CASE("sweep config parsing and validation") {
    auto cfg = experiments::sweep_config_from_json(base_config());
    CHECK(cfg.axis == "p_total_dbm");
    REQUIRE(cfg.values.size() == 2);
    CHECK(cfg.methods == std::vector<std::string>{"AS"});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(cfg.es_grid == 8);
    // base defaults
    CHECK(cfg.base.num_sources == 3);
    CHECK(cfg.base.m_total == 400.0);
    CHECK(cfg.base.m0_share == 0.5);

    auto j = base_config();
    j["axis"] = "bandwidth";
    CHECK_THROWS_AS(experiments::sweep_config_from_json(j), std::invalid_argument);
    j = base_config();
    j["methods"] = {"AS", "GREEDY"};
    CHECK_THROWS_AS(experiments::sweep_config_from_json(j), std::invalid_argument);
    j = base_config();
    j["values"] = json::array();
    CHECK_THROWS_AS(experiments::sweep_config_from_json(j), std::invalid_argument);
    j = base_config();
    j["seeds"] = json::array();
    CHECK_THROWS_AS(experiments::sweep_config_from_json(j), std::invalid_argument);
}

TEST_CASE("base overrides reach the generated scenario") {
    auto j = base_config();
    j["es_grid"] = 5;
    j["base"] = {{"num_sources", 2},      {"num_sensors", 4},
                 {"m_total", 300.0},      {"packet_bits", 120.0},
                 {"noise_dbm", -95.0},    {"source_distance", 18.0},
                 {"m0_share", 0.4}};
    auto cfg = experiments::sweep_config_from_json(j);
    CHECK(cfg.es_grid == 5);
    auto sc = experiments::scenario_for_point(cfg, 33.0, 9, 0, true, nullptr);
    CHECK(sc.num_sources == 2);
    CHECK(sc.num_sensors == 4);
    CHECK(sc.m_total == 300.0);
    CHECK(sc.p_total == doctest::Approx(dbm_to_watts(33.0)));
    CHECK(sc.m0_fixed == 120.0);  // round(0.4 * 300)
    for (double k : sc.packet_bits) CHECK(k == 120.0);
    for (double n : sc.noise_power) CHECK(n == doctest::Approx(dbm_to_watts(-95.0)));
}

TEST_CASE("one channel draw per master seed across axis values") {
    auto cfg = experiments::sweep_config_from_json(base_config());
    auto a = experiments::scenario_for_point(cfg, 33.0, 7, 0, false, nullptr);
    auto b = experiments::scenario_for_point(cfg, 36.0, 7, 0, false, nullptr);
    // a budget axis must not perturb the channel, or the curves would
    // compare different realizations at each point
    CHECK(a.wpt_gains == b.wpt_gains);
    CHECK(a.wit_gains == b.wit_gains);
    CHECK(a.p_total != b.p_total);
    auto c = experiments::scenario_for_point(cfg, 33.0, 8, 0, false, nullptr);
    CHECK(a.wpt_gains != c.wpt_gains);
}

TEST_CASE("record serialization round trips through text json") {
    std::vector<experiments::SweepRecord> recs(2);
    recs[0].method = "PD";
    recs[0].axis = "m_total";
    recs[0].value = 400.0;
    recs[0].seed = 11;
    recs[0].eps_approx = 1.25e-9;
    recs[0].eps_exact = 1.2e-9;
    recs[0].per_link = {1e-10, 3e-10, 8.5e-10};
    recs[0].iterations = 4;
    recs[0].wall_ms = 120.5;
    recs[1].method = "IP";
    recs[1].axis = "m_total";
    recs[1].value = 500.0;
    recs[1].seed = 11;
    recs[1].status = "infeasible";
    recs[1].eps_approx = std::nan("");
    recs[1].eps_exact = std::nan("");

    auto text = experiments::records_to_json(recs).dump();
    auto back = experiments::records_from_json(json::parse(text));
    REQUIRE(back.size() == 2);
    CHECK(back[0].method == "PD");
    CHECK(back[0].value == 400.0);
    CHECK(back[0].seed == 11);
    CHECK(back[0].eps_approx == 1.25e-9);
    CHECK(back[0].per_link == recs[0].per_link);
    CHECK(back[0].iterations == 4);
    CHECK(back[0].wall_ms == 120.5);
    // NaN serializes as null and comes back as NaN
    CHECK(back[1].status == "infeasible");
    CHECK(std::isnan(back[1].eps_approx));
    CHECK(std::isnan(back[1].eps_exact));
}

TEST_CASE("csv layout") {
    std::vector<experiments::SweepRecord> recs(1);
    recs[0].method = "AS";
    recs[0].axis = "packet_bits";
    recs[0].value = 90.0;
    recs[0].seed = 3;
    recs[0].eps_approx = 0.5;
    recs[0].eps_exact = 0.375;
    recs[0].per_link = {0.25, 0.25};
    recs[0].iterations = 1;
    recs[0].wall_ms = 2.0;
    auto csv = experiments::records_to_csv(recs);
    std::istringstream is(csv);
    std::string header, row, extra;
    REQUIRE(std::getline(is, header));
    REQUIRE(std::getline(is, row));
    CHECK(!std::getline(is, extra));
    CHECK(header ==
          "method,axis,value,seed,eps_approx,eps_exact,iters,wall_ms,per_link,status");
    CHECK(row == "AS,packet_bits,90,3,0.5,0.375,1,2,0.25;0.25,ok");
}

TEST_CASE("emit writes files and rejects bad input") {
    std::vector<experiments::SweepRecord> recs(1);
    recs[0].method = "AS";
    recs[0].axis = "m_total";
    recs[0].value = 400.0;
    const std::string path = "/tmp/wpt_test_emit.csv";
    experiments::emit(recs, "csv", path);
    std::ifstream in(path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header.rfind("method,axis,", 0) == 0);
    std::remove(path.c_str());

    CHECK_THROWS_AS(experiments::emit({}, "csv", path), std::invalid_argument);
    CHECK_THROWS_AS(experiments::emit(recs, "yaml", path), std::invalid_argument);
}

TEST_CASE("a small sweep is reproducible and complete") {
    auto cfg = experiments::sweep_config_from_json(base_config());
    auto first = experiments::run_sweep(cfg);
    auto second = experiments::run_sweep(cfg);
    REQUIRE(first.size() == 4);  // 2 seeds x 2 values x 1 method
    REQUIRE(second.size() == 4);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].method == "AS");
        CHECK(first[i].axis == "p_total_dbm");
        CHECK(first[i].status == "ok");
        CHECK(first[i].eps_approx == second[i].eps_approx);
        CHECK(first[i].eps_exact == second[i].eps_exact);
        CHECK(first[i].per_link == second[i].per_link);
        CHECK(first[i].eps_approx > 0.0);
        CHECK(first[i].wall_ms >= 0.0);
    }
}

TEST_CASE("infeasible points are recorded, not fatal") {
    auto j = base_config();
    j["methods"] = {"IP", "AS"};
    j["values"] = {33.0};
    j["seeds"] = {1};
    j["base"] = {{"source_distance", 60.0}};  // out of harvesting reach
    auto cfg = experiments::sweep_config_from_json(j);
    auto recs = experiments::run_sweep(cfg);
    REQUIRE(recs.size() == 2);
    for (const auto& r : recs) {
        CHECK(r.status == "infeasible");
        CHECK(std::isnan(r.eps_approx));
    }
}
