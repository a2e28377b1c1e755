// Copyright 2026 The truckloop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "truckloop/errors.hpp"
#include "truckloop/truck_loop.hpp"

using namespace truckloop;
using Catch::Approx;

namespace {

TimeMatrix uniform_times(std::size_t n, double t) {
    Matrix m(n, t);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
    return TimeMatrix(m);
}

LoopConfig quick_config() {
    LoopConfig cfg = LoopConfig::sa_profile();
    cfg.params.tau = 6;
    cfg.solver_cfg.schedule.num_steps = 3000;
    cfg.solver_cfg.num_restarts = 5;
    return cfg;
}

}  // namespace

TEST_CASE("estimate_demand examples") {
    Matrix d(2);
    d(0, 1) = 0.4;
    DemandEstimate e = estimate_demand(d, {0, 1});
    CHECK(e.reduction(0, 1) == 0.4);
    CHECK(e.total == 0.4);
    CHECK(e.remaining(0, 1) == 0.0);

    d(0, 1) = 1.5;
    e = estimate_demand(d, {0, 1});
    CHECK(e.reduction(0, 1) == 1.0);
    CHECK(e.remaining(0, 1) == 0.5);
}

TEST_CASE("estimate_demand hand walk along 4 -> 6 -> 8 -> 3") {
    Matrix d(9);
    d(4, 6) = 0.6;
    d(4, 8) = 0.7;
    d(6, 8) = 0.25;
    d(6, 3) = 0.5;
    const DemandEstimate e = estimate_demand(d, {4, 6, 8, 3});
    // At 4: 0.6 for 6, then 0.4 of the 0.7 for 8 (truck full).
    CHECK(e.reduction(4, 6) == Approx(0.6));
    CHECK(e.reduction(4, 8) == Approx(0.4));
    // At 6: 0.6 frees up; 0.25 for 8, then 0.35 of the 0.5 for 3.
    CHECK(e.reduction(6, 8) == Approx(0.25));
    CHECK(e.reduction(6, 3) == Approx(0.35));
    CHECK(e.total == Approx(1.6));
}

TEST_CASE("estimate_demand never over-deducts") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(6);
        Matrix d(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && rng.coin()) d(i, j) = rng.uniform(0.0, 1.5);
            }
        }
        const auto route = oracle::random_route(rng, n, 1 + rng.uniform_index(8));
        const DemandEstimate e = estimate_demand(d, route);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(e.remaining(i, j) >= 0.0);
                CHECK(e.reduction(i, j) >= 0.0);
                CHECK(e.reduction(i, j) <= d(i, j));
                total += e.reduction(i, j);
            }
        }
        CHECK(e.total == Approx(total));
        // One truck never holds more than its capacity per hop.
        CHECK(e.total <= static_cast<double>(route.size()) + 1e-9);
    }
}

TEST_CASE("stop condition") {
    LoopConfig cfg;
    Matrix d(2);
    d(0, 1) = 0.0004;
    CHECK(stop(d, 0, cfg));
    d(0, 1) = 0.1;
    CHECK_FALSE(stop(d, 3, cfg));
    CHECK(stop(d, cfg.max_trucks, cfg));
}

TEST_CASE("loop with no demand assigns no trucks") {
    const RoutePlan plan = run_truck_loop(Matrix(4), uniform_times(4, 10), quick_config());
    CHECK(plan.routes.empty());
    CHECK(plan.estimated.empty());
}

TEST_CASE("single demand entry is cleared by one truck") {
    Matrix d(4);
    d(0, 1) = 0.3;
    LoopConfig cfg = quick_config();
    cfg.window.t_max_s = 100;
    const RoutePlan plan = run_truck_loop(d, uniform_times(4, 10), cfg);
    REQUIRE(plan.routes.size() == 1);
    CHECK(plan.estimated[0] == Approx(0.3));
    CHECK(plan.residual.max() < cfg.demand_cutoff);
}

TEST_CASE("loop progress, budget and determinism") {
    Rng rng(44);
    const std::size_t n = 8;
    Matrix d(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && rng.uniform01() < 0.4) d(i, j) = rng.uniform(0.0, 2.0);
        }
    }
    const TimeMatrix t = oracle::random_times(rng, n, 300, 3000);
    LoopConfig cfg = quick_config();
    cfg.window.t_max_s = 20'000;
    cfg.max_trucks = 12;

    std::vector<TruckLogEntry> seen;
    const RoutePlan plan = run_truck_loop(d, t, cfg, SolverRegistry::with_builtins(),
                                          [&](const TruckLogEntry& e) { seen.push_back(e); });
    REQUIRE(plan.routes.size() <= 12);
    REQUIRE_FALSE(plan.routes.empty());
    CHECK(seen.size() == plan.routes.size());

    Matrix prev = d;
    double prev_sum = d.sum();
    Matrix current = d;
    for (std::size_t m = 0; m < plan.routes.size(); ++m) {
        CHECK(plan.routes[m].duration_s <= cfg.window.t_max_s);
        const DemandEstimate e = estimate_demand(current, plan.routes[m].nodes);
        CHECK(e.total == Approx(plan.estimated[m]));
        current = e.remaining;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) CHECK(current(i, j) <= prev(i, j));
        }
        CHECK(prev_sum - current.sum() == Approx(plan.estimated[m]).margin(1e-9));
        prev = current;
        prev_sum = current.sum();
    }
    CHECK(current == plan.residual);

    const RoutePlan again = run_truck_loop(d, t, cfg);
    CHECK(nlohmann::json(again).dump() == nlohmann::json(plan).dump());

    cfg.max_trucks = 1;
    CHECK(run_truck_loop(d, t, cfg).routes.size() == 1);
}

TEST_CASE("loop stops after idle trucks") {
    // Demand between two nodes that are too far apart to reach in the window.
    Matrix tm(3, 10.0);
    for (std::size_t i = 0; i < 3; ++i) tm(i, i) = 0.0;
    tm(0, 1) = tm(1, 0) = 1000.0;
    tm(0, 2) = tm(2, 0) = 1000.0;
    tm(1, 2) = tm(2, 1) = 1000.0;
    Matrix d(3);
    d(0, 1) = 0.5;
    LoopConfig cfg = quick_config();
    cfg.window.t_max_s = 100.0;
    const RoutePlan plan = run_truck_loop(d, TimeMatrix(tm), cfg);
    CHECK(plan.stalled);
    CHECK(plan.routes.size() == kMaxIdleTrucks);
}

TEST_CASE("solver errors carry the truck index") {
    Matrix d(3);
    d(0, 1) = 0.5;
    LoopConfig cfg = quick_config();
    cfg.solver_name = "nope";
    try {
        run_truck_loop(d, uniform_times(3, 10), cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "lookup");
        CHECK(std::string(e.what()).find("truck 0") != std::string::npos);
    }
}

TEST_CASE("plan JSON and truck log") {
    Matrix d(4);
    d(0, 1) = 0.3;
    d(2, 3) = 0.2;
    LoopConfig cfg = quick_config();
    cfg.window.t_max_s = 100;
    const RoutePlan plan = run_truck_loop(d, uniform_times(4, 10), cfg);
    const nlohmann::json j = plan;
    CHECK(j.contains("routes"));
    CHECK(j.contains("estimated"));
    CHECK(j.at("residual").size() == 4);
    const RoutePlan back = plan_from_json(j);
    CHECK(back.routes == plan.routes);
    CHECK(back.estimated == plan.estimated);
    CHECK(back.residual == plan.residual);

    std::ostringstream csv;
    write_truck_log_csv(plan, csv);
    const std::string text = csv.str();
    CHECK(text.rfind("truck,estimated,residual_max,residual_sum,solver_value\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == plan.routes.size() + 1);

    CHECK_THROWS_AS(plan_from_json(nlohmann::json::object()), ParseError);
}
