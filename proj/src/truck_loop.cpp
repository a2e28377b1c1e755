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

#include "truckloop/truck_loop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "truckloop/errors.hpp"

namespace truckloop {

using nlohmann::json;

LoopConfig LoopConfig::sa_profile() {
    LoopConfig c;
    c.params.tau = 15;
    c.solver_name = "sa";
    return c;
}

LoopConfig LoopConfig::external_profile() {
    LoopConfig c;
    c.params.tau = 5;
    c.solver_name = "external";
    return c;
}

void LoopConfig::validate() const {
    params.validate();
    if (!(demand_cutoff >= 0.0)) throw ParameterError("demand cutoff must be non-negative");
    if (max_trucks == 0) throw ParameterError("max trucks must be positive");
    if (!(window.t_max_s > 0.0)) throw ParameterError("window must be positive");
    if (!(capacity > 0.0)) throw ParameterError("capacity must be positive");
}

DemandEstimate estimate_demand(const Matrix& demand, const std::vector<NodeId>& route, double capacity) {
    Matrix left = demand;
    std::map<NodeId, double> on_board;
    double free = capacity;
    for (std::size_t p = 0; p < route.size(); ++p) {
        const NodeId s = route[p];
        if (auto it = on_board.find(s); it != on_board.end()) {
            free += it->second;
            on_board.erase(it);
        }
        for (std::size_t q = p + 1; q < route.size() && free > 0.0; ++q) {
            const NodeId dest = route[q];
            if (dest == s) continue;
            const double amount = std::min(free, left(s, dest));
            if (amount <= 0.0) continue;
            left(s, dest) -= amount;
            on_board[dest] += amount;
            free -= amount;
        }
    }
    DemandEstimate out{demand, left, 0.0};
    out.reduction -= left;
    out.total = out.reduction.sum();
    return out;
}

bool stop(const Matrix& demand, std::size_t m, const LoopConfig& cfg) {
    return m >= cfg.max_trucks || demand.max() < cfg.demand_cutoff;
}

RoutePlan run_truck_loop(const Matrix& demand, const TimeMatrix& time, const LoopConfig& cfg,
                         const SolverRegistry& registry, const TruckCallback& on_truck) {
    cfg.validate();
    if (time.size() != demand.size()) throw DimensionError("demand and time matrices differ in size");

    RoutePlan plan;
    plan.residual = demand;
    const std::uint64_t rectify_root = derive_seed(cfg.solver_cfg.seed, "rectify");
    std::size_t idle = 0;

    for (std::size_t m = 0; !stop(plan.residual, m, cfg); ++m) {
        Route route;
        double solver_value = 0.0;
        try {
            const SingleTruckPubo built = build_single_truck_pubo(plan.residual, time, cfg.params);
            SolverConfig sc = cfg.solver_cfg;
            sc.seed = derive_seed(cfg.solver_cfg.seed, m);
            const SolverResult res = registry.solve(built.pubo, cfg.solver_name, sc);
            solver_value = res.best_value;
            Rng rng(derive_seed(rectify_root, m));
            route = rectify(res.best_assignment, built.pubo, built.index, time, rng);
        } catch (const Error& e) {
            throw Error(e.code(), "truck " + std::to_string(m) + ": " + e.what());
        }
        route = fit_to_window(route, time, cfg.window);

        const DemandEstimate est = estimate_demand(plan.residual, route.nodes, cfg.capacity);
        plan.residual = est.remaining;

        plan.routes.push_back(std::move(route));
        plan.estimated.push_back(est.total);
        const TruckLogEntry entry{m, est.total, plan.residual.max(), plan.residual.sum(), solver_value};
        plan.log.push_back(entry);
        if (on_truck) on_truck(entry);

        idle = est.total > 0.0 ? 0 : idle + 1;
        if (idle >= kMaxIdleTrucks) {
            plan.stalled = true;
            break;
        }
    }
    return plan;
}

void to_json(json& j, const RoutePlan& plan) {
    json residual = json::array();
    for (std::size_t i = 0; i < plan.residual.size(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < plan.residual.size(); ++k) row.push_back(plan.residual(i, k));
        residual.push_back(std::move(row));
    }
    j = json{{"routes", plan.routes}, {"estimated", plan.estimated}, {"residual", std::move(residual)}};
}

RoutePlan plan_from_json(const json& j) {
    if (!j.is_object() || !j.contains("routes") || !j.at("routes").is_array()) {
        throw ParseError("plan: missing field 'routes'");
    }
    RoutePlan plan;
    for (std::size_t k = 0; k < j.at("routes").size(); ++k) {
        try {
            plan.routes.push_back(j.at("routes")[k].get<Route>());
        } catch (const ParseError& e) {
            throw ParseError("routes[" + std::to_string(k) + "]: " + e.what());
        }
    }
    if (j.contains("estimated")) {
        const json& e = j.at("estimated");
        if (!e.is_array()) throw ParseError("plan: field 'estimated' must be an array");
        for (const json& v : e) {
            if (!v.is_number()) throw ParseError("plan.estimated: expected numbers");
            plan.estimated.push_back(v.get<double>());
        }
    }
    if (j.contains("residual")) {
        const json& r = j.at("residual");
        if (!r.is_array()) throw ParseError("plan: field 'residual' must be an array");
        plan.residual = Matrix(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (!r[i].is_array() || r[i].size() != r.size()) throw ParseError("plan.residual: not square");
            for (std::size_t k = 0; k < r.size(); ++k) {
                if (!r[i][k].is_number()) throw ParseError("plan.residual: expected numbers");
                plan.residual(i, k) = r[i][k].get<double>();
            }
        }
    }
    return plan;
}

RoutePlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return plan_from_json(j);
}

void save_plan(const RoutePlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << json(plan).dump() << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void write_truck_log_csv(const RoutePlan& plan, std::ostream& out) {
    out << "truck,estimated,residual_max,residual_sum,solver_value\n";
    const auto old = out.precision(17);
    for (const TruckLogEntry& e : plan.log) {
        out << e.truck << ',' << e.estimated << ',' << e.residual_max << ',' << e.residual_sum << ','
            << e.solver_value << '\n';
    }
    out.precision(old);
}

}  // namespace truckloop
