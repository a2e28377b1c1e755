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

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "truckloop/anneal.hpp"
#include "truckloop/model.hpp"
#include "truckloop/pubo_builder.hpp"

namespace truckloop {

struct LoopConfig {
    PuboParams params;  // params.tau is the number of time steps
    std::string solver_name = "sa";
    SolverConfig solver_cfg;
    double demand_cutoff = 0.0005;
    std::size_t max_trucks = 200;
    DrivingWindow window;
    double capacity = 1.0;

    /// Simulated annealing with tau = 15.
    static LoopConfig sa_profile();
    /// External quadratic solver with tau = 5.
    static LoopConfig external_profile();

    /// Throws ParameterError.
    void validate() const;
};

struct DemandEstimate {
    Matrix reduction;  // demand - remaining
    Matrix remaining;
    double total = 0.0;
};

/// Demand an abstract truck would pick up along `route`. At each stop it
/// first unloads what is destined there, then for every later stop in order
/// loads as much of the remaining D(stop, later) as fits. Loaded amounts
/// count as satisfied.
DemandEstimate estimate_demand(const Matrix& demand, const std::vector<NodeId>& route,
                               double capacity = 1.0);

/// True when every entry is below the cutoff or m trucks are already used.
bool stop(const Matrix& demand, std::size_t m, const LoopConfig& cfg);

struct TruckLogEntry {
    std::size_t truck = 0;
    double estimated = 0.0;
    double residual_max = 0.0;
    double residual_sum = 0.0;
    double solver_value = 0.0;
};

struct RoutePlan {
    std::vector<Route> routes;
    std::vector<double> estimated;
    Matrix residual;
    std::vector<TruckLogEntry> log;
    /// Set when the loop gave up after consecutive trucks found nothing.
    bool stalled = false;
};

inline constexpr std::size_t kMaxIdleTrucks = 3;

using TruckCallback = std::function<void(const TruckLogEntry&)>;

/// Assigns routes one truck at a time: build the PUBO for the current
/// demand, solve, rectify, fit to the window, estimate and deduct. Truck m
/// solves with seed derive_seed(cfg.solver_cfg.seed, m). Errors from the
/// solver are rethrown with the truck index in the message.
RoutePlan run_truck_loop(const Matrix& demand, const TimeMatrix& time, const LoopConfig& cfg,
                         const SolverRegistry& registry = SolverRegistry::with_builtins(),
                         const TruckCallback& on_truck = {});

void to_json(nlohmann::json& j, const RoutePlan& plan);
/// Reads {"routes": [...]} plus the optional "estimated" and "residual".
RoutePlan plan_from_json(const nlohmann::json& j);

RoutePlan load_plan(const std::filesystem::path& path);
void save_plan(const RoutePlan& plan, const std::filesystem::path& path);

/// truck,estimated,residual_max,residual_sum,solver_value
void write_truck_log_csv(const RoutePlan& plan, std::ostream& out);

}  // namespace truckloop
