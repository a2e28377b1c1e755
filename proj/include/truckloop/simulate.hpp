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
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "truckloop/model.hpp"
#include "truckloop/pubo_builder.hpp"

namespace truckloop {

enum class EventKind { arrive, pickup, dropoff };

struct SimEvent {
    double t_s = 0.0;
    std::size_t truck = 0;
    EventKind kind = EventKind::arrive;
    NodeId node = 0;
    std::optional<BoxId> box;
    friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

/// Where a box is. `progress` is the 1-based index into the box path of the
/// last path node it reached; the box is delivered once progress == rank.
struct BoxState {
    bool on_truck = false;
    std::size_t location = 0;  // node index, or truck index when on_truck
    std::size_t progress = 1;
};

struct TruckState {
    std::vector<NodeId> route;  // stops reachable inside the window
    std::size_t position = 0;   // index of the current stop
    double clock_s = 0.0;
    std::vector<std::size_t> cargo;  // indices into ProblemInstance::boxes
    double cargo_volume = 0.0;
};

enum class PickupOrder { ascending_id, shuffled };

struct SimOptions {
    PickupOrder order = PickupOrder::ascending_id;
    std::uint64_t shuffle_seed = 0;
    /// Check conservation, capacity, window and progress after every arrival.
    bool audit = true;
};

struct SimReport {
    double satisfied_volume_fraction = 0.0;
    double satisfied_box_fraction = 0.0;
    double delivered_volume = 0.0;
    double total_volume = 0.0;
    std::size_t truck_count = 0;
    double total_drive_time_s = 0.0;
    std::vector<double> per_truck_carried_volume;
    /// Cargo volume after each stop's drop-offs and pickups, per truck.
    std::vector<std::vector<double>> cargo_after_stop;
    std::vector<Route> routes;  // as driven (window-truncated)
    std::vector<SimEvent> event_log;
    std::vector<std::string> violations;
    /// End-of-run volume not yet delivered, keyed by the box's last reached
    /// path node and its next required node.
    Matrix unsatisfied;
};

struct ArrivalView {
    double t_s = 0.0;
    std::size_t truck = 0;
    NodeId node = 0;
    const std::vector<Box>& boxes;
    const std::vector<BoxState>& box_states;
    const std::vector<TruckState>& trucks;
};

/// Called once per arrival, after that stop's drop-offs and pickups.
using ArrivalObserver = std::function<void(const ArrivalView&)>;

/// Runs every route at once against individually tracked boxes.
///
/// Trucks start at their first stop at time 0 and stop driving before a hop
/// that would end after the window. Arrivals are processed in time order
/// (ties: lower truck index, then scheduling order). At each arrival the
/// truck drops every box whose next path node is the current node, then runs
/// pickup_selection.
///
/// Throws ValidationError if a route names a node outside the instance.
SimReport run_full_simulation(const ProblemInstance& inst, const std::vector<Route>& routes,
                              const SimOptions& options = {}, const ArrivalObserver& observer = {});

/// Ordered boxes waiting at one node, bucketed by their next required node.
/// Within a bucket boxes are ordered by rank (box id order by default).
class NodeInventory {
public:
    using Bucket = std::set<std::pair<std::uint64_t, std::size_t>>;

    void add(NodeId next, std::uint64_t rank, std::size_t box) { buckets_[next].emplace(rank, box); }
    void remove(NodeId next, std::uint64_t rank, std::size_t box);
    std::size_t size() const noexcept;
    /// nullptr when no box waits for `next`.
    const Bucket* bucket(NodeId next) const;
    const std::map<NodeId, Bucket>& buckets() const noexcept { return buckets_; }

private:
    std::map<NodeId, Bucket> buckets_;
};

/// Loads boxes at the truck's current node: for every remaining stop in
/// visit order (first occurrence only), each waiting box whose next path
/// node is that stop is loaded if it still fits. Returns the loaded boxes.
std::vector<std::size_t> pickup_selection(TruckState& truck, NodeInventory& inventory,
                                          const std::vector<NodeId>& route_remainder,
                                          const std::vector<Box>& boxes, double capacity);

inline constexpr double kCapacitySlack = 1e-12;

struct CorrectionResult {
    std::vector<Route> routes;
    SimReport report;
    std::size_t accepted_rounds = 0;
    double initial_fraction = 0.0;
};

/// Route-correction rounds. Each round simulates, cuts every truck's
/// trailing stretch of empty driving, replaces it with a window-fitted
/// back-and-forth shuttle between the node pair with the most end-of-run
/// unsatisfied volume (entered at the endpoint nearer the cut), and keeps the
/// change only if the satisfied volume fraction strictly increases. A pair
/// whose shuttle was rejected is not tried again.
CorrectionResult correct_routes(const ProblemInstance& inst, const std::vector<Route>& routes,
                                std::size_t rounds, const SimOptions& options = {});

const char* to_string(EventKind kind);
void to_json(nlohmann::json& j, const SimEvent& e);
void to_json(nlohmann::json& j, const SimReport& r);

/// Reads the fields written by to_json(SimReport).
SimReport report_from_json(const nlohmann::json& j);

/// One JSON object per line.
void write_event_log(const std::vector<SimEvent>& log, std::ostream& out);

/// Per-truck ordered stops with the boxes unloaded and loaded at each.
nlohmann::json itineraries(const SimReport& report);

}  // namespace truckloop
