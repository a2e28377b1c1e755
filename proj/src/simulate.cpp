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

#include "truckloop/simulate.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <tuple>

#include "truckloop/errors.hpp"
#include "truckloop/rng.hpp"

namespace truckloop {

using nlohmann::json;

void NodeInventory::remove(NodeId next, std::uint64_t rank, std::size_t box) {
    auto it = buckets_.find(next);
    if (it == buckets_.end()) return;
    it->second.erase({rank, box});
    if (it->second.empty()) buckets_.erase(it);
}

std::size_t NodeInventory::size() const noexcept {
    std::size_t s = 0;
    for (const auto& [next, b] : buckets_) s += b.size();
    return s;
}

const NodeInventory::Bucket* NodeInventory::bucket(NodeId next) const {
    auto it = buckets_.find(next);
    return it == buckets_.end() ? nullptr : &it->second;
}

std::vector<std::size_t> pickup_selection(TruckState& truck, NodeInventory& inventory,
                                          const std::vector<NodeId>& route_remainder,
                                          const std::vector<Box>& boxes, double capacity) {
    std::vector<std::size_t> loaded;
    std::set<NodeId> seen;
    for (NodeId dest : route_remainder) {
        if (!seen.insert(dest).second) continue;
        const NodeInventory::Bucket* bucket = inventory.bucket(dest);
        if (!bucket) continue;
        std::vector<std::pair<std::uint64_t, std::size_t>> taken;
        for (const auto& entry : *bucket) {
            const double v = boxes[entry.second].volume;
            if (truck.cargo_volume + v <= capacity + kCapacitySlack) {
                truck.cargo.push_back(entry.second);
                truck.cargo_volume += v;
                loaded.push_back(entry.second);
                taken.push_back(entry);
            }
        }
        for (const auto& [rank, box] : taken) inventory.remove(dest, rank, box);
    }
    return loaded;
}

namespace {

std::vector<std::uint64_t> pickup_ranks(const std::vector<Box>& boxes, const SimOptions& options) {
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return boxes[a].id < boxes[b].id; });
    if (options.order == PickupOrder::shuffled) {
        Rng rng(derive_seed(options.shuffle_seed, "pickup-order"));
        rng.shuffle(order.begin(), order.end());
    }
    std::vector<std::uint64_t> rank(boxes.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    return rank;
}

class Simulator {
public:
    Simulator(const ProblemInstance& inst, const std::vector<Route>& routes, const SimOptions& options,
              const ArrivalObserver& observer)
        : inst_(inst), options_(options), observer_(observer), ranks_(pickup_ranks(inst.boxes, options)) {
        for (std::size_t m = 0; m < routes.size(); ++m) {
            if (routes[m].nodes.empty()) throw ValidationError("route " + std::to_string(m) + " is empty");
            for (NodeId v : routes[m].nodes) {
                if (v >= inst.n) {
                    throw ValidationError("route " + std::to_string(m) + " visits node " + std::to_string(v) +
                                          " outside [0, " + std::to_string(inst.n) + ")");
                }
            }
        }
        inventory_.resize(inst.n);
        states_.resize(inst.boxes.size());
        for (std::size_t b = 0; b < inst.boxes.size(); ++b) {
            const Box& box = inst.boxes[b];
            states_[b] = BoxState{false, box.path[0], 1};
            inventory_[box.path[0]].add(box.path[1], ranks_[b], b);
        }
        last_progress_.assign(inst.boxes.size(), 1);

        trucks_.resize(routes.size());
        report_.routes.resize(routes.size());
        for (std::size_t m = 0; m < routes.size(); ++m) {
            // Keep the stops that can be reached inside the window.
            std::vector<NodeId> kept{routes[m].nodes.front()};
            double clock = 0.0;
            for (std::size_t k = 1; k < routes[m].nodes.size(); ++k) {
                const double next = clock + inst.time(kept.back(), routes[m].nodes[k]);
                if (next > inst.window.t_max_s) break;
                clock = next;
                kept.push_back(routes[m].nodes[k]);
            }
            trucks_[m].route = kept;
            report_.routes[m] = Route{kept, clock};
        }
    }

    SimReport run() {
        using Item = std::tuple<double, std::size_t, std::uint64_t, std::size_t>;  // t, truck, seq, stop
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
        std::uint64_t seq = 0;
        for (std::size_t m = 0; m < trucks_.size(); ++m) queue.emplace(0.0, m, seq++, 0);

        report_.per_truck_carried_volume.assign(trucks_.size(), 0.0);
        report_.cargo_after_stop.assign(trucks_.size(), {});

        while (!queue.empty()) {
            const auto [t, m, s, stop] = queue.top();
            queue.pop();
            TruckState& truck = trucks_[m];
            truck.position = stop;
            truck.clock_s = t;
            arrive(m);
            if (stop + 1 < truck.route.size()) {
                const double next = t + inst_.time(truck.route[stop], truck.route[stop + 1]);
                queue.emplace(next, m, seq++, stop + 1);
            }
        }
        finish();
        return std::move(report_);
    }

private:
    void log(std::size_t m, EventKind kind, NodeId node, std::optional<BoxId> box) {
        report_.event_log.push_back(SimEvent{trucks_[m].clock_s, m, kind, node, box});
    }

    void arrive(std::size_t m) {
        TruckState& truck = trucks_[m];
        const NodeId node = truck.route[truck.position];
        log(m, EventKind::arrive, node, std::nullopt);

        std::vector<std::size_t> keep;
        for (std::size_t b : truck.cargo) {
            const Box& box = inst_.boxes[b];
            BoxState& st = states_[b];
            if (box.path[st.progress] != node) {
                keep.push_back(b);
                continue;
            }
            ++st.progress;
            st.on_truck = false;
            st.location = node;
            if (st.progress < box.rank()) inventory_[node].add(box.path[st.progress], ranks_[b], b);
            log(m, EventKind::dropoff, node, box.id);
        }
        truck.cargo = std::move(keep);
        truck.cargo_volume = 0.0;
        for (std::size_t b : truck.cargo) truck.cargo_volume += inst_.boxes[b].volume;

        const std::vector<NodeId> remainder(truck.route.begin() + static_cast<std::ptrdiff_t>(truck.position) + 1,
                                            truck.route.end());
        for (std::size_t b : pickup_selection(truck, inventory_[node], remainder, inst_.boxes, inst_.truck_capacity)) {
            states_[b].on_truck = true;
            states_[b].location = m;
            report_.per_truck_carried_volume[m] += inst_.boxes[b].volume;
            log(m, EventKind::pickup, node, inst_.boxes[b].id);
        }
        report_.cargo_after_stop[m].push_back(truck.cargo_volume);

        if (options_.audit) audit(m);
        if (observer_) observer_(ArrivalView{truck.clock_s, m, node, inst_.boxes, states_, trucks_});
    }

    void violation(const std::string& what) {
        if (report_.violations.size() < 1000) report_.violations.push_back(what);
    }

    void audit(std::size_t m) {
        const TruckState& truck = trucks_[m];
        const std::string at = "t=" + std::to_string(truck.clock_s) + " truck " + std::to_string(m) + ": ";
        if (truck.cargo_volume > inst_.truck_capacity + kCapacitySlack) {
            violation(at + "cargo volume " + std::to_string(truck.cargo_volume) + " exceeds capacity");
        }
        if (truck.clock_s > inst_.window.t_max_s) violation(at + "clock exceeds the driving window");

        std::vector<int> seen(states_.size(), 0);
        for (std::size_t k = 0; k < trucks_.size(); ++k) {
            for (std::size_t b : trucks_[k].cargo) {
                ++seen[b];
                if (!states_[b].on_truck || states_[b].location != k) {
                    violation(at + "box " + std::to_string(inst_.boxes[b].id) + " cargo/state mismatch");
                }
            }
        }
        for (std::size_t v = 0; v < inventory_.size(); ++v) {
            for (const auto& [next, bucket] : inventory_[v].buckets()) {
                for (const auto& [rank, b] : bucket) {
                    ++seen[b];
                    const BoxState& st = states_[b];
                    if (st.on_truck || st.location != v || inst_.boxes[b].path[st.progress] != next) {
                        violation(at + "box " + std::to_string(inst_.boxes[b].id) + " inventory/state mismatch");
                    }
                }
            }
        }
        for (std::size_t b = 0; b < states_.size(); ++b) {
            const Box& box = inst_.boxes[b];
            const BoxState& st = states_[b];
            const bool delivered = !st.on_truck && st.progress == box.rank();
            if (seen[b] + (delivered ? 1 : 0) != 1) {
                violation(at + "box " + std::to_string(box.id) + " is in " + std::to_string(seen[b] + delivered) +
                          " places");
            }
            if (st.progress < last_progress_[b] || st.progress < 1 || st.progress > box.rank()) {
                violation(at + "box " + std::to_string(box.id) + " progress went backwards");
            }
            last_progress_[b] = st.progress;
            if (!st.on_truck && st.location != box.path[st.progress - 1]) {
                violation(at + "box " + std::to_string(box.id) + " is off its path");
            }
        }
    }

    void finish() {
        double total = 0.0;
        double delivered = 0.0;
        std::size_t delivered_boxes = 0;
        report_.unsatisfied = Matrix(inst_.n);
        for (std::size_t b = 0; b < states_.size(); ++b) {
            const Box& box = inst_.boxes[b];
            const BoxState& st = states_[b];
            total += box.volume;
            if (!st.on_truck && st.progress == box.rank()) {
                delivered += box.volume;
                ++delivered_boxes;
            } else {
                report_.unsatisfied(box.path[st.progress - 1], box.path[st.progress]) += box.volume;
            }
        }
        report_.total_volume = total;
        report_.delivered_volume = delivered;
        report_.satisfied_volume_fraction = total > 0.0 ? delivered / total : 0.0;
        report_.satisfied_box_fraction =
            states_.empty() ? 0.0 : static_cast<double>(delivered_boxes) / static_cast<double>(states_.size());
        report_.truck_count = trucks_.size();
        report_.total_drive_time_s = 0.0;
        for (const Route& r : report_.routes) report_.total_drive_time_s += r.duration_s;
    }

    const ProblemInstance& inst_;
    SimOptions options_;
    const ArrivalObserver& observer_;
    std::vector<std::uint64_t> ranks_;
    std::vector<NodeInventory> inventory_;
    std::vector<BoxState> states_;
    std::vector<std::size_t> last_progress_;
    std::vector<TruckState> trucks_;
    SimReport report_;
};

/// prefix followed by alternating visits to a and b, entered at whichever is
/// closer to the end of prefix, for as long as the window allows.
std::vector<NodeId> with_shuttle(std::vector<NodeId> nodes, NodeId a, NodeId b, const ProblemInstance& inst) {
    const NodeId cur = nodes.back();
    NodeId target = inst.time(cur, a) <= inst.time(cur, b) ? a : b;
    const NodeId first = target;
    const NodeId second = first == a ? b : a;
    double duration = route_duration(inst.time, nodes);
    // Bounded so a zero-time pair cannot loop forever.
    for (std::size_t guard = 0; guard < 100'000; ++guard) {
        if (nodes.back() != target) {
            const double next = duration + inst.time(nodes.back(), target);
            if (next > inst.window.t_max_s) break;
            nodes.push_back(target);
            duration = next;
        }
        target = target == first ? second : first;
    }
    return nodes;
}

}  // namespace

SimReport run_full_simulation(const ProblemInstance& inst, const std::vector<Route>& routes,
                              const SimOptions& options, const ArrivalObserver& observer) {
    return Simulator(inst, routes, options, observer).run();
}

CorrectionResult correct_routes(const ProblemInstance& inst, const std::vector<Route>& routes,
                                std::size_t rounds, const SimOptions& options) {
    CorrectionResult out;
    out.routes = routes;
    out.report = run_full_simulation(inst, out.routes, options);
    out.initial_fraction = out.report.satisfied_volume_fraction;

    std::set<std::pair<NodeId, NodeId>> rejected;
    for (std::size_t round = 0; round < rounds; ++round) {
        const Matrix& left = out.report.unsatisfied;
        double best = 0.0;
        std::optional<std::pair<NodeId, NodeId>> pair;
        for (NodeId i = 0; i < inst.n; ++i) {
            for (NodeId j = 0; j < inst.n; ++j) {
                if (i == j || left(i, j) <= best || rejected.contains({i, j})) continue;
                best = left(i, j);
                pair = {i, j};
            }
        }
        if (!pair) break;

        std::vector<Route> candidate = out.report.routes;
        bool changed = false;
        for (std::size_t m = 0; m < candidate.size(); ++m) {
            const std::vector<double>& cargo = out.report.cargo_after_stop[m];
            std::size_t s = cargo.size();
            while (s > 0 && cargo[s - 1] == 0.0) --s;
            // Stops s.. leave empty; keep stop s as the cut point.
            if (cargo.empty() || s + 1 >= cargo.size()) continue;
            std::vector<NodeId> prefix(candidate[m].nodes.begin(),
                                       candidate[m].nodes.begin() + static_cast<std::ptrdiff_t>(s) + 1);
            std::vector<NodeId> nodes = with_shuttle(std::move(prefix), pair->first, pair->second, inst);
            if (nodes != candidate[m].nodes) {
                candidate[m] = Route::from_nodes(std::move(nodes), inst.time);
                changed = true;
            }
        }
        if (!changed) {
            rejected.insert(*pair);
            continue;
        }
        SimReport trial = run_full_simulation(inst, candidate, options);
        if (trial.satisfied_volume_fraction > out.report.satisfied_volume_fraction) {
            out.routes = std::move(candidate);
            out.report = std::move(trial);
            ++out.accepted_rounds;
        } else {
            rejected.insert(*pair);
        }
    }
    return out;
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::arrive: return "arrive";
        case EventKind::pickup: return "pickup";
        case EventKind::dropoff: return "dropoff";
    }
    return "?";
}

void to_json(json& j, const SimEvent& e) {
    j = json{{"t_s", e.t_s}, {"truck", e.truck}, {"event", to_string(e.kind)}, {"node", e.node}};
    j["box"] = e.box ? json(*e.box) : json(nullptr);
}

void to_json(json& j, const SimReport& r) {
    json unsatisfied = json::array();
    for (std::size_t i = 0; i < r.unsatisfied.size(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < r.unsatisfied.size(); ++k) row.push_back(r.unsatisfied(i, k));
        unsatisfied.push_back(std::move(row));
    }
    j = json{{"satisfied_volume_fraction", r.satisfied_volume_fraction},
             {"satisfied_box_fraction", r.satisfied_box_fraction},
             {"delivered_volume", r.delivered_volume},
             {"total_volume", r.total_volume},
             {"truck_count", r.truck_count},
             {"total_drive_time_s", r.total_drive_time_s},
             {"per_truck_carried_volume", r.per_truck_carried_volume},
             {"cargo_after_stop", r.cargo_after_stop},
             {"routes", r.routes},
             {"violations", r.violations},
             {"unsatisfied", std::move(unsatisfied)},
             {"event_log", r.event_log}};
}

SimReport report_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("report: expected an object");
    SimReport r;
    try {
        r.satisfied_volume_fraction = j.at("satisfied_volume_fraction").get<double>();
        r.satisfied_box_fraction = j.at("satisfied_box_fraction").get<double>();
        r.delivered_volume = j.value("delivered_volume", 0.0);
        r.total_volume = j.value("total_volume", 0.0);
        r.truck_count = j.at("truck_count").get<std::size_t>();
        r.total_drive_time_s = j.at("total_drive_time_s").get<double>();
        r.per_truck_carried_volume = j.value("per_truck_carried_volume", std::vector<double>{});
        r.violations = j.value("violations", std::vector<std::string>{});
        if (j.contains("routes")) r.routes = j.at("routes").get<std::vector<Route>>();
        for (const json& e : j.value("event_log", json::array())) {
            SimEvent ev;
            ev.t_s = e.at("t_s").get<double>();
            ev.truck = e.at("truck").get<std::size_t>();
            const std::string kind = e.at("event").get<std::string>();
            ev.kind = kind == "pickup" ? EventKind::pickup : kind == "dropoff" ? EventKind::dropoff : EventKind::arrive;
            ev.node = e.at("node").get<NodeId>();
            if (!e.at("box").is_null()) ev.box = e.at("box").get<BoxId>();
            r.event_log.push_back(ev);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return r;
}

void write_event_log(const std::vector<SimEvent>& log, std::ostream& out) {
    for (const SimEvent& e : log) out << json(e).dump() << '\n';
}

json itineraries(const SimReport& report) {
    json trucks = json::array();
    for (std::size_t m = 0; m < report.routes.size(); ++m) trucks.push_back(json{{"truck", m}, {"stops", json::array()}});
    for (const SimEvent& e : report.event_log) {
        json& stops = trucks[e.truck]["stops"];
        if (e.kind == EventKind::arrive) {
            stops.push_back(json{{"node", e.node}, {"t_s", e.t_s}, {"unloaded", json::array()}, {"loaded", json::array()}});
        } else {
            stops.back()[e.kind == EventKind::pickup ? "loaded" : "unloaded"].push_back(*e.box);
        }
    }
    for (std::size_t m = 0; m < report.routes.size() && m < report.cargo_after_stop.size(); ++m) {
        json& stops = trucks[m]["stops"];
        for (std::size_t k = 0; k < stops.size() && k < report.cargo_after_stop[m].size(); ++k) {
            stops[k]["cargo_volume"] = report.cargo_after_stop[m][k];
        }
    }
    return trucks;
}

}  // namespace truckloop
