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

#include "truckloop/pubo_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "truckloop/errors.hpp"
#include "truckloop/json_util.hpp"

namespace truckloop {

using nlohmann::json;

void PuboParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive");
    };
    positive(a_local, "a_local");
    positive(a_demand, "a_demand");
    positive(a_time, "a_time");
    positive(a_nonredundant, "a_nonredundant");
    if (delta_max < 1) throw ParameterError("delta_max must be at least 1");
    if (!(redundancy_threshold >= 0.0)) throw ParameterError("redundancy_threshold must be non-negative");
    if (tau < 2) throw ParameterError("tau must be at least 2");
}

void to_json(json& j, const PuboParams& p) {
    j = json{{"a_local", p.a_local},
             {"a_demand", p.a_demand},
             {"a_time", p.a_time},
             {"a_nonredundant", p.a_nonredundant},
             {"delta_max", p.delta_max},
             {"redundancy_threshold", p.redundancy_threshold},
             {"tau", p.tau}};
}

void from_json(const json& j, PuboParams& p) {
    if (!j.is_object()) throw ParseError("params: expected an object");
    for (const auto& [key, value] : j.items()) {
        auto real = [&](double& dst) {
            if (!value.is_number()) throw ParseError("params." + key + ": expected a number");
            dst = value.get<double>();
        };
        auto count = [&](std::size_t& dst) {
            if (!is_index(value)) throw ParseError("params." + key + ": expected a non-negative integer");
            dst = value.get<std::size_t>();
        };
        if (key == "a_local") real(p.a_local);
        else if (key == "a_demand") real(p.a_demand);
        else if (key == "a_time") real(p.a_time);
        else if (key == "a_nonredundant") real(p.a_nonredundant);
        else if (key == "redundancy_threshold") real(p.redundancy_threshold);
        else if (key == "delta_max") count(p.delta_max);
        else if (key == "tau") count(p.tau);
        else throw ParseError("params: unknown field '" + key + "'");
    }
}

VarIndex::VarIndex(std::size_t n, std::size_t tau) : n_(n), tau_(tau) {
    var_.resize(n * tau);
    node_of_.resize(n * tau);
    step_of_.resize(n * tau);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < tau; ++t) {
            const auto v = static_cast<VariableId>(i * tau + t);
            var_[i * tau + t] = v;
            node_of_[v] = static_cast<NodeId>(i);
            step_of_[v] = t;
        }
    }
}

Route Route::from_nodes(std::vector<NodeId> nodes, const TimeMatrix& time) {
    Route r;
    r.duration_s = route_duration(time, nodes);
    r.nodes = std::move(nodes);
    return r;
}

void to_json(json& j, const Route& r) {
    j = json{{"nodes", r.nodes}, {"duration_s", r.duration_s}};
}

void from_json(const json& j, Route& r) {
    if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array()) {
        throw ParseError("route: missing field 'nodes'");
    }
    r.nodes.clear();
    for (const json& v : j.at("nodes")) {
        if (!is_index(v)) throw ParseError("route.nodes: expected node indices");
        r.nodes.push_back(v.get<NodeId>());
    }
    if (r.nodes.empty()) throw ParseError("route.nodes: must not be empty");
    r.duration_s = 0.0;
    if (j.contains("duration_s")) {
        if (!j.at("duration_s").is_number()) throw ParseError("route.duration_s: expected a number");
        r.duration_s = j.at("duration_s").get<double>();
    }
}

Assignment encode_route(const std::vector<NodeId>& nodes, const VarIndex& index) {
    if (nodes.size() != index.tau()) {
        throw DimensionError("route has " + std::to_string(nodes.size()) + " stops, expected " +
                             std::to_string(index.tau()));
    }
    Assignment a(index.size(), 0);
    for (std::size_t t = 0; t < nodes.size(); ++t) a[index.var(nodes[t], t)] = 1;
    return a;
}

BinaryPolynomial locality_term(std::size_t n, std::size_t tau) {
    const VarIndex idx(n, tau);
    BinaryPolynomial p(n * tau);
    p.add_constant(static_cast<double>(tau));
    for (std::size_t t = 0; t < tau; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            p.add_term({idx.var(i, t)}, -1.0);
            for (std::size_t j = i + 1; j < n; ++j) p.add_term({idx.var(i, t), idx.var(j, t)}, 2.0);
        }
    }
    return p;
}

BinaryPolynomial demand_term(const Matrix& demand, std::size_t tau, std::size_t delta_max) {
    const std::size_t n = demand.size();
    const VarIndex idx(n, tau);
    BinaryPolynomial p(n * tau);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = demand(i, j);
            if (d == 0.0) continue;
            for (std::size_t t = 0; t + 1 < tau; ++t) {
                const std::size_t reach = std::min(delta_max, tau - 1 - t);
                for (std::size_t delta = 1; delta <= reach; ++delta) {
                    p.add_term({idx.var(i, t), idx.var(j, t + delta)}, -d);
                }
            }
        }
    }
    return p;
}

BinaryPolynomial time_term(const TimeMatrix& time, std::size_t tau) {
    const std::size_t n = time.size();
    const VarIndex idx(n, tau);
    BinaryPolynomial p(n * tau);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (time(i, j) == 0.0) continue;
            for (std::size_t t = 0; t + 1 < tau; ++t) p.add_term({idx.var(i, t), idx.var(j, t + 1)}, time(i, j));
        }
    }
    return p;
}

BinaryPolynomial redundancy_term(const Matrix& flags, std::size_t tau) {
    const std::size_t n = flags.size();
    const VarIndex idx(n, tau);
    BinaryPolynomial p(n * tau);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = flags(i, j);
            if (w == 0.0) continue;
            for (std::size_t delta = 2; delta + 2 <= tau; ++delta) {
                for (std::size_t t = 0; t + delta + 2 <= tau; ++t) {
                    p.add_term({idx.var(i, t), idx.var(j, t + 1), idx.var(i, t + delta),
                                idx.var(j, t + 1 + delta)},
                               w);
                }
            }
        }
    }
    return p;
}

Matrix redundancy_flags(const Matrix& demand, double threshold) {
    const std::size_t n = demand.size();
    Matrix flags(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = demand(i, j);
            flags(i, j) = (d > 0.0 && d <= threshold) ? 1.0 : 0.0;
        }
    }
    return flags;
}

SingleTruckPubo build_single_truck_pubo(const Matrix& demand, const TimeMatrix& time,
                                        const PuboParams& params) {
    params.validate();
    const std::size_t n = demand.size();
    if (time.size() != n) throw DimensionError("demand and time matrices differ in size");

    SingleTruckPubo out{BinaryPolynomial(n * params.tau), VarIndex(n, params.tau)};
    BinaryPolynomial& p = out.pubo;
    p = add_scaled(p, locality_term(n, params.tau), params.a_local);
    p = add_scaled(p, demand_term(demand, params.tau, params.delta_max), params.a_demand);
    p = add_scaled(p, time_term(time, params.tau), params.a_time);
    p = add_scaled(p, redundancy_term(redundancy_flags(demand, params.redundancy_threshold), params.tau),
                   params.a_nonredundant);
    return out;
}

void pin_start_node(BinaryPolynomial& pubo, const VarIndex& index, NodeId node, double bonus) {
    pubo.add_term({index.var(node, 0)}, -bonus);
}

Route rectify(std::span<const Bit> assignment, const BinaryPolynomial& pubo, const VarIndex& index,
              const TimeMatrix& time, Rng& rng) {
    const std::size_t n = index.n();
    const std::size_t tau = index.tau();
    if (assignment.size() != index.size()) {
        throw DimensionError("assignment has " + std::to_string(assignment.size()) + " bits, expected " +
                             std::to_string(index.size()));
    }

    // Terms bucketed by every step they touch.
    std::vector<std::vector<const BinaryPolynomial::TermMap::value_type*>> by_step(tau);
    for (const auto& term : pubo.terms()) {
        std::size_t last = tau;
        for (VariableId v : term.first) {
            if (v >= index.size()) continue;
            const std::size_t s = index.step_of(v);
            if (s != last) by_step[s].push_back(&term);
            last = s;
        }
    }
    for (auto& bucket : by_step) bucket.erase(std::unique(bucket.begin(), bucket.end()), bucket.end());

    Assignment work(assignment.begin(), assignment.end());
    std::vector<NodeId> nodes(tau);
    for (std::size_t t = 0; t < tau; ++t) {
        std::vector<NodeId> active;
        for (std::size_t i = 0; i < n; ++i) {
            if (work[index.var(i, t)]) active.push_back(static_cast<NodeId>(i));
        }
        NodeId chosen = 0;
        if (active.empty()) {
            chosen = static_cast<NodeId>(rng.uniform_index(n));
        } else if (active.size() == 1) {
            chosen = active.front();
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (NodeId c : active) {
                for (NodeId a : active) work[index.var(a, t)] = (a == c);
                double score = 0.0;
                for (const auto* term : by_step[t]) {
                    bool on = true;
                    for (VariableId v : term->first) {
                        if (!work[v]) {
                            on = false;
                            break;
                        }
                    }
                    if (on) score += term->second;
                }
                if (score < best) {
                    best = score;
                    chosen = c;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) work[index.var(i, t)] = (i == chosen);
        nodes[t] = chosen;
    }
    return Route::from_nodes(std::move(nodes), time);
}

Route fit_to_window(const Route& route, const TimeMatrix& time, const DrivingWindow& window) {
    if (route.nodes.empty()) throw ParameterError("cannot fit an empty route");
    std::vector<NodeId> nodes = route.nodes;
    const double t_max = window.t_max_s;

    double duration = route_duration(time, nodes);
    if (duration > t_max) {
        while (nodes.size() > 1 && duration > t_max) {
            nodes.pop_back();
            duration = route_duration(time, nodes);
        }
        return Route::from_nodes(std::move(nodes), time);
    }

    const std::vector<NodeId>& cycle = route.nodes;
    const std::size_t len = cycle.size();
    double cycle_time = 0.0;
    for (std::size_t k = 0; k < len; ++k) cycle_time += time(cycle[k], cycle[(k + 1) % len]);
    if (len < 2 || cycle_time <= 0.0) return Route::from_nodes(std::move(nodes), time);

    for (std::size_t pos = 0;; pos = (pos + 1) % len) {
        const NodeId next = cycle[pos];
        const NodeId cur = nodes.back();
        if (next == cur) continue;
        const double extended = duration + time(cur, next);
        if (extended > t_max) break;
        nodes.push_back(next);
        duration = extended;
    }
    return Route::from_nodes(std::move(nodes), time);
}

}  // namespace truckloop
