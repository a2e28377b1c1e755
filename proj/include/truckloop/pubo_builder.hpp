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
#include <vector>

#include "json.hpp"
#include "truckloop/binpoly.hpp"
#include "truckloop/model.hpp"
#include "truckloop/rng.hpp"

namespace truckloop {

/// Coefficients and shape of the single-truck PUBO.
struct PuboParams {
    double a_local = 5000.0;
    double a_demand = 320.0;
    double a_time = 0.01;
    double a_nonredundant = 1.0;
    std::size_t delta_max = 3;
    /// Pairs with 0 < D(i,j) <= threshold get the repeat penalty.
    double redundancy_threshold = 1.0;
    std::size_t tau = 15;

    /// Throws ParameterError.
    void validate() const;
};

void to_json(nlohmann::json& j, const PuboParams& p);
/// Missing fields keep their defaults; unknown fields are rejected.
void from_json(const nlohmann::json& j, PuboParams& p);

/// Bijection between (node, step) and PUBO variable index node*tau + step.
class VarIndex {
public:
    VarIndex() = default;
    VarIndex(std::size_t n, std::size_t tau);

    std::size_t n() const noexcept { return n_; }
    std::size_t tau() const noexcept { return tau_; }
    std::size_t size() const noexcept { return node_of_.size(); }

    VariableId var(std::size_t node, std::size_t step) const { return var_[node * tau_ + step]; }
    NodeId node_of(VariableId v) const { return node_of_[v]; }
    std::size_t step_of(VariableId v) const { return step_of_[v]; }

private:
    std::size_t n_ = 0;
    std::size_t tau_ = 0;
    std::vector<VariableId> var_;
    std::vector<NodeId> node_of_;
    std::vector<std::size_t> step_of_;
};

struct Route {
    std::vector<NodeId> nodes;
    double duration_s = 0.0;

    static Route from_nodes(std::vector<NodeId> nodes, const TimeMatrix& time);
    friend bool operator==(const Route&, const Route&) = default;
};

void to_json(nlohmann::json& j, const Route& r);
void from_json(const nlohmann::json& j, Route& r);

/// One-hot assignment of a node sequence, length n*tau.
Assignment encode_route(const std::vector<NodeId>& nodes, const VarIndex& index);

/// sum_t (1 - sum_i x_it)^2, expanded to degree 2.
BinaryPolynomial locality_term(std::size_t n, std::size_t tau);

/// -sum_{i,j,t} sum_{d=1}^{min(delta_max, tau-1-t)} D(i,j) x_it x_j(t+d).
BinaryPolynomial demand_term(const Matrix& demand, std::size_t tau, std::size_t delta_max);

/// sum_{i,j,t} T(i,j) x_it x_j(t+1).
BinaryPolynomial time_term(const TimeMatrix& time, std::size_t tau);

/// sum_{i,j} I(i,j) sum_{d=2}^{tau-2} sum_t x_it x_j(t+1) x_i(t+d) x_j(t+1+d):
/// counts repeats of the two-step hop i -> j. `flags` holds 0/1 entries.
BinaryPolynomial redundancy_term(const Matrix& flags, std::size_t tau);

/// I(i,j) = 1 iff 0 < D(i,j) <= threshold.
Matrix redundancy_flags(const Matrix& demand, double threshold);

struct SingleTruckPubo {
    BinaryPolynomial pubo;
    VarIndex index;
};

/// a_local*locality + a_demand*demand + a_time*time + a_nonredundant*redundancy
/// over n*tau variables.
SingleTruckPubo build_single_truck_pubo(const Matrix& demand, const TimeMatrix& time,
                                        const PuboParams& params);

/// Rewards starting at `node` by subtracting `bonus` from x_(node,0).
void pin_start_node(BinaryPolynomial& pubo, const VarIndex& index, NodeId node, double bonus);

/// Turns a solver assignment into a route with exactly one node per step.
///
/// Steps are processed in order. A step with no active node gets a uniformly
/// random node. A step with several active nodes keeps the candidate whose
/// one-hot choice gives the lowest value of the PUBO terms touching that
/// step, with earlier steps already rectified and later steps as given; ties
/// go to the lowest node.
Route rectify(std::span<const Bit> assignment, const BinaryPolynomial& pubo, const VarIndex& index,
              const TimeMatrix& time, Rng& rng);

/// Makes a route fit the driving window: trailing stops are dropped while it
/// is too long; otherwise the route keeps cycling through its own stops
/// (skipping self-hops) for as long as the next hop still fits.
Route fit_to_window(const Route& route, const TimeMatrix& time, const DrivingWindow& window);

}  // namespace truckloop
