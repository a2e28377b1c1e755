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

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "truckloop/binpoly.hpp"

namespace truckloop {

enum class CoolingKind { geometric, linear };

/// Temperature sequence for simulated annealing. Non-positive t_start / t_end
/// mean "derive from the polynomial": t_start = max(1, max |coeff|) and
/// t_end = 1e-3 * t_start.
struct CoolingSchedule {
    CoolingKind kind = CoolingKind::geometric;
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t num_steps = 10'000;

    /// Concrete schedule for `p`. Throws ParameterError if the result is not
    /// a valid schedule (t_end must not exceed t_start).
    CoolingSchedule resolved_for(const BinaryPolynomial& p) const;

    /// Temperature at `step` in [0, num_steps). Requires a resolved schedule.
    double temperature(std::size_t step) const;
};

struct SolverConfig {
    CoolingSchedule schedule;
    std::uint32_t num_restarts = 20;
    std::uint64_t seed = 0;
};

struct SolverResult {
    Assignment best_assignment;
    double best_value = 0.0;
    std::uint64_t samples_evaluated = 0;
};

/// Called after every annealing step with the chain's current energy.
using ChainObserver = std::function<void(std::uint32_t restart, std::size_t step, double energy)>;

/// Single-bit-flip Metropolis annealing with independent restarts.
///
/// Each restart draws its stream from (seed, restart index), starts from a
/// uniformly random assignment and, at each temperature, proposes one
/// uniformly random flip accepted with probability min(1, exp(-df/T)). The
/// best assignment visited over all chains is returned; equal values resolve
/// to the lowest restart index, so chains may run in any order.
///
/// Throws SizeError on a polynomial with no variables.
SolverResult simulated_anneal(const BinaryPolynomial& p, const SolverConfig& cfg,
                              const ChainObserver& observer = {});

using SolverFn = std::function<SolverResult(const BinaryPolynomial&, const SolverConfig&)>;

/// A back end that only accepts degree <= 2 input. Returns an assignment of
/// every variable of the QUBO it was given.
using QuadraticSolverFn = std::function<Assignment(const BinaryPolynomial& qubo, const SolverConfig&)>;

/// Environment variable naming the external solver: either an http(s) URL
/// (the QUBO JSON is POSTed to it) or a shell command (the QUBO JSON arrives
/// on stdin). Either way the reply is {"assignment": [bits], "value": float}.
inline constexpr const char* kExternalSolverEnv = "TRUCKLOOP_EXTERNAL_SOLVER";

class SolverRegistry {
public:
    /// "sa", "brute" and, when kExternalSolverEnv is set, "external".
    static SolverRegistry with_builtins();

    void add(const std::string& name, SolverFn fn);

    /// Registers a quadratic-only back end. The polynomial is reduced with
    /// reduce_to_quadratic first, the answer is projected back to the
    /// original variables and rescored with evaluate().
    void add_quadratic(const std::string& name, QuadraticSolverFn fn);

    bool contains(const std::string& name) const { return solvers_.contains(name); }
    std::vector<std::string> names() const;

    /// Throws LookupError for an unknown name.
    SolverResult solve(const BinaryPolynomial& p, const std::string& name, const SolverConfig& cfg) const;

private:
    std::map<std::string, SolverFn> solvers_;
};

/// solve() against SolverRegistry::with_builtins().
SolverResult solve(const BinaryPolynomial& p, const std::string& solver_name, const SolverConfig& cfg);

/// Runs `command` with the QUBO JSON on stdin and reads the reply from stdout.
QuadraticSolverFn command_solver(std::string command);

/// POSTs the QUBO JSON to `url` and reads the reply from the response body.
QuadraticSolverFn http_solver(std::string url);

void to_json(nlohmann::json& j, const SolverConfig& cfg);

}  // namespace truckloop
