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

#include "truckloop/anneal.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "httplib.h"
#include "truckloop/errors.hpp"
#include "truckloop/rng.hpp"

namespace truckloop {

CoolingSchedule CoolingSchedule::resolved_for(const BinaryPolynomial& p) const {
    CoolingSchedule s = *this;
    if (s.t_start <= 0.0) s.t_start = std::max(1.0, p.max_abs_coefficient());
    if (s.t_end <= 0.0) s.t_end = 1e-3 * s.t_start;
    if (!(s.t_end <= s.t_start) || !std::isfinite(s.t_start)) {
        throw ParameterError("cooling schedule needs 0 < t_end <= t_start");
    }
    if (s.num_steps == 0) throw ParameterError("cooling schedule needs at least one step");
    return s;
}

double CoolingSchedule::temperature(std::size_t step) const {
    if (num_steps <= 1) return t_start;
    const double frac = static_cast<double>(step) / static_cast<double>(num_steps - 1);
    if (kind == CoolingKind::linear) return t_start + (t_end - t_start) * frac;
    return t_start * std::pow(t_end / t_start, frac);
}

SolverResult simulated_anneal(const BinaryPolynomial& p, const SolverConfig& cfg,
                              const ChainObserver& observer) {
    const std::size_t n = p.num_vars();
    if (n == 0) throw SizeError("cannot anneal a polynomial with no variables");
    if (cfg.num_restarts == 0) throw ParameterError("num_restarts must be positive");

    const CoolingSchedule sched = cfg.schedule.resolved_for(p);
    std::vector<double> temps(sched.num_steps);
    for (std::size_t k = 0; k < temps.size(); ++k) temps[k] = sched.temperature(k);

    FlipEvaluator eval(p);
    SolverResult result;
    result.best_value = std::numeric_limits<double>::infinity();
    Assignment start(n);

    for (std::uint32_t r = 0; r < cfg.num_restarts; ++r) {
        Rng rng(derive_seed(cfg.seed, r));
        for (auto& b : start) b = rng.coin() ? 1 : 0;
        eval.reset(start);

        Assignment chain_best = eval.bits();
        double chain_best_e = eval.energy();

        for (std::size_t k = 0; k < temps.size(); ++k) {
            const auto v = static_cast<VariableId>(rng.uniform_index(n));
            const double d = eval.delta(v);
            // The uniform draw is consumed on every step so the stream does
            // not depend on the sign of d.
            const double u = rng.uniform01();
            if (d <= 0.0 || u < std::exp(-d / temps[k])) {
                eval.flip(v);
                if (eval.energy() < chain_best_e) {
                    chain_best_e = eval.energy();
                    chain_best = eval.bits();
                }
            }
            if (observer) observer(r, k, eval.energy());
        }
        result.samples_evaluated += temps.size();

        const double value = p.evaluate(chain_best);
        if (value < result.best_value) {
            result.best_value = value;
            result.best_assignment = std::move(chain_best);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

SolverResult brute_force_solver(const BinaryPolynomial& p, const SolverConfig&) {
    auto m = brute_force_minimize(p);
    const std::uint64_t samples = std::uint64_t{1} << p.num_vars();
    return {std::move(m.assignment), m.value, samples};
}

Assignment parse_reply(const std::string& body, std::size_t expected) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("external solver reply is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("assignment") || !j.at("assignment").is_array()) {
        throw TransportError("external solver reply lacks an 'assignment' array");
    }
    Assignment a;
    for (const auto& b : j.at("assignment")) {
        if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
            throw TransportError("external solver assignment entries must be 0 or 1");
        }
        a.push_back(static_cast<Bit>(b.get<int>()));
    }
    if (a.size() != expected) {
        throw TransportError("external solver returned " + std::to_string(a.size()) +
                             " bits, expected " + std::to_string(expected));
    }
    return a;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_path(const std::string& suffix) {
    static std::atomic<std::uint64_t> counter{0};
    const auto id = derive_seed(static_cast<std::uint64_t>(::getpid()), counter++);
    return std::filesystem::temp_directory_path() /
           ("truckloop-" + std::to_string(id) + suffix);
}

}  // namespace

QuadraticSolverFn command_solver(std::string command) {
    return [command = std::move(command)](const BinaryPolynomial& qubo, const SolverConfig&) {
        const auto in = scratch_path(".in.json");
        const auto out = scratch_path(".out.json");
        const auto err = scratch_path(".err.txt");
        {
            std::ofstream f(in);
            f << nlohmann::json(qubo).dump();
        }
        const std::string cmd = "(" + command + ") < '" + in.string() + "' > '" + out.string() + "' 2> '" +
                                err.string() + "'";
        const int status = std::system(cmd.c_str());
        std::string body = read_file(out);
        std::string diag = read_file(err);
        std::error_code ec;
        std::filesystem::remove(in, ec);
        std::filesystem::remove(out, ec);
        std::filesystem::remove(err, ec);
        if (status != 0) {
            throw TransportError("external solver command failed (status " + std::to_string(status) +
                                 "): " + diag);
        }
        return parse_reply(body, qubo.num_vars());
    };
}

QuadraticSolverFn http_solver(std::string url) {
    return [url = std::move(url)](const BinaryPolynomial& qubo, const SolverConfig&) {
        // Split "scheme://host:port/path" into the client base and the path.
        const auto scheme_end = url.find("://");
        const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        const std::string base = url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(base);
        client.set_read_timeout(600, 0);
        auto res = client.Post(path, nlohmann::json(qubo).dump(), "application/json");
        if (!res) {
            throw TransportError("external solver at " + url + " unreachable: " +
                                 httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw TransportError("external solver at " + url + " returned HTTP " +
                                 std::to_string(res->status) + ": " + res->body);
        }
        return parse_reply(res->body, qubo.num_vars());
    };
}

SolverRegistry SolverRegistry::with_builtins() {
    SolverRegistry reg;
    reg.add("sa", [](const BinaryPolynomial& p, const SolverConfig& cfg) { return simulated_anneal(p, cfg); });
    reg.add_quadratic("brute", [](const BinaryPolynomial& q, const SolverConfig& cfg) {
        return brute_force_solver(q, cfg).best_assignment;
    });
    if (const char* target = std::getenv(kExternalSolverEnv); target && *target) {
        const std::string t(target);
        if (t.starts_with("http://") || t.starts_with("https://")) {
            reg.add_quadratic("external", http_solver(t));
        } else {
            reg.add_quadratic("external", command_solver(t));
        }
    }
    return reg;
}

void SolverRegistry::add(const std::string& name, SolverFn fn) { solvers_[name] = std::move(fn); }

void SolverRegistry::add_quadratic(const std::string& name, QuadraticSolverFn fn) {
    solvers_[name] = [fn = std::move(fn)](const BinaryPolynomial& p, const SolverConfig& cfg) {
        const QuadraticReduction red = reduce_to_quadratic(p);
        const Assignment full = fn(red.qubo, cfg);
        if (full.size() != red.qubo.num_vars()) {
            throw TransportError("quadratic solver returned the wrong number of bits");
        }
        SolverResult r;
        r.best_assignment = red.project(full);
        r.best_value = p.evaluate(r.best_assignment);
        r.samples_evaluated = 1;
        return r;
    };
}

std::vector<std::string> SolverRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : solvers_) out.push_back(name);
    return out;
}

SolverResult SolverRegistry::solve(const BinaryPolynomial& p, const std::string& name,
                                   const SolverConfig& cfg) const {
    auto it = solvers_.find(name);
    if (it == solvers_.end()) throw LookupError("unknown solver '" + name + "'");
    return it->second(p, cfg);
}

SolverResult solve(const BinaryPolynomial& p, const std::string& solver_name, const SolverConfig& cfg) {
    return SolverRegistry::with_builtins().solve(p, solver_name, cfg);
}

void to_json(nlohmann::json& j, const SolverConfig& cfg) {
    j = nlohmann::json{
        {"kind", cfg.schedule.kind == CoolingKind::linear ? "linear" : "geometric"},
        {"t_start", cfg.schedule.t_start},
        {"t_end", cfg.schedule.t_end},
        {"num_steps", cfg.schedule.num_steps},
        {"num_restarts", cfg.num_restarts},
        {"seed", cfg.seed},
    };
}

}  // namespace truckloop
