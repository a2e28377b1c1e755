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

#include "oracles.hpp"
#include "truckloop/errors.hpp"
#include "truckloop/pubo_builder.hpp"

using namespace truckloop;
using Catch::Approx;

namespace {

TimeMatrix two_node_times(double t01, double t10) {
    Matrix m(2);
    m(0, 1) = t01;
    m(1, 0) = t10;
    return TimeMatrix(m);
}

double on_route(const BinaryPolynomial& p, const std::vector<NodeId>& r, std::size_t n) {
    BinaryPolynomial q = p;
    q.reserve_vars(n * r.size());
    return q.evaluate(encode_route(r, VarIndex(n, r.size())));
}

}  // namespace

TEST_CASE("variable index is a bijection") {
    const VarIndex idx(23, 15);
    CHECK(idx.size() == 345);
    std::vector<int> hit(idx.size(), 0);
    for (std::size_t i = 0; i < 23; ++i) {
        for (std::size_t t = 0; t < 15; ++t) {
            const VariableId v = idx.var(i, t);
            CHECK(v == i * 15 + t);
            CHECK(idx.node_of(v) == i);
            CHECK(idx.step_of(v) == t);
            ++hit[v];
        }
    }
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
}

TEST_CASE("locality term") {
    const std::size_t n = 3, tau = 3;
    const BinaryPolynomial p = locality_term(n, tau);
    CHECK(p.degree() == 2);
    CHECK(on_route(p, {0, 2, 1}, n) == 0.0);
    CHECK(p.evaluate(Assignment(n * tau, 0)) == 3.0);

    const VarIndex idx(n, tau);
    Assignment a = encode_route({0, 2, 1}, idx);
    a[idx.var(1, 1)] = 1;
    CHECK(p.evaluate(a) == 1.0);

    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Assignment x = oracle::random_assignment(rng, n * tau);
        double expected = 0.0;
        for (std::size_t t = 0; t < tau; ++t) {
            double count = 0.0;
            for (std::size_t i = 0; i < n; ++i) count += x[idx.var(i, t)];
            expected += (1 - count) * (1 - count);
        }
        CHECK(p.evaluate(x) == expected);
    }
}

TEST_CASE("demand term") {
    CHECK(demand_term(Matrix(3), 4, 2).empty());

    Matrix d(2);
    d(0, 1) = 0.5;
    CHECK(on_route(demand_term(d, 2, 1), {0, 1}, 2) == -0.5);
    CHECK(on_route(demand_term(d, 3, 2), {0, 0, 1}, 2) == -1.0);
}

TEST_CASE("time term") {
    const TimeMatrix t = two_node_times(5, 7);
    CHECK(on_route(time_term(t, 3), {1, 1, 1}, 2) == 0.0);
    CHECK(on_route(time_term(t, 3), {0, 1, 0}, 2) == 12.0);

    Rng rng(6);
    const TimeMatrix big = oracle::random_times(rng, 6, 300, 14'400);
    const BinaryPolynomial p = time_term(big, 8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = oracle::random_route(rng, 6, 8);
        CHECK(on_route(p, r, 6) == Approx(Route::from_nodes(r, big).duration_s).epsilon(1e-12));
    }
}

TEST_CASE("redundancy term") {
    CHECK(redundancy_term(Matrix(3), 6).empty());

    Matrix flags(2);
    flags(0, 1) = 1;
    const BinaryPolynomial p4 = redundancy_term(flags, 4);
    CHECK(p4.degree() == 4);
    CHECK(on_route(p4, {0, 1, 0, 1}, 2) == 1.0);
    CHECK(on_route(redundancy_term(flags, 5), {0, 1, 0, 1, 0}, 2) == 1.0);
    CHECK(on_route(redundancy_term(flags, 5), {0, 1, 0, 1, 1}, 2) == 1.0);
    CHECK(on_route(redundancy_term(flags, 6), {0, 1, 0, 1, 0, 1}, 2) == 3.0);
}

TEST_CASE("redundancy flags") {
    Matrix d(3);
    d(0, 1) = 0.5;
    d(1, 2) = 1.5;
    d(2, 0) = 1.0;
    const Matrix f = redundancy_flags(d, 1.0);
    CHECK(f(0, 1) == 1.0);
    CHECK(f(1, 2) == 0.0);
    CHECK(f(2, 0) == 1.0);
    CHECK(f(1, 0) == 0.0);
    CHECK(f.sum() == 2.0);
}

TEST_CASE("full single-truck PUBO") {
    Rng rng(10);
    const std::size_t n = 23;
    Matrix d(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && rng.uniform01() < 0.25) d(i, j) = rng.uniform(0.0, 2.0);
        }
    }
    const TimeMatrix t = oracle::random_times(rng, n, 300, 14'400);

    PuboParams params;
    CHECK(build_single_truck_pubo(d, t, params).pubo.num_vars() == 345);
    params.tau = 5;
    CHECK(build_single_truck_pubo(d, t, params).pubo.num_vars() == 115);

    params = PuboParams{};
    const SingleTruckPubo built = build_single_truck_pubo(d, t, params);
    const Matrix flags = redundancy_flags(d, params.redundancy_threshold);
    for (int trial = 0; trial < 100; ++trial) {
        // Short cycles make the repeat term fire.
        const std::size_t period = 1 + rng.uniform_index(4);
        const auto base = oracle::random_route(rng, n, period);
        std::vector<NodeId> r(params.tau);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] = trial % 2 ? base[k % period] : static_cast<NodeId>(rng.uniform_index(n));
        const double expected =
            oracle::full_route_value(oracle::score_route(r, d, t, flags, params.delta_max), params);
        const double got = built.pubo.evaluate(encode_route(r, built.index));
        CHECK(got == Approx(expected).epsilon(1e-9).margin(1e-9));
    }
}

TEST_CASE("zero demand PUBO is minimized by staying put") {
    Rng rng(1);
    PuboParams params;
    params.tau = 3;
    const TimeMatrix t = oracle::random_times(rng, 3, 1, 10);
    const SingleTruckPubo built = build_single_truck_pubo(Matrix(3), t, params);
    const oracle::Min m = oracle::minimize(built.pubo);
    CHECK(m.value == 0.0);
    for (NodeId v = 0; v < 3; ++v) CHECK(built.pubo.evaluate(encode_route({v, v, v}, built.index)) == 0.0);
}

TEST_CASE("parameter validation and JSON") {
    PuboParams p;
    CHECK_NOTHROW(p.validate());
    p.tau = 1;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = PuboParams{};
    p.a_time = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);

    const nlohmann::json j = PuboParams{};
    CHECK(j.at("a_local") == 5000.0);
    CHECK(j.at("a_demand") == 320.0);
    CHECK(j.at("a_time") == 0.01);
    CHECK(j.at("a_nonredundant") == 1.0);
    CHECK(j.at("delta_max") == 3);

    PuboParams q;
    from_json(nlohmann::json{{"tau", 5}, {"a_time", 0.02}}, q);
    CHECK(q.tau == 5);
    CHECK(q.a_time == 0.02);
    CHECK(q.a_local == 5000.0);
    CHECK_THROWS_AS(from_json(nlohmann::json{{"bogus", 1}}, q), ParseError);
}

TEST_CASE("rectify keeps local assignments") {
    Rng rng(3);
    const std::size_t n = 4, tau = 6;
    const TimeMatrix t = oracle::random_times(rng, n, 1, 10);
    Matrix d(n);
    d(0, 1) = 0.3;
    PuboParams params;
    params.tau = tau;
    const SingleTruckPubo built = build_single_truck_pubo(d, t, params);
    const std::vector<NodeId> r{0, 1, 3, 3, 2, 0};
    Rng fill(0);
    const Route out = rectify(encode_route(r, built.index), built.pubo, built.index, t, fill);
    CHECK(out.nodes == r);
    CHECK(out.duration_s == route_duration(t, r));
}

TEST_CASE("rectify fills empty steps deterministically") {
    Rng rng(3);
    const std::size_t n = 5, tau = 7;
    const TimeMatrix t = oracle::random_times(rng, n, 1, 10);
    PuboParams params;
    params.tau = tau;
    const SingleTruckPubo built = build_single_truck_pubo(Matrix(n), t, params);
    const Assignment zero(n * tau, 0);
    Rng a(99), b(99);
    const Route ra = rectify(zero, built.pubo, built.index, t, a);
    const Route rb = rectify(zero, built.pubo, built.index, t, b);
    CHECK(ra.nodes.size() == tau);
    CHECK(ra == rb);
}

TEST_CASE("rectify picks the best of several active nodes") {
    const std::size_t n = 4, tau = 3;
    Matrix tm(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) tm(i, i) = 0.0;
    const TimeMatrix t(tm);
    Matrix d(n);
    d(2, 3) = 1.0;  // node 2 at step 1 feeds the demand into node 3 at step 2
    PuboParams params;
    params.tau = tau;
    const SingleTruckPubo built = build_single_truck_pubo(d, t, params);
    const VarIndex& idx = built.index;

    Assignment a(n * tau, 0);
    a[idx.var(0, 0)] = 1;
    a[idx.var(1, 1)] = 1;
    a[idx.var(2, 1)] = 1;
    a[idx.var(3, 2)] = 1;

    // Independent check: score both one-hot choices on the full route.
    double best = std::numeric_limits<double>::infinity();
    NodeId expected = 0;
    for (NodeId c : {1U, 2U}) {
        const double v = built.pubo.evaluate(encode_route({0, c, 3}, idx));
        if (v < best) {
            best = v;
            expected = c;
        }
    }
    REQUIRE(expected == 2);
    Rng rng(0);
    const Route r = rectify(a, built.pubo, idx, t, rng);
    CHECK(r.nodes == std::vector<NodeId>{0, expected, 3});
}

TEST_CASE("rectify output is always one node per step") {
    Rng rng(17);
    const std::size_t n = 6, tau = 8;
    const TimeMatrix t = oracle::random_times(rng, n, 100, 1000);
    Matrix d(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) d(i, j) = rng.uniform01() < 0.3 ? rng.uniform01() : 0.0;
        }
    }
    PuboParams params;
    params.tau = tau;
    const SingleTruckPubo built = build_single_truck_pubo(d, t, params);
    for (int trial = 0; trial < 50; ++trial) {
        const Route r = rectify(oracle::random_assignment(rng, n * tau), built.pubo, built.index, t, rng);
        REQUIRE(r.nodes.size() == tau);
        for (NodeId v : r.nodes) CHECK(v < n);
        CHECK(locality_term(n, tau).evaluate(encode_route(r.nodes, built.index)) == 0.0);
    }
}

TEST_CASE("fit_to_window") {
    const TimeMatrix t = two_node_times(5, 5);
    CHECK(fit_to_window(Route::from_nodes({0, 1, 0}, t), t, DrivingWindow{7}).nodes == std::vector<NodeId>{0, 1});

    Route r = fit_to_window(Route::from_nodes({0, 1}, t), t, DrivingWindow{21});
    CHECK(r.nodes == std::vector<NodeId>{0, 1, 0, 1, 0});
    CHECK(r.duration_s == 20.0);
    r = fit_to_window(Route::from_nodes({0, 1}, t), t, DrivingWindow{15});
    CHECK(r.nodes == std::vector<NodeId>{0, 1, 0, 1});

    CHECK(fit_to_window(Route::from_nodes({0, 1, 0}, t), t, DrivingWindow{10}).nodes ==
          std::vector<NodeId>{0, 1, 0});
    CHECK(fit_to_window(Route::from_nodes({1}, t), t, DrivingWindow{10}).nodes == std::vector<NodeId>{1});
    CHECK(fit_to_window(Route::from_nodes({1, 1, 1}, t), t, DrivingWindow{10}).nodes ==
          std::vector<NodeId>{1, 1, 1});
}

TEST_CASE("fit_to_window skips self-hops when cycling") {
    Matrix m(3, 1.0);
    for (std::size_t i = 0; i < 3; ++i) m(i, i) = 0.0;
    const TimeMatrix t(m);
    const Route r = fit_to_window(Route::from_nodes({0, 0, 1, 2}, t), t, DrivingWindow{5});
    CHECK(r.nodes == std::vector<NodeId>{0, 0, 1, 2, 0, 1, 2});
}

TEST_CASE("fit_to_window never exceeds the window") {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const TimeMatrix t = oracle::random_times(rng, n, 0, 50);
        const auto nodes = oracle::random_route(rng, n, 1 + rng.uniform_index(10));
        const DrivingWindow w{rng.uniform(0.0, 400.0)};
        const Route r = fit_to_window(Route::from_nodes(nodes, t), t, w);
        CHECK(r.duration_s <= w.t_max_s);
        CHECK(r.duration_s == route_duration(t, r.nodes));
        CHECK_FALSE(r.nodes.empty());
        CHECK(r.nodes.front() == nodes.front());
    }
}

TEST_CASE("route JSON") {
    const Route r{{0, 2, 1}, 12.5};
    const nlohmann::json j = r;
    CHECK(j.dump() == R"({"duration_s":12.5,"nodes":[0,2,1]})");
    CHECK(j.get<Route>() == r);
}
