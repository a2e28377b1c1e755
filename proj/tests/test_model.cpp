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

#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "truckloop/errors.hpp"
#include "truckloop/model.hpp"

using namespace truckloop;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "truckloop-model-test";
    fs::create_directories(dir);
    return dir / name;
}

ProblemInstance tiny_instance() {
    Matrix t(3);
    t(0, 1) = 10;
    t(1, 0) = 12;
    t(1, 2) = 5;
    t(2, 1) = 5;
    t(0, 2) = 20;
    t(2, 0) = 20;
    ProblemInstance inst;
    inst.n = 3;
    inst.time = TimeMatrix(t);
    inst.window.t_max_s = 100;
    inst.boxes = {{0, 0.2, {0, 1}}, {1, 0.3, {0, 1}}, {2, 0.25, {0, 1, 2}}};
    return inst;
}

}  // namespace

TEST_CASE("time matrix invariants") {
    Matrix m(2);
    m(0, 1) = 3;
    CHECK_NOTHROW(TimeMatrix(m));
    m(1, 1) = 1;
    CHECK_THROWS_AS(TimeMatrix(m), ValidationError);
    m(1, 1) = 0;
    m(1, 0) = -1;
    CHECK_THROWS_AS(TimeMatrix(m), ValidationError);
    m(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(TimeMatrix(m), ValidationError);
}

TEST_CASE("group_boxes merges by path") {
    const std::vector<Box> same{{0, 0.2, {0, 1}}, {1, 0.3, {0, 1}}};
    const auto g = group_boxes(same);
    REQUIRE(g.size() == 1);
    CHECK(g[0].total_volume == 0.5);
    CHECK(g[0].box_ids == std::vector<BoxId>{0, 1});

    const std::vector<Box> mixed{{0, 0.2, {0, 1}}, {1, 0.3, {0, 1, 2}}};
    CHECK(group_boxes(mixed).size() == 2);
}

TEST_CASE("group_boxes partitions the boxes") {
    const ProblemInstance inst = generate_instance(GeneratorConfig{.num_boxes = 3000}, 4);
    const auto groups = group_boxes(inst.boxes);
    std::set<BoxId> ids;
    std::size_t count = 0;
    double volume = 0.0;
    for (const auto& g : groups) {
        double v = 0.0;
        for (BoxId id : g.box_ids) {
            CHECK(ids.insert(id).second);
            v += inst.boxes[static_cast<std::size_t>(id)].volume;
            CHECK(inst.boxes[static_cast<std::size_t>(id)].path == g.path);
        }
        CHECK(g.total_volume == Catch::Approx(v).epsilon(1e-12));
        count += g.box_ids.size();
        volume += g.total_volume;
    }
    CHECK(count == inst.boxes.size());
    CHECK(volume == Catch::Approx(inst.total_volume()).epsilon(1e-9));
}

TEST_CASE("box soup") {
    DemandTensors d = box_soup({BoxGroup{{0, 1}, 0.5, {0}}}, 3);
    CHECK(d.d2(0, 1) == 0.5);
    CHECK(d.total() == 0.5);

    d = box_soup({BoxGroup{{0, 1, 2}, 2.0, {0}}}, 3);
    CHECK(d.d3(0, 1, 2) == 2.0);
    CHECK(d.rank2().sum() == 0.0);

    CHECK_THROWS_AS(box_soup({BoxGroup{{0, 1, 2, 0}, 1.0, {0}}}, 3), UnsupportedRankError);
    CHECK_THROWS_AS(box_soup({BoxGroup{{0}, 1.0, {0}}}, 3), UnsupportedRankError);
}

TEST_CASE("box soup conserves mass") {
    const ProblemInstance inst = generate_instance(GeneratorConfig{.num_boxes = 2000}, 9);
    const DemandTensors d = box_soup(group_boxes(inst.boxes), inst.n);
    CHECK(d.total() == Catch::Approx(inst.total_volume()).epsilon(1e-9));
}

TEST_CASE("overall demand") {
    DemandTensors d(3);
    d.d2(0, 1) = 0.3;
    d.d2(2, 0) = 0.1;
    CHECK(overall_demand(d) == d.rank2());

    DemandTensors e(3);
    e.d3(0, 1, 2) = 2.0;
    const Matrix m = overall_demand(e);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 2) == 2.0);
    CHECK(m.sum() == 4.0);
}

TEST_CASE("overall demand is linear") {
    Rng rng(2);
    const std::size_t n = 5;
    DemandTensors d(n), e(n), mix(n);
    const double a = 0.75, b = 2.5;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            d.d2(i, j) = rng.uniform01();
            e.d2(i, j) = rng.uniform01();
            mix.d2(i, j) = a * d.d2(i, j) + b * e.d2(i, j);
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j) continue;
                d.d3(i, j, k) = rng.uniform01();
                e.d3(i, j, k) = rng.uniform01();
                mix.d3(i, j, k) = a * d.d3(i, j, k) + b * e.d3(i, j, k);
            }
        }
    }
    const Matrix md = overall_demand(d), me = overall_demand(e), mm = overall_demand(mix);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(mm(i, j) == Catch::Approx(a * md(i, j) + b * me(i, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("generator shape") {
    const ProblemInstance inst = generate_instance(GeneratorConfig{}, 0);
    CHECK(inst.n == 23);
    CHECK(inst.window.t_max_s == 57'600.0);
    CHECK(inst.boxes.size() == 10'000);
    CHECK(inst.truck_capacity == 1.0);
    CHECK(group_boxes(inst.boxes).size() == 115);
    CHECK(overall_demand(inst).count_nonzero() == 115);
    CHECK_NOTHROW(inst.validate());

    std::size_t rank3 = 0;
    for (const auto& g : group_boxes(inst.boxes)) rank3 += g.path.size() == 3;
    CHECK(rank3 == static_cast<std::size_t>(std::llround(GeneratorConfig{}.rank3_fraction * 115)));

    for (std::size_t i = 0; i < inst.n; ++i) {
        for (std::size_t j = 0; j < inst.n; ++j) {
            if (i == j) continue;
            CHECK(inst.time(i, j) >= 300.0);
            CHECK(inst.time(i, j) <= 14'400.0);
            CHECK(inst.time(i, j) == inst.time(j, i));
        }
    }
    for (const Box& b : inst.boxes) {
        CHECK(b.volume >= 0.001 * (1 - 1e-12));
        CHECK(b.volume <= 0.05 * (1 + 1e-12));
    }
}

TEST_CASE("generator determinism and variants") {
    const GeneratorConfig cfg{.num_boxes = 500};
    CHECK(generate_instance(cfg, 3) == generate_instance(cfg, 3));
    CHECK_FALSE(generate_instance(cfg, 3) == generate_instance(cfg, 4));

    GeneratorConfig asym = cfg;
    asym.symmetric = false;
    const ProblemInstance a = generate_instance(asym, 1);
    bool differs = false;
    for (std::size_t i = 0; i < a.n; ++i) {
        for (std::size_t j = 0; j < a.n; ++j) differs |= a.time(i, j) != a.time(j, i);
    }
    CHECK(differs);

    for (double f : {0.0, 0.5}) {
        GeneratorConfig c = cfg;
        c.rank3_fraction = f;
        const ProblemInstance inst = generate_instance(c, 2);
        CHECK(group_boxes(inst.boxes).size() == 115);
        CHECK(overall_demand(inst).count_nonzero() == 115);
    }

    GeneratorConfig many{.n = 4, .num_boxes = 40, .num_paths = 30};
    const ProblemInstance dense = generate_instance(many, 5);
    CHECK(group_boxes(dense.boxes).size() == 30);
}

TEST_CASE("generator rejects infeasible settings") {
    CHECK_THROWS_AS(generate_instance(GeneratorConfig{.n = 3, .num_paths = 9999}, 0), ParameterError);
    CHECK_THROWS_AS(generate_instance(GeneratorConfig{.n = 1}, 0), ParameterError);
    CHECK_THROWS_AS(generate_instance(GeneratorConfig{.num_boxes = 10}, 0), ParameterError);
    CHECK_THROWS_AS(generate_instance(GeneratorConfig{.rank3_fraction = 1.5}, 0), ParameterError);
    CHECK_THROWS_AS(generate_instance(GeneratorConfig{.min_volume = 0.0}, 0), ParameterError);
}

TEST_CASE("instance file round trip") {
    const ProblemInstance inst = generate_instance(GeneratorConfig{.num_boxes = 300}, 12);
    const fs::path path = temp_file("roundtrip.json");
    save_instance(inst, path);
    CHECK(load_instance(path) == inst);

    const ProblemInstance tiny = tiny_instance();
    save_instance(tiny, path);
    CHECK(load_instance(path) == tiny);
}

TEST_CASE("instance parse and validation errors") {
    nlohmann::json j = tiny_instance();
    CHECK_NOTHROW(instance_from_json(j));

    nlohmann::json no_time = j;
    no_time.erase("time");
    try {
        instance_from_json(no_time);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("time") != std::string::npos);
    }

    nlohmann::json negative = j;
    negative["boxes"][0]["volume"] = -0.1;
    CHECK_THROWS_AS(instance_from_json(negative), ValidationError);

    nlohmann::json bad_node = j;
    bad_node["boxes"][0]["path"] = {0, 7};
    CHECK_THROWS_AS(instance_from_json(bad_node), ValidationError);

    nlohmann::json rank4 = j;
    rank4["boxes"][0]["path"] = {0, 1, 2, 0};
    CHECK_THROWS_AS(instance_from_json(rank4), ValidationError);

    nlohmann::json dup = j;
    dup["boxes"][1]["id"] = 0;
    CHECK_THROWS_AS(instance_from_json(dup), ValidationError);

    nlohmann::json typed = j;
    typed["boxes"][0]["volume"] = "big";
    CHECK_THROWS_AS(instance_from_json(typed), ParseError);

    nlohmann::json cap = j;
    cap["capacity"] = 2.0;
    CHECK_THROWS_AS(instance_from_json(cap), ValidationError);

    const fs::path path = temp_file("broken.json");
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS(load_instance(path), ParseError);
    CHECK_THROWS_AS(load_instance(temp_file("absent.json")), IoError);
}

TEST_CASE("time matrix CSV import") {
    const fs::path path = temp_file("times.csv");
    std::ofstream(path) << "0,10,20\n12,0,5\n20,5,0\n";
    const TimeMatrix t = load_time_matrix_csv(path);
    CHECK(t == tiny_instance().time);

    std::ofstream(path) << "0,1\n1\n";
    CHECK_THROWS_AS(load_time_matrix_csv(path), ParseError);
    std::ofstream(path) << "0,x\n1,0\n";
    CHECK_THROWS_AS(load_time_matrix_csv(path), ParseError);
}

TEST_CASE("route duration") {
    const ProblemInstance inst = tiny_instance();
    CHECK(route_duration(inst.time, {0, 1, 0}) == 22.0);
    CHECK(route_duration(inst.time, {2}) == 0.0);
}
