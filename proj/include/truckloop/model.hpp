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
#include <filesystem>
#include <map>
#include <vector>

#include "json.hpp"

namespace truckloop {

using NodeId = std::uint32_t;
using BoxId = std::int64_t;

/// Dense row-major n x n matrix of reals.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    const std::vector<double>& data() const noexcept { return data_; }

    double sum() const;
    double max() const;
    std::size_t count_nonzero() const;

    Matrix& operator-=(const Matrix& o);
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Driving times in seconds. Zero diagonal, finite non-negative entries; not
/// necessarily symmetric.
class TimeMatrix {
public:
    TimeMatrix() = default;
    /// Throws ValidationError if the invariants do not hold.
    explicit TimeMatrix(Matrix seconds);

    std::size_t size() const noexcept { return m_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }

    friend bool operator==(const TimeMatrix&, const TimeMatrix&) = default;

private:
    Matrix m_;
};

/// Total driving time of a node sequence.
double route_duration(const TimeMatrix& time, const std::vector<NodeId>& nodes);

struct Box {
    BoxId id = 0;
    double volume = 0.0;          // truck-capacity units
    std::vector<NodeId> path;     // 2 or 3 distinct nodes

    std::size_t rank() const noexcept { return path.size(); }
    friend bool operator==(const Box&, const Box&) = default;
};

struct BoxGroup {
    std::vector<NodeId> path;
    double total_volume = 0.0;
    std::vector<BoxId> box_ids;
    friend bool operator==(const BoxGroup&, const BoxGroup&) = default;
};

/// Continuous off-board demand: d2(i,j) for rank-2 and d3(i,j,k) for rank-3.
class DemandTensors {
public:
    DemandTensors() = default;
    explicit DemandTensors(std::size_t n) : n_(n), d2_(n), d3_(n * n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double& d2(std::size_t i, std::size_t j) { return d2_(i, j); }
    double d2(std::size_t i, std::size_t j) const { return d2_(i, j); }
    double& d3(std::size_t i, std::size_t j, std::size_t k) { return d3_[(i * n_ + j) * n_ + k]; }
    double d3(std::size_t i, std::size_t j, std::size_t k) const { return d3_[(i * n_ + j) * n_ + k]; }
    const Matrix& rank2() const noexcept { return d2_; }

    double total() const;

private:
    std::size_t n_ = 0;
    Matrix d2_;
    std::vector<double> d3_;
};

struct DrivingWindow {
    double t_max_s = 57'600.0;
    friend bool operator==(const DrivingWindow&, const DrivingWindow&) = default;
};

struct ProblemInstance {
    std::size_t n = 0;
    TimeMatrix time;
    std::vector<Box> boxes;
    DrivingWindow window;
    double truck_capacity = 1.0;

    /// Throws ValidationError naming the first broken invariant.
    void validate() const;
    double total_volume() const;
    friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

/// One group per distinct path, ordered by path.
std::vector<BoxGroup> group_boxes(const std::vector<Box>& boxes);

/// Box-soup demand tensors. Throws UnsupportedRankError for paths that are
/// not of rank 2 or 3, DimensionError for nodes outside [0, n).
DemandTensors box_soup(const std::vector<BoxGroup>& groups, std::size_t n);

/// Rank-collapsed demand: D(i,j) = d2(i,j) + sum_k d3(i,j,k) + d3(k,i,j).
Matrix overall_demand(const DemandTensors& d);

/// overall_demand(box_soup(group_boxes(inst.boxes), inst.n)).
Matrix overall_demand(const ProblemInstance& inst);

struct GeneratorConfig {
    std::size_t n = 23;
    std::size_t num_boxes = 10'000;
    std::size_t num_paths = 115;
    double rank3_fraction = 0.3;
    double min_time_s = 300.0;
    double max_time_s = 4.0 * 3600.0;
    double min_volume = 0.001;
    double max_volume = 0.05;
    double window_s = 16.0 * 3600.0;
    bool symmetric = true;
};

/// Synthetic instance. Node positions are drawn in the unit square and
/// driving times scale linearly with distance into [min_time_s, max_time_s].
/// The demand uses exactly num_paths distinct box paths whose legs cover
/// exactly num_paths (capped at n(n-1)) ordered node pairs, so the overall
/// demand has that many nonzero entries. Volumes are log-uniform.
///
/// Throws ParameterError for infeasible or out-of-range settings.
ProblemInstance generate_instance(const GeneratorConfig& cfg, std::uint64_t seed);

void to_json(nlohmann::json& j, const ProblemInstance& inst);
/// Throws ParseError for missing/mistyped fields, ValidationError for
/// values that break an invariant.
ProblemInstance instance_from_json(const nlohmann::json& j);

ProblemInstance load_instance(const std::filesystem::path& path);
void save_instance(const ProblemInstance& inst, const std::filesystem::path& path);

/// n rows of n comma-separated seconds.
TimeMatrix load_time_matrix_csv(const std::filesystem::path& path);

}  // namespace truckloop
