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

#include "truckloop/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "truckloop/errors.hpp"
#include "truckloop/json_util.hpp"
#include "truckloop/rng.hpp"

namespace truckloop {

using nlohmann::json;

double Matrix::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

double Matrix::max() const {
    if (data_.empty()) return 0.0;
    return *std::max_element(data_.begin(), data_.end());
}

std::size_t Matrix::count_nonzero() const {
    return static_cast<std::size_t>(
        std::count_if(data_.begin(), data_.end(), [](double v) { return v != 0.0; }));
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (o.n_ != n_) throw DimensionError("matrix size mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

TimeMatrix::TimeMatrix(Matrix seconds) : m_(std::move(seconds)) {
    const std::size_t n = m_.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double t = m_(i, j);
            if (!std::isfinite(t) || t < 0.0) {
                throw ValidationError("time[" + std::to_string(i) + "][" + std::to_string(j) +
                                      "] must be finite and non-negative");
            }
        }
        if (m_(i, i) != 0.0) {
            throw ValidationError("time[" + std::to_string(i) + "][" + std::to_string(i) +
                                  "] must be 0");
        }
    }
}

double route_duration(const TimeMatrix& time, const std::vector<NodeId>& nodes) {
    double d = 0.0;
    for (std::size_t t = 0; t + 1 < nodes.size(); ++t) d += time(nodes[t], nodes[t + 1]);
    return d;
}

double DemandTensors::total() const {
    double s = d2_.sum();
    for (double v : d3_) s += v;
    return s;
}

void ProblemInstance::validate() const {
    if (time.size() != n) {
        throw ValidationError("time matrix is " + std::to_string(time.size()) + "x" +
                              std::to_string(time.size()) + " but n is " + std::to_string(n));
    }
    if (!(window.t_max_s > 0.0) || !std::isfinite(window.t_max_s)) {
        throw ValidationError("window_s must be positive");
    }
    if (truck_capacity != 1.0) throw ValidationError("capacity must be 1.0");
    std::set<BoxId> ids;
    for (const Box& b : boxes) {
        const std::string where = "box " + std::to_string(b.id);
        if (!ids.insert(b.id).second) throw ValidationError(where + ": duplicate id");
        if (!(b.volume > 0.0) || !std::isfinite(b.volume)) {
            throw ValidationError(where + ": volume must be positive");
        }
        if (b.path.size() < 2 || b.path.size() > 3) {
            throw ValidationError(where + ": path must have 2 or 3 nodes");
        }
        for (std::size_t k = 0; k < b.path.size(); ++k) {
            if (b.path[k] >= n) throw ValidationError(where + ": path node out of range");
            for (std::size_t l = 0; l < k; ++l) {
                if (b.path[l] == b.path[k]) throw ValidationError(where + ": path nodes must be distinct");
            }
        }
    }
}

double ProblemInstance::total_volume() const {
    double s = 0.0;
    for (const Box& b : boxes) s += b.volume;
    return s;
}

std::vector<BoxGroup> group_boxes(const std::vector<Box>& boxes) {
    std::map<std::vector<NodeId>, BoxGroup> by_path;
    for (const Box& b : boxes) {
        BoxGroup& g = by_path[b.path];
        g.path = b.path;
        g.total_volume += b.volume;
        g.box_ids.push_back(b.id);
    }
    std::vector<BoxGroup> out;
    out.reserve(by_path.size());
    for (auto& [path, g] : by_path) out.push_back(std::move(g));
    return out;
}

DemandTensors box_soup(const std::vector<BoxGroup>& groups, std::size_t n) {
    DemandTensors d(n);
    for (const BoxGroup& g : groups) {
        for (NodeId v : g.path) {
            if (v >= n) throw DimensionError("path node " + std::to_string(v) + " outside [0, " +
                                             std::to_string(n) + ")");
        }
        if (g.path.size() == 2) {
            d.d2(g.path[0], g.path[1]) += g.total_volume;
        } else if (g.path.size() == 3) {
            d.d3(g.path[0], g.path[1], g.path[2]) += g.total_volume;
        } else {
            throw UnsupportedRankError("path of rank " + std::to_string(g.path.size()) +
                                       " is not supported (only 2 or 3)");
        }
    }
    return d;
}

Matrix overall_demand(const DemandTensors& d) {
    const std::size_t n = d.size();
    Matrix out = d.rank2();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                const double v = d.d3(i, j, k);
                if (v == 0.0) continue;
                out(i, j) += v;
                out(j, k) += v;
            }
        }
    }
    return out;
}

Matrix overall_demand(const ProblemInstance& inst) {
    return overall_demand(box_soup(group_boxes(inst.boxes), inst.n));
}

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) return lo;
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

void check_generator(const GeneratorConfig& c) {
    auto fail = [](const std::string& m) { throw ParameterError(m); };
    if (c.n < 2) fail("n must be at least 2");
    if (c.num_paths == 0) fail("paths must be positive");
    if (c.num_boxes < c.num_paths) fail("boxes must be at least the number of paths");
    if (!(c.rank3_fraction >= 0.0 && c.rank3_fraction <= 1.0)) fail("rank3 fraction must be in [0, 1]");
    if (!(c.min_time_s > 0.0) || !(c.max_time_s >= c.min_time_s) || !std::isfinite(c.max_time_s)) {
        fail("time range must satisfy 0 < min <= max");
    }
    if (!(c.min_volume > 0.0) || !(c.max_volume >= c.min_volume) || c.max_volume > 1.0) {
        fail("volume range must satisfy 0 < min <= max <= 1");
    }
    if (!(c.window_s > 0.0) || !std::isfinite(c.window_s)) fail("window must be positive");

    const double pairs = static_cast<double>(c.n) * static_cast<double>(c.n - 1);
    const double slots = pairs + pairs * static_cast<double>(c.n - 2);
    if (static_cast<double>(c.num_paths) > slots) {
        fail("cannot place " + std::to_string(c.num_paths) + " distinct paths on " +
             std::to_string(c.n) + " nodes (at most " + std::to_string(static_cast<long long>(slots)) + ")");
    }
}

Matrix generate_times(const GeneratorConfig& c, Rng& rng) {
    const std::size_t n = c.n;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform01();
        y[i] = rng.uniform01();
    }
    Matrix dist(n);
    double max_d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dist(i, j) = std::hypot(x[i] - x[j], y[i] - y[j]);
            max_d = std::max(max_d, dist(i, j));
        }
    }
    Matrix t(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double frac = max_d > 0.0 ? dist(i, j) / max_d : 1.0;
            // Round to whole seconds so files stay readable.
            t(i, j) = std::round(c.min_time_s + (c.max_time_s - c.min_time_s) * frac);
        }
    }
    if (!c.symmetric) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double v = t(i, j) * rng.uniform(0.85, 1.15);
                t(i, j) = std::round(std::clamp(v, c.min_time_s, c.max_time_s));
            }
        }
    }
    return t;
}

using Path = std::vector<NodeId>;

std::vector<Path> generate_paths(const GeneratorConfig& c, Rng& rng) {
    const std::size_t n = c.n;
    std::vector<std::pair<NodeId, NodeId>> all_pairs;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = 0; j < n; ++j) {
            if (i != j) all_pairs.emplace_back(i, j);
        }
    }
    rng.shuffle(all_pairs.begin(), all_pairs.end());
    const std::size_t num_legs = std::min(c.num_paths, all_pairs.size());
    all_pairs.resize(num_legs);

    std::vector<char> is_leg(n * n, 0);
    for (auto [i, j] : all_pairs) is_leg[i * n + j] = 1;

    const auto wanted3 = static_cast<std::size_t>(
        std::llround(c.rank3_fraction * static_cast<double>(c.num_paths)));
    const std::size_t num_rank3 = std::max(wanted3, c.num_paths - num_legs);
    const std::size_t num_rank2 = c.num_paths - num_rank3;

    std::vector<Path> chains;
    for (auto [i, j] : all_pairs) {
        for (NodeId k = 0; k < n; ++k) {
            if (k != i && k != j && is_leg[j * n + k]) chains.push_back({i, j, k});
        }
    }
    std::sort(chains.begin(), chains.end());
    rng.shuffle(chains.begin(), chains.end());

    // Prefer chains that cover legs nothing covers yet, so the rank-2 paths
    // have room to cover the rest.
    std::vector<char> covered(n * n, 0);
    std::vector<char> taken(chains.size(), 0);
    std::vector<Path> rank3;
    for (int need_new = 2; need_new >= 0 && rank3.size() < num_rank3; --need_new) {
        for (std::size_t c3 = 0; c3 < chains.size() && rank3.size() < num_rank3; ++c3) {
            if (taken[c3]) continue;
            const Path& p = chains[c3];
            const int fresh = !covered[p[0] * n + p[1]] + !covered[p[1] * n + p[2]];
            if (fresh < need_new) continue;
            taken[c3] = 1;
            covered[p[0] * n + p[1]] = covered[p[1] * n + p[2]] = 1;
            rank3.push_back(p);
        }
    }
    if (rank3.size() < num_rank3) {
        throw ParameterError("only " + std::to_string(rank3.size()) + " rank-3 paths fit on " +
                             std::to_string(num_legs) + " node pairs, " + std::to_string(num_rank3) +
                             " requested");
    }

    std::vector<Path> rank2;
    std::vector<Path> spare;
    for (auto [i, j] : all_pairs) {
        (covered[i * n + j] ? spare : rank2).push_back({i, j});
    }
    if (rank2.size() > num_rank2) {
        throw ParameterError("rank-3 fraction too high: " + std::to_string(rank2.size()) +
                             " node pairs need a rank-2 path but only " + std::to_string(num_rank2) +
                             " rank-2 paths are requested");
    }
    for (std::size_t k = 0; rank2.size() < num_rank2; ++k) rank2.push_back(spare[k]);

    std::vector<Path> paths = std::move(rank2);
    paths.insert(paths.end(), rank3.begin(), rank3.end());
    std::sort(paths.begin(), paths.end());
    rng.shuffle(paths.begin(), paths.end());
    return paths;
}

}  // namespace

ProblemInstance generate_instance(const GeneratorConfig& cfg, std::uint64_t seed) {
    check_generator(cfg);
    Rng time_rng(derive_seed(seed, "times"));
    Rng path_rng(derive_seed(seed, "paths"));
    Rng box_rng(derive_seed(seed, "boxes"));

    ProblemInstance inst;
    inst.n = cfg.n;
    inst.time = TimeMatrix(generate_times(cfg, time_rng));
    inst.window.t_max_s = cfg.window_s;

    const std::vector<Path> paths = generate_paths(cfg, path_rng);

    // Path popularity varies by an order of magnitude.
    std::vector<double> cumulative(paths.size());
    double w = 0.0;
    for (std::size_t p = 0; p < paths.size(); ++p) {
        w += log_uniform(box_rng, 1.0, 10.0);
        cumulative[p] = w;
    }

    std::vector<Box> boxes(cfg.num_boxes);
    for (std::size_t b = 0; b < cfg.num_boxes; ++b) {
        std::size_t p = b;
        if (b >= paths.size()) {
            const double u = box_rng.uniform01() * w;
            p = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                         cumulative.begin());
            p = std::min(p, paths.size() - 1);
        }
        boxes[b].path = paths[p];
        boxes[b].volume = log_uniform(box_rng, cfg.min_volume, cfg.max_volume);
    }
    box_rng.shuffle(boxes.begin(), boxes.end());
    for (std::size_t b = 0; b < boxes.size(); ++b) boxes[b].id = static_cast<BoxId>(b);
    inst.boxes = std::move(boxes);
    return inst;
}

void to_json(json& j, const ProblemInstance& inst) {
    json time = json::array();
    for (std::size_t i = 0; i < inst.n; ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < inst.n; ++k) row.push_back(inst.time(i, k));
        time.push_back(std::move(row));
    }
    json boxes = json::array();
    for (const Box& b : inst.boxes) {
        boxes.push_back({{"id", b.id}, {"volume", b.volume}, {"path", b.path}});
    }
    j = json{{"n", inst.n},
             {"time", std::move(time)},
             {"window_s", inst.window.t_max_s},
             {"capacity", inst.truck_capacity},
             {"boxes", std::move(boxes)}};
}

namespace {

const json& field(const json& obj, const char* name, const std::string& where) {
    if (!obj.is_object() || !obj.contains(name)) {
        throw ParseError(where + ": missing field '" + name + "'");
    }
    return obj.at(name);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected a number");
    return v.get<double>();
}

}  // namespace

ProblemInstance instance_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("instance: expected a JSON object");
    ProblemInstance inst;

    const json& n = field(j, "n", "instance");
    if (!is_index(n)) throw ParseError("n: expected a non-negative integer");
    inst.n = n.get<std::size_t>();

    const json& time = field(j, "time", "instance");
    if (!time.is_array() || time.size() != inst.n) {
        throw ParseError("time: expected " + std::to_string(inst.n) + " rows");
    }
    Matrix t(inst.n);
    for (std::size_t r = 0; r < inst.n; ++r) {
        const std::string where = "time[" + std::to_string(r) + "]";
        if (!time[r].is_array() || time[r].size() != inst.n) {
            throw ParseError(where + ": expected " + std::to_string(inst.n) + " entries");
        }
        for (std::size_t c = 0; c < inst.n; ++c) {
            t(r, c) = number(time[r][c], where + "[" + std::to_string(c) + "]");
        }
    }
    inst.time = TimeMatrix(std::move(t));

    inst.window.t_max_s = number(field(j, "window_s", "instance"), "window_s");
    inst.truck_capacity = j.contains("capacity") ? number(j.at("capacity"), "capacity") : 1.0;

    const json& boxes = field(j, "boxes", "instance");
    if (!boxes.is_array()) throw ParseError("boxes: expected an array");
    inst.boxes.reserve(boxes.size());
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const std::string where = "boxes[" + std::to_string(k) + "]";
        const json& b = boxes[k];
        Box box;
        const json& id = field(b, "id", where);
        if (!id.is_number_integer()) throw ParseError(where + ".id: expected an integer");
        box.id = id.get<BoxId>();
        box.volume = number(field(b, "volume", where), where + ".volume");
        const json& path = field(b, "path", where);
        if (!path.is_array()) throw ParseError(where + ".path: expected an array");
        for (const json& v : path) {
            if (!is_index(v)) throw ParseError(where + ".path: expected node indices");
            box.path.push_back(v.get<NodeId>());
        }
        inst.boxes.push_back(std::move(box));
    }
    inst.validate();
    return inst;
}

ProblemInstance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return instance_from_json(j);
}

void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << json(inst).dump() << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

TimeMatrix load_time_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError(path.string() + ": row " + std::to_string(rows.size()) +
                                 ": bad number '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) {
            throw ParseError(path.string() + ": row " + std::to_string(i) + " has " +
                             std::to_string(rows[i].size()) + " entries, expected " +
                             std::to_string(rows.size()));
        }
        for (std::size_t k = 0; k < rows.size(); ++k) m(i, k) = rows[i][k];
    }
    return TimeMatrix(std::move(m));
}

}  // namespace truckloop
