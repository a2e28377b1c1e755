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

#include "truckloop/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "truckloop/errors.hpp"
#include "truckloop/model.hpp"
#include "truckloop/simulate.hpp"
#include "truckloop/truck_loop.hpp"

namespace truckloop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

struct GenArgs {
    std::uint64_t seed = 0;
    std::string out = "instance.json";
    GeneratorConfig cfg;
    bool asymmetric = false;
    std::string time_csv;
};

struct SolveArgs {
    std::uint64_t seed = 0;
    std::string instance;
    std::string out = ".";
    std::string profile = "sa";
    std::string params_file;
    std::optional<std::size_t> tau, delta_max, max_trucks, steps, restarts;
    std::optional<double> a_local, a_demand, a_time, a_nonredundant, threshold, cutoff;
    std::optional<std::string> solver;
};

struct SimulateArgs {
    std::uint64_t seed = 0;
    std::string instance;
    std::string plan;
    std::string out = ".";
    std::size_t rounds = 5;
    std::optional<std::size_t> keep_trucks;
    std::string pickup_order = "id";
};

struct ReportArgs {
    std::vector<std::string> reports;
    std::string out;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump() + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string percent(double fraction) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * fraction << '%';
    return s.str();
}

void cmd_gen(const GenArgs& a, std::ostream& out) {
    GeneratorConfig cfg = a.cfg;
    cfg.symmetric = !a.asymmetric;
    ProblemInstance inst = generate_instance(cfg, a.seed);
    if (!a.time_csv.empty()) {
        TimeMatrix t = load_time_matrix_csv(a.time_csv);
        if (t.size() != inst.n) {
            throw ValidationError("time matrix has " + std::to_string(t.size()) + " nodes, instance has " +
                                  std::to_string(inst.n));
        }
        inst.time = std::move(t);
    }
    save_instance(inst, a.out);
    const std::size_t paths = group_boxes(inst.boxes).size();
    out << "n=" << inst.n << " boxes=" << inst.boxes.size() << " paths=" << paths
        << " total_volume=" << inst.total_volume() << " -> " << a.out << '\n';
}

LoopConfig loop_config(const SolveArgs& a) {
    LoopConfig cfg = a.profile == "external" ? LoopConfig::external_profile() : LoopConfig::sa_profile();
    if (!a.params_file.empty()) {
        const std::size_t tau = cfg.params.tau;
        cfg.params = PuboParams{};
        cfg.params.tau = tau;
        from_json(read_json(a.params_file), cfg.params);
    }
    if (a.tau) cfg.params.tau = *a.tau;
    if (a.delta_max) cfg.params.delta_max = *a.delta_max;
    if (a.a_local) cfg.params.a_local = *a.a_local;
    if (a.a_demand) cfg.params.a_demand = *a.a_demand;
    if (a.a_time) cfg.params.a_time = *a.a_time;
    if (a.a_nonredundant) cfg.params.a_nonredundant = *a.a_nonredundant;
    if (a.threshold) cfg.params.redundancy_threshold = *a.threshold;
    if (a.cutoff) cfg.demand_cutoff = *a.cutoff;
    if (a.max_trucks) cfg.max_trucks = *a.max_trucks;
    if (a.solver) cfg.solver_name = *a.solver;
    if (a.steps) cfg.solver_cfg.schedule.num_steps = *a.steps;
    if (a.restarts) cfg.solver_cfg.num_restarts = static_cast<std::uint32_t>(*a.restarts);
    cfg.solver_cfg.seed = derive_seed(a.seed, "solve");
    return cfg;
}

void cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
    const ProblemInstance inst = load_instance(a.instance);
    LoopConfig cfg = loop_config(a);
    cfg.window = inst.window;
    cfg.capacity = inst.truck_capacity;

    const RoutePlan plan = run_truck_loop(overall_demand(inst), inst.time, cfg);
    const fs::path dir(a.out);
    ensure_dir(dir);
    save_plan(plan, dir / "plan.json");
    std::ostringstream csv;
    write_truck_log_csv(plan, csv);
    write_text(dir / "trucks.csv", csv.str());

    double estimated = 0.0;
    for (double e : plan.estimated) estimated += e;
    if (plan.stalled) {
        err << "warning: stopped after " << kMaxIdleTrucks << " consecutive trucks found no demand\n";
    }
    out << "trucks=" << plan.routes.size() << " estimated=" << estimated
        << " residual_max=" << plan.residual.max() << " residual_sum=" << plan.residual.sum() << " -> "
        << (dir / "plan.json").string() << '\n';
}

void check_plan(const RoutePlan& plan, const ProblemInstance& inst) {
    std::vector<std::string> bad;
    for (std::size_t m = 0; m < plan.routes.size(); ++m) {
        const auto& nodes = plan.routes[m].nodes;
        const bool ok = !nodes.empty() &&
                        std::all_of(nodes.begin(), nodes.end(), [&](NodeId v) { return v < inst.n; });
        if (!ok) bad.push_back(std::to_string(m));
    }
    if (bad.empty()) return;
    std::string list;
    for (const std::string& b : bad) list += (list.empty() ? "" : ",") + b;
    throw ValidationError("plan has invalid routes: " + list);
}

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const ProblemInstance inst = load_instance(a.instance);
    RoutePlan plan = load_plan(a.plan);
    check_plan(plan, inst);
    if (a.keep_trucks && plan.routes.size() > *a.keep_trucks) plan.routes.resize(*a.keep_trucks);

    SimOptions opt;
    opt.order = a.pickup_order == "shuffle" ? PickupOrder::shuffled : PickupOrder::ascending_id;
    opt.shuffle_seed = derive_seed(a.seed, "simulate");
    const CorrectionResult res = correct_routes(inst, plan.routes, a.rounds, opt);

    const fs::path dir(a.out);
    ensure_dir(dir);
    write_json(dir / "report.json", json(res.report));
    RoutePlan corrected;
    corrected.routes = res.routes;
    write_json(dir / "routes.json", json(corrected));
    std::ostringstream events;
    write_event_log(res.report.event_log, events);
    write_text(dir / "events.jsonl", events.str());
    write_json(dir / "itineraries.json", itineraries(res.report));

    if (!res.report.violations.empty()) {
        throw ValidationError(std::to_string(res.report.violations.size()) +
                              " simulation violations, first: " + res.report.violations.front());
    }
    out << "satisfied_volume=" << percent(res.report.satisfied_volume_fraction)
        << " before_correction=" << percent(res.initial_fraction)
        << " satisfied_boxes=" << percent(res.report.satisfied_box_fraction)
        << " trucks=" << res.report.truck_count << " accepted_rounds=" << res.accepted_rounds << " -> "
        << (dir / "report.json").string() << '\n';
}

struct ReportRow {
    std::string name;
    SimReport report;
    std::map<std::pair<NodeId, NodeId>, std::size_t> edges;
};

void cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<ReportRow> rows;
    for (const std::string& path : a.reports) {
        ReportRow row{path, report_from_json(read_json(path)), {}};
        std::map<std::size_t, NodeId> last;
        for (const SimEvent& e : row.report.event_log) {
            if (e.kind != EventKind::arrive) continue;
            if (auto it = last.find(e.truck); it != last.end() && it->second != e.node) {
                ++row.edges[{it->second, e.node}];
            }
            last[e.truck] = e.node;
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& x, const ReportRow& y) {
        return x.report.satisfied_volume_fraction > y.report.satisfied_volume_fraction;
    });

    std::ostringstream csv;
    csv << std::setprecision(17) << "run,satisfied_volume_fraction,satisfied_box_fraction,trucks,total_drive_time_s,edges\n";
    std::ostringstream edges;
    edges << "run,from,to,drives\n";
    for (const ReportRow& r : rows) {
        csv << r.name << ',' << r.report.satisfied_volume_fraction << ',' << r.report.satisfied_box_fraction << ','
            << r.report.truck_count << ',' << r.report.total_drive_time_s << ',' << r.edges.size() << '\n';
        for (const auto& [e, count] : r.edges) edges << r.name << ',' << e.first << ',' << e.second << ',' << count << '\n';
    }

    out << std::left << std::setw(40) << "run" << std::right << std::setw(12) << "satisfied" << std::setw(8)
        << "trucks" << std::setw(14) << "drive_h" << std::setw(8) << "edges" << '\n';
    for (const ReportRow& r : rows) {
        out << std::left << std::setw(40) << r.name << std::right << std::setw(12)
            << percent(r.report.satisfied_volume_fraction) << std::setw(8) << r.report.truck_count << std::setw(14)
            << std::fixed << std::setprecision(1) << r.report.total_drive_time_s / 3600.0 << std::setw(8)
            << r.edges.size() << '\n';
        out.unsetf(std::ios::floatfield);
    }
    if (!a.out.empty()) {
        const fs::path dir(a.out);
        ensure_dir(dir);
        write_text(dir / "runs.csv", csv.str());
        write_text(dir / "edges.csv", edges.str());
    } else {
        out << '\n' << csv.str();
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Truck routing through per-truck binary optimization"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic instance");
    g->add_option("--seed", gen.seed, "Root seed");
    g->add_option("--out", gen.out, "Instance file to write")->capture_default_str();
    g->add_option("--n", gen.cfg.n, "Node count")->capture_default_str();
    g->add_option("--boxes", gen.cfg.num_boxes, "Box count")->capture_default_str();
    g->add_option("--paths", gen.cfg.num_paths, "Distinct box paths")->capture_default_str();
    g->add_option("--rank3-fraction", gen.cfg.rank3_fraction, "Share of paths with an intermediate stop")
        ->capture_default_str();
    g->add_option("--window", gen.cfg.window_s, "Driving window in seconds")->capture_default_str();
    g->add_option("--min-time", gen.cfg.min_time_s, "Shortest driving time in seconds")->capture_default_str();
    g->add_option("--max-time", gen.cfg.max_time_s, "Longest driving time in seconds")->capture_default_str();
    g->add_flag("--asymmetric", gen.asymmetric, "Perturb the two directions of each pair independently");
    g->add_option("--time-csv", gen.time_csv, "Use this CSV time matrix instead of generated times");

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Assign truck routes one truck at a time");
    s->add_option("--seed", solve.seed, "Root seed");
    s->add_option("--instance", solve.instance, "Instance file")->required();
    s->add_option("--out", solve.out, "Output directory")->capture_default_str();
    s->add_option("--profile", solve.profile, "sa (tau 15) or external (tau 5)")
        ->check(CLI::IsMember({"sa", "external"}))
        ->capture_default_str();
    s->add_option("--params", solve.params_file, "JSON file with PUBO parameters");
    s->add_option("--tau", solve.tau, "Time steps per truck");
    s->add_option("--delta-max", solve.delta_max, "Longest look-ahead of the demand term");
    s->add_option("--a-local", solve.a_local, "Locality coefficient");
    s->add_option("--a-demand", solve.a_demand, "Demand coefficient");
    s->add_option("--a-time", solve.a_time, "Time coefficient");
    s->add_option("--a-nonredundant", solve.a_nonredundant, "Repeat-penalty coefficient");
    s->add_option("--threshold", solve.threshold, "Demand at or below which repeats are penalized");
    s->add_option("--cutoff", solve.cutoff, "Stop once all demand is below this (default 0.0005)");
    s->add_option("--max-trucks", solve.max_trucks, "Truck budget (default 200)");
    s->add_option("--solver", solve.solver, "Solver name: sa, brute, external");
    s->add_option("--steps", solve.steps, "Annealing steps per restart");
    s->add_option("--restarts", solve.restarts, "Annealing restarts");

    SimulateArgs sim;
    auto* m = app.add_subcommand("simulate", "Simulate a plan box by box and correct idle tails");
    m->add_option("--seed", sim.seed, "Root seed");
    m->add_option("--instance", sim.instance, "Instance file")->required();
    m->add_option("--plan", sim.plan, "Plan file from solve")->required();
    m->add_option("--out", sim.out, "Output directory")->capture_default_str();
    m->add_option("--rounds", sim.rounds, "Correction rounds")->capture_default_str();
    m->add_option("--keep-trucks", sim.keep_trucks, "Use only the first N routes");
    m->add_option("--pickup-order", sim.pickup_order, "id or shuffle")
        ->check(CLI::IsMember({"id", "shuffle"}))
        ->capture_default_str();

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Compare simulation reports");
    r->add_option("reports", rep.reports, "report.json files")->required();
    r->add_option("--out", rep.out, "Directory for runs.csv and edges.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error[usage]: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        if (*g) cmd_gen(gen, out);
        if (*s) cmd_solve(solve, out, err);
        if (*m) cmd_simulate(sim, out);
        if (*r) cmd_report(rep, out);
    } catch (const Error& e) {
        err << "error[" << e.code() << "]: " << one_line(e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error[internal]: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}

}  // namespace truckloop
