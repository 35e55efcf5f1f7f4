#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "tsn/adjust.hpp"
#include "tsn/bench.hpp"
#include "tsn/errors.hpp"
#include "tsn/json_io.hpp"
#include "tsn/sim.hpp"

namespace fs = std::filesystem;
using namespace tsn;

namespace {

void add_config_flags(CLI::App* cmd, Config& cfg) {
    cmd->add_flag("--no-overhead{false}", cfg.frame_overhead,
                  "exclude the 20 B preamble+IPG from wire times");
    cmd->add_flag("--no-preemption{false}", cfg.preemption, "disable frame preemption");
    cmd->add_flag("--no-pad{false}", cfg.tt_guard_pad, "disable the TT window guard pad");
    cmd->add_option("--slope-a", cfg.slope_a_pct, "class-A idle slope, percent of rate");
    cmd->add_option("--slope-b", cfg.slope_b_pct, "class-B idle slope, percent of rate");
}

int run(int argc, char** argv) {
    CLI::App app{"Mixed-criticality TSN flow scheduler"};
    app.require_subcommand(1);

    // gen-topo
    auto* topo = app.add_subcommand("gen-topo", "emit a benchmark topology as JSON");
    std::string topo_kind = "ladder";
    TopoParams topo_params;
    std::string topo_out = "net.json";
    topo->add_option("--kind", topo_kind, "sae | afdx | ladder")->required();
    topo->add_option("--k", topo_params.ladder_k, "ladder: switches per rail");
    topo->add_option("--es-per-switch", topo_params.es_per_switch, "end stations per switch");
    topo->add_option("--rate-bps", topo_params.rate_bps, "link rate in bit/s");
    topo->add_option("-o,--out", topo_out, "output file")->required();

    // gen-flows
    auto* gf = app.add_subcommand("gen-flows", "generate a random flow set");
    std::string gf_net;
    FlowGenParams gf_params;
    std::uint64_t gf_seed = 1;
    std::string gf_out = "flows.json";
    std::vector<int> gf_mix;
    gf->add_option("--net", gf_net, "network JSON")->required();
    gf->add_option("-n,--count", gf_params.count, "number of flows")->required();
    gf->add_option("--seed", gf_seed, "generator seed");
    gf->add_option("--mix", gf_mix, "class mix per-mille: TT A B BE")->expected(4);
    gf->add_option("-o,--out", gf_out, "output file")->required();

    // schedule
    auto* sc = app.add_subcommand("schedule", "assign priorities and synthesize TT offsets");
    std::string sc_net, sc_flows, sc_algo = "proposed";
    std::string sc_out = "solution.json";
    std::string sc_gcl, sc_rta, sc_dot;
    int sc_jobs = 1;
    Config sc_cfg;
    sc->add_option("--net", sc_net, "network JSON")->required();
    sc->add_option("--flows", sc_flows, "flow set JSON")->required();
    sc->add_option("--algo", sc_algo, "proposed | static | upgrade");
    sc->add_option("-o,--out", sc_out, "solution JSON output")->required();
    sc->add_option("--gcl", sc_gcl, "also write the gate control lists");
    sc->add_option("--rta", sc_rta, "also write the per-flow delay report CSV");
    sc->add_option("--fg-dot", sc_dot, "dump the FG-conflict graph as DOT");
    sc->add_option("--jobs", sc_jobs, "worker threads over conflict components");
    add_config_flags(sc, sc_cfg);

    // simulate
    auto* si = app.add_subcommand("simulate", "replay a solution in the event simulator");
    std::string si_net, si_flows, si_solution, si_out, si_trace;
    std::string si_release = "sync";
    int si_horizon = 10;
    std::uint64_t si_seed = 1;
    double si_be_load = 0.0;
    Config si_cfg;
    si->add_option("--net", si_net, "network JSON")->required();
    si->add_option("--flows", si_flows, "flow set JSON")->required();
    si->add_option("--solution", si_solution, "solution JSON")->required();
    si->add_option("--horizon", si_horizon, "hyperperiods of releases");
    si->add_option("--seed", si_seed, "seed for randomized phases");
    si->add_option("--release", si_release, "sync | random");
    si->add_option("--be-load", si_be_load, "Poisson BE background load per ES uplink");
    si->add_option("--trace", si_trace, "write an event trace CSV");
    si->add_option("-o,--out", si_out, "simulation report JSON");
    add_config_flags(si, si_cfg);

    // bench
    auto* be = app.add_subcommand("bench", "run the benchmark matrix");
    std::string be_config, be_out = "results";
    be->add_option("--config", be_config, "bench TOML config");
    be->add_option("-o,--out", be_out, "output directory")->required();

    // report
    auto* re = app.add_subcommand("report", "aggregate benchmark results");
    std::string re_in = "results";
    bool re_plots = false;
    re->add_option("--in", re_in, "results directory")->required();
    re->add_flag("--plots", re_plots, "emit SVG charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (topo->parsed()) {
        auto kind = topo_from_name(topo_kind);
        if (!kind) {
            throw ArgumentError("unknown topology kind: " + topo_kind);
        }
        write_file(topo_out, network_to_json_text(gen_topology(*kind, topo_params)));
        return 0;
    }

    if (gf->parsed()) {
        const Network net = network_from_json_text(read_file(gf_net));
        if (!gf_mix.empty()) {
            for (size_t i = 0; i < 4; ++i) {
                gf_params.mix_permille[i] = gf_mix[i];
            }
        }
        write_file(gf_out, flows_to_json_text(gen_flows(net, gf_params, gf_seed)));
        return 0;
    }

    if (sc->parsed()) {
        const Network net = network_from_json_text(read_file(sc_net));
        const std::vector<Flow> flows = flows_from_json_text(read_file(sc_flows), net);
        auto algo = algo_from_name(sc_algo);
        if (!algo) {
            throw ArgumentError("unknown algorithm: " + sc_algo);
        }
        const Solution sol = orchestrate(net, flows, sc_cfg, *algo, sc_jobs);
        write_file(sc_out, solution_to_json_text(sol, net, flows));
        if (!sc_gcl.empty()) {
            write_file(sc_gcl, gcl_to_json_text(emit_gcl(sol.schedule, net), net));
        }
        if (!sc_rta.empty()) {
            write_file(sc_rta, rta_report_csv(sol.rta, flows));
        }
        if (!sc_dot.empty()) {
            std::vector<Flow> non_be;
            for (const Flow& f : flows) {
                if (f.static_prio != PriorityClass::BE) {
                    non_be.push_back(f);
                }
            }
            auto groups = group_flows(non_be);
            std::vector<std::int64_t> counts;
            for (const auto& g : groups) {
                counts.push_back(static_cast<std::int64_t>(g.members.size()));
            }
            write_file(sc_dot, conflict_graph_dot(net, build_conflict_graph(groups, counts)));
        }
        std::cout << "objective " << sol.objective << " of " << flows.size() << "\n";
        return 0;
    }

    if (si->parsed()) {
        const Network net = network_from_json_text(read_file(si_net));
        const std::vector<Flow> flows = flows_from_json_text(read_file(si_flows), net);
        const LoadedSolution ls = solution_from_json_text(read_file(si_solution), net, flows);
        // Admission control: only flows the solution accepted are injected.
        std::vector<Flow> admitted;
        for (const Flow& f : flows) {
            auto it = ls.scheduled.find(f.id);
            if (it != ls.scheduled.end() && it->second) {
                admitted.push_back(f);
            }
        }
        SimOptions opts;
        opts.horizon = si_horizon;
        opts.seed = si_seed;
        opts.random_phase = si_release == "random";
        opts.collect_trace = !si_trace.empty();
        opts.be_poisson_load = si_be_load;
        const auto gcls = emit_gcl(ls.schedule, net);
        const SimResult res = simulate(net, admitted, ls.classes, ls.schedule, gcls, si_cfg, opts);
        const std::string text = sim_result_json(res, flows);
        if (si_out.empty()) {
            std::cout << text;
        } else {
            write_file(si_out, text);
        }
        if (!si_trace.empty()) {
            write_file(si_trace, res.trace_csv);
        }
        return 0;
    }

    if (be->parsed()) {
        BenchConfig cfg;
        if (!be_config.empty()) {
            cfg = bench_config_from_toml(read_file(be_config));
        }
        fs::create_directories(be_out);
        const auto rows = run_bench(cfg);
        write_file((fs::path(be_out) / "results.csv").string(), bench_rows_csv(rows));
        std::cout << bench_summary_table(rows);
        return 0;
    }

    if (re->parsed()) {
        const auto rows =
            bench_rows_from_csv(read_file((fs::path(re_in) / "results.csv").string()));
        write_file((fs::path(re_in) / "summary.csv").string(), bench_summary_csv(rows));
        std::cout << bench_summary_table(rows);
        if (re_plots) {
            fs::create_directories(fs::path(re_in) / "plots");
            std::set<std::string> topos;
            for (const auto& r : rows) {
                topos.insert(r.topology);
            }
            for (const auto& t : topos) {
                write_file((fs::path(re_in) / "plots" / (t + ".svg")).string(),
                           bench_plot_svg(rows, t));
            }
        }
        return 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
