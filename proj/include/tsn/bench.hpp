#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsn/adjust.hpp"
#include "tsn/model.hpp"

namespace tsn {

enum class TopoKind { Sae, Afdx, Ladder };

const char* topo_name(TopoKind k);
std::optional<TopoKind> topo_from_name(const std::string& s);

struct TopoParams {
    int ladder_k = 4;           // switches per rail
    int es_per_switch = -1;     // -1 = kind default (SAE 3, AFDX 4, Ladder 1)
    std::int64_t rate_bps = 1'000'000'000;
};

// Deterministic parametric topologies. SAE: 5-switch ring with two chords;
// AFDX: two fully meshed 4-switch groups joined pairwise; Ladder: two rails
// of k switches with rungs.
Network gen_topology(TopoKind kind, const TopoParams& params);

struct FlowGenParams {
    int count = 100;
    // Class mix in per-mille: TT, AVB-A, AVB-B, BE. Must sum to 1000.
    std::array<int, 4> mix_permille = {100, 500, 250, 150};
    std::vector<Ns> periods = {500 * kMicro, 1 * kMilli, 2 * kMilli, 4 * kMilli, 8 * kMilli};
    int size_b = 1500;
    // Deadline drawn uniformly from [period/2, period].
};

std::vector<Flow> gen_flows(const Network& net, const FlowGenParams& params, std::uint64_t seed);

// Sum over scheduled flows and their route links of wire-time / period.
// `.first` is the raw sum, `.second` the per-link average.
std::pair<double, double> nominal_utilization(const Solution& solution,
                                              const std::vector<Flow>& flows, const Network& net,
                                              const Config& cfg);

struct BenchConfig {
    std::vector<TopoKind> topologies = {TopoKind::Sae, TopoKind::Afdx, TopoKind::Ladder};
    TopoParams topo_params;
    std::vector<int> flow_counts = {50, 100, 200, 300};
    std::vector<Algo> algos = {Algo::Static, Algo::Upgrade, Algo::Proposed};
    std::uint64_t seed_base = 1;
    int seed_count = 5;
    FlowGenParams flow_params;
    Config net_config;
    int jobs = 1;     // worker threads inside one orchestrate call
    int workers = 1;  // concurrent benchmark instances
};

BenchConfig bench_config_from_toml(const std::string& text);

struct BenchRow {
    std::string topology;
    int flow_count = 0;
    std::string algo;
    std::uint64_t seed = 0;
    int scheduled = 0;
    int total = 0;
    double success_rate = 0;
    double util_raw = 0;
    double util_per_link = 0;
    std::int64_t wall_ms = 0;
    int tt = 0, avb_a = 0, avb_b = 0, be = 0;  // scheduled per assigned class
    std::string status = "ok";
};

std::vector<BenchRow> run_bench(const BenchConfig& cfg);

std::string bench_rows_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> bench_rows_from_csv(const std::string& text);

// Mean success rate per (topology, flow count, algorithm), CSV formatted.
std::string bench_summary_csv(const std::vector<BenchRow>& rows);
std::string bench_summary_table(const std::vector<BenchRow>& rows);

// Success-rate-vs-flow-count line chart per topology.
std::string bench_plot_svg(const std::vector<BenchRow>& rows, const std::string& topology);

} // namespace tsn
