#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "tsn/errors.hpp"
#include "tsn/sim.hpp"

using namespace tsn;
using namespace tsn_test;

namespace {

Config sim_config() {
    Config cfg;
    cfg.frame_overhead = false;
    cfg.slope_a_pct = 50;
    cfg.slope_b_pct = 25;
    return cfg;
}

SimResult run(const Network& net, const std::vector<Flow>& flows, const Solution& sol,
              const Config& cfg, SimOptions opts) {
    return simulate(net, flows, sol.classes, sol.schedule, emit_gcl(sol.schedule, net), cfg,
                    opts);
}

} // namespace

TEST_CASE("lone TT flow arrives exactly at its analytic bound") {
    Network net = chain_net(1, 2);
    Config cfg = sim_config();
    cfg.tt_guard_pad = false;  // no hold-over slack, observed == bound
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, kMilli, kMilli, PriorityClass::TT)};
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    REQUIRE(sol.objective == 1);
    SimOptions opts;
    opts.horizon = 3;
    SimResult res = run(net, flows, sol, cfg, opts);
    CHECK(res.per_flow.at(0).max_delay == *sol.flows[0].rt);
    CHECK(res.per_flow.at(0).deadline_misses == 0);
    CHECK(res.frames_stranded == 0);
}

TEST_CASE("lone AVB flow sees pure wire time under the bound") {
    Network net = chain_net(1, 2);
    Config cfg = sim_config();
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, kMilli, kMilli, PriorityClass::AvbA)};
    Solution sol = orchestrate(net, flows, cfg, Algo::Static);
    SimOptions opts;
    opts.horizon = 3;
    SimResult res = run(net, flows, sol, cfg, opts);
    CHECK(res.per_flow.at(0).max_delay == 2 * 12'000);
    CHECK(res.per_flow.at(0).max_delay <= *sol.flows[0].rt);
}

TEST_CASE("synchronized overload stays under the analytic bounds") {
    Config cfg;
    Rng rng(404);
    for (int trial = 0; trial < 6; ++trial) {
        Network net = chain_net(2, 2, 100'000'000);
        auto flows = random_small_instance(net, 6, 2, 1, rng);
        Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
        std::vector<Flow> admitted;
        for (const SolutionFlow& sf : sol.flows) {
            if (sf.scheduled) {
                admitted.push_back(flows[static_cast<size_t>(sf.id)]);
            }
        }
        SimOptions opts;
        opts.horizon = 10;
        SimResult res = simulate(net, admitted, sol.classes, sol.schedule,
                                 emit_gcl(sol.schedule, net), cfg, opts);
        CHECK(res.frames_stranded == 0);
        CHECK(res.credits_neutral);
        for (const SolutionFlow& sf : sol.flows) {
            if (!sf.scheduled || !sf.rt) {
                continue;
            }
            CHECK(res.per_flow.at(sf.id).max_delay <= *sf.rt);
            CHECK(res.per_flow.at(sf.id).deadline_misses == 0);
        }
    }
}

TEST_CASE("random release phases stay under the bounds as well") {
    Config cfg;
    Rng rng(808);
    Network net = chain_net(2, 2, 100'000'000);
    auto flows = random_small_instance(net, 6, 1, 1, rng);
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    std::vector<Flow> admitted;
    for (const SolutionFlow& sf : sol.flows) {
        if (sf.scheduled) {
            admitted.push_back(flows[static_cast<size_t>(sf.id)]);
        }
    }
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        SimOptions opts;
        opts.horizon = 10;
        opts.seed = seed;
        opts.random_phase = true;
        SimResult res = simulate(net, admitted, sol.classes, sol.schedule,
                                 emit_gcl(sol.schedule, net), cfg, opts);
        for (const SolutionFlow& sf : sol.flows) {
            if (sf.scheduled && sf.rt) {
                CHECK(res.per_flow.at(sf.id).max_delay <= *sf.rt);
            }
        }
    }
}

TEST_CASE("frame conservation and credit neutrality") {
    Config cfg;
    Rng rng(7);
    Network net = chain_net(2, 2);
    auto flows = random_small_instance(net, 8, 2, 2, rng);
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    std::vector<Flow> admitted;
    for (const SolutionFlow& sf : sol.flows) {
        if (sf.scheduled) {
            admitted.push_back(flows[static_cast<size_t>(sf.id)]);
        }
    }
    SimOptions opts;
    opts.horizon = 5;
    SimResult res = simulate(net, admitted, sol.classes, sol.schedule,
                             emit_gcl(sol.schedule, net), cfg, opts);
    CHECK(res.frames_released == res.frames_delivered);
    CHECK(res.frames_stranded == 0);
    CHECK(res.credits_neutral);
    std::int64_t per_flow_released = 0;
    for (const auto& [id, st] : res.per_flow) {
        per_flow_released += st.released;
        CHECK(st.released == st.delivered);
    }
    CHECK(per_flow_released == res.frames_released);
}

TEST_CASE("identical inputs and seed give identical runs") {
    Config cfg;
    Rng rng(99);
    Network net = chain_net(2, 2);
    auto flows = random_small_instance(net, 6, 2, 2, rng);
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    SimOptions opts;
    opts.horizon = 4;
    opts.seed = 21;
    opts.random_phase = true;
    opts.collect_trace = true;
    SimResult a = run(net, flows, sol, cfg, opts);
    SimResult b = run(net, flows, sol, cfg, opts);
    CHECK(a.trace_csv == b.trace_csv);
    CHECK(sim_result_json(a, flows) == sim_result_json(b, flows));
}

TEST_CASE("replay of a valid schedule is clean") {
    Config cfg;
    Rng rng(15);
    Network net = chain_net(2, 2);
    auto flows = random_small_instance(net, 4, 4, 0, rng);
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    CHECK(replay_check(net, flows, sol.classes, sol.schedule, emit_gcl(sol.schedule, net), cfg)
              .empty());
}

TEST_CASE("a shrunk reservation is caught by the replay") {
    Config cfg;
    Network net = chain_net(1, 2);
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, kMilli, kMilli, PriorityClass::TT)};
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    REQUIRE(sol.objective == 1);

    // Rebuild the schedule with every window of flow 0 cut short: the frame
    // still needs its full wire time, so the replay must flag it.
    TtSchedule tampered(sol.schedule.hyperperiod(), net.link_count());
    FlowPlacement p = sol.schedule.placement(0);
    for (auto& len : p.window_len) {
        len -= 2'000;
    }
    const Flow& f = flows[0];
    for (size_t h = 0; h < f.route.size(); ++h) {
        for (std::int64_t k = 0; k < tampered.hyperperiod() / f.period; ++k) {
            Reservation r;
            r.link = f.route[h];
            r.flow = 0;
            r.instance = static_cast<int>(k);
            r.start = k * f.period + p.window_start[h];
            r.len = p.window_len[h];
            r.tt_queue = p.queue[h];
            r.queue_arrival = k * f.period + p.arrival[h];
            tampered.insert(r);
        }
    }
    tampered.set_placement(0, p);
    auto violations =
        replay_check(net, flows, sol.classes, tampered, emit_gcl(tampered, net), cfg);
    CHECK_FALSE(violations.empty());
}

TEST_CASE("disabling the guard pad exposes hold-over lateness") {
    Network net = chain_net(1, 2);
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, 500 * kMicro, 500 * kMicro, PriorityClass::TT)};

    auto run_with = [&](bool pad) {
        Config cfg = sim_config();
        cfg.tt_guard_pad = pad;
        Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
        REQUIRE(sol.objective == 1);
        SimOptions opts;
        opts.horizon = 10;
        opts.seed = 4;
        opts.be_poisson_load = 0.6;  // busy preemptable traffic under the windows
        SimResult res = run(net, flows, sol, cfg, opts);
        return check_tt_containment(res, sol.schedule, flows);
    };
    CHECK_FALSE(run_with(false).empty());
    CHECK(run_with(true).empty());
}

TEST_CASE("malformed gate lists are rejected") {
    Network net = chain_net(1, 2);
    CHECK_THROWS_AS(gcl_from_json_text("[{\"port\":\"es100->sw0\",\"entries\":["
                                       "{\"t_ns\":5,\"gates\":\"00111111\"}]}]",
                                       net, kMilli),
                    ConfigError);  // no entry at t=0
    CHECK_THROWS_AS(gcl_from_json_text("[{\"port\":\"es100->sw0\",\"entries\":["
                                       "{\"t_ns\":0,\"gates\":\"00111111\"},"
                                       "{\"t_ns\":0,\"gates\":\"10000000\"}]}]",
                                       net, kMilli),
                    ConfigError);  // duplicate time, conflicting states
    CHECK_THROWS_AS(gcl_from_json_text("[{\"port\":\"nosuch\",\"entries\":[]}]", net, kMilli),
                    ConfigError);
}

TEST_CASE("gate list JSON round trips through the parser") {
    Config cfg;
    Rng rng(61);
    Network net = chain_net(2, 2);
    auto flows = random_small_instance(net, 4, 3, 0, rng);
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    auto gcls = emit_gcl(sol.schedule, net);
    auto parsed = gcl_from_json_text(gcl_to_json_text(gcls, net), net, sol.schedule.hyperperiod());
    REQUIRE(parsed.size() == gcls.size());
    for (size_t i = 0; i < gcls.size(); ++i) {
        REQUIRE(parsed[i].entries.size() == gcls[i].entries.size());
        for (size_t j = 0; j < gcls[i].entries.size(); ++j) {
            CHECK(parsed[i].entries[j].t == gcls[i].entries[j].t);
            CHECK(parsed[i].entries[j].gates == gcls[i].entries[j].gates);
        }
    }
}
