#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "tsn/adjust.hpp"
#include "tsn/json_io.hpp"

using namespace tsn;
using namespace tsn_test;

namespace {

Network direct_pair() {
    std::vector<Node> nodes = {{100, NodeKind::EndStation}, {101, NodeKind::EndStation}};
    std::vector<Link> links = {{100, 101, 1'000'000'000, 0, 0},
                               {101, 100, 1'000'000'000, 0, 0}};
    return Network(nodes, links);
}

Config test_config() {
    Config cfg;
    cfg.frame_overhead = false;
    cfg.slope_a_pct = 50;
    cfg.slope_b_pct = 25;
    return cfg;
}

} // namespace

TEST_CASE("estimation keeps everything under loose deadlines") {
    Network net = direct_pair();
    Config cfg = test_config();
    std::vector<Flow> flows;
    for (int i = 0; i < 5; ++i) {
        flows.push_back(make_flow(net, i, 100, 101, kMilli, kMilli, PriorityClass::AvbA));
    }
    TtSchedule sched(kMilli, net.link_count());
    std::map<int, PriorityClass> cls;
    for (const Flow& f : flows) {
        cls[f.id] = PriorityClass::AvbA;
    }
    RtaContext ctx(net, flows, cls, sched, cfg);
    auto res = estimate_schedulable({0, 1, 2, 3, 4}, ctx);
    CHECK(res.count() == 5);
    CHECK(res.drops.empty());
}

TEST_CASE("estimation drops a lone hopeless flow") {
    Network net = direct_pair();
    Config cfg = test_config();
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, kMilli, 13'000, PriorityClass::AvbA)};
    TtSchedule sched(kMilli, net.link_count());
    RtaContext ctx(net, flows, {{0, PriorityClass::AvbA}}, sched, cfg);
    auto res = estimate_schedulable({0}, ctx);
    CHECK(res.count() == 0);
    REQUIRE(res.drops.size() == 1);
    CHECK(res.drops[0].flow == 0);
}

TEST_CASE("estimation trace on three equal flows") {
    // RT(3) = 67056 violates only the 50 us deadline; RT(2) = 40704 fits the
    // new head, so exactly one drop.
    Network net = direct_pair();
    Config cfg = test_config();
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, kMilli, 50'000, PriorityClass::AvbA),
        make_flow(net, 1, 100, 101, kMilli, 68'000, PriorityClass::AvbA),
        make_flow(net, 2, 100, 101, kMilli, 70'000, PriorityClass::AvbA)};
    TtSchedule sched(kMilli, net.link_count());
    std::map<int, PriorityClass> cls;
    for (const Flow& f : flows) {
        cls[f.id] = PriorityClass::AvbA;
    }
    RtaContext ctx(net, flows, cls, sched, cfg);

    // Probe trio with roomy deadlines pins the exact set bounds.
    std::vector<Flow> probe = flows;
    for (Flow& f : probe) {
        f.ddl = kMilli;
    }
    RtaContext probe_ctx(net, probe, cls, sched, cfg);
    auto rt3 = probe_ctx.rt_of_set({0, 1, 2});
    REQUIRE(rt3.has_value());
    CHECK(*rt3 == 67'056);
    auto rt2 = probe_ctx.rt_of_set({1, 2});
    REQUIRE(rt2.has_value());
    CHECK(*rt2 == 40'704);

    // On the real deadlines the set bound escapes the 50 us head, so the
    // estimate drops exactly that flow.
    CHECK_FALSE(ctx.rt_of_set({0, 1, 2}).has_value());
    auto res = estimate_schedulable({0, 1, 2}, ctx);
    CHECK(res.count() == 2);
    REQUIRE(res.drops.size() == 1);
    CHECK(res.drops[0].flow == 0);
    CHECK(res.kept == std::vector<int>{1, 2});
    // Guard trace: the survivors' head covers the set bound, the dropped
    // flow's deadline did not cover the bound at its drop point.
    CHECK(flows[1].ddl >= *ctx.rt_of_set(res.kept));
    CHECK(flows[0].ddl < *rt3);
}

TEST_CASE("pure static TT component schedules by ASAP alone") {
    Network net = direct_pair();
    Config cfg = test_config();
    std::vector<Flow> flows = {
        make_flow(net, 0, 100, 101, kMilli, kMilli, PriorityClass::TT),
        make_flow(net, 1, 100, 101, kMilli, kMilli, PriorityClass::TT)};
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    CHECK(sol.objective == 2);
    for (const SolutionFlow& sf : sol.flows) {
        CHECK(sf.assigned == PriorityClass::TT);
        CHECK(sf.scheduled);
    }
    CHECK(check_constraints(sol.schedule, net, flows).empty());
}

TEST_CASE("overloaded class-A set is rescued by TT promotion") {
    // At 100 Mbit/s three same-class flows cannot hold a 700 us deadline, but
    // time-triggered windows fit with room to spare.
    Network net = chain_net(1, 2, 100'000'000);
    Config cfg = test_config();
    std::vector<Flow> flows;
    for (int i = 0; i < 3; ++i) {
        flows.push_back(
            make_flow(net, i, 100, 101, 2 * kMilli, 700 * kMicro, PriorityClass::AvbA));
    }
    Solution st = orchestrate(net, flows, cfg, Algo::Static);
    Solution pr = orchestrate(net, flows, cfg, Algo::Proposed);
    CHECK(st.objective < 3);
    CHECK(pr.objective == 3);
    CHECK(pr.objective == brute_force_best(net, flows, cfg));
    for (const SolutionFlow& sf : pr.flows) {
        CHECK(sf.assigned == PriorityClass::TT);
    }
}

TEST_CASE("upgrade walks a flow up only while nothing breaks") {
    Network net = direct_pair();
    Config cfg = test_config();

    SUBCASE("upgrade kept when harmless") {
        std::vector<Flow> flows = {
            make_flow(net, 0, 100, 101, kMilli, 500 * kMicro, PriorityClass::AvbA),
            make_flow(net, 1, 100, 101, kMilli, 60'000, PriorityClass::AvbB)};
        Solution sol = orchestrate(net, flows, cfg, Algo::Upgrade);
        CHECK(sol.objective == 2);
        CHECK(sol.classes.at(1) == PriorityClass::AvbA);
    }

    SUBCASE("upgrade reverted when it breaks a neighbor") {
        // Flow 0 is feasible only while alone in class A; flow 1 cannot be
        // helped without hurting it, so every rung is rolled back.
        std::vector<Flow> flows = {
            make_flow(net, 0, 100, 101, kMilli, 20'000, PriorityClass::AvbA),
            make_flow(net, 1, 100, 101, kMilli, 60'000, PriorityClass::AvbB)};
        Solution st = orchestrate(net, flows, cfg, Algo::Static);
        REQUIRE(st.objective == 1);
        Solution up = orchestrate(net, flows, cfg, Algo::Upgrade);
        CHECK(up.objective == 1);
        CHECK(up.classes.at(1) == PriorityClass::AvbB);
        CHECK(up.classes.at(0) == PriorityClass::AvbA);
        for (const SolutionFlow& sf : up.flows) {
            if (sf.id == 0) {
                CHECK(sf.scheduled);
            }
        }
    }

    SUBCASE("no infeasible flow leaves static untouched") {
        std::vector<Flow> flows = {
            make_flow(net, 0, 100, 101, kMilli, kMilli, PriorityClass::AvbA),
            make_flow(net, 1, 100, 101, kMilli, kMilli, PriorityClass::AvbB)};
        Network net2 = direct_pair();
        Solution st = orchestrate(net2, flows, cfg, Algo::Static);
        Solution up = orchestrate(net2, flows, cfg, Algo::Upgrade);
        CHECK(st.objective == up.objective);
        CHECK(solution_to_json_text(st, net2, flows) == solution_to_json_text(up, net2, flows));
    }
}

TEST_CASE("statically TT flows never leave the TT class") {
    Network net = chain_net(2, 2, 1'000'000'000);
    Config cfg;
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        auto flows = random_small_instance(net, 5, 2, 1, rng);
        for (Algo a : {Algo::Static, Algo::Upgrade, Algo::Proposed}) {
            Solution sol = orchestrate(net, flows, cfg, a);
            for (const SolutionFlow& sf : sol.flows) {
                if (sf.static_cls == PriorityClass::TT) {
                    CHECK(sf.assigned == PriorityClass::TT);
                }
            }
        }
    }
}

TEST_CASE("deadline verifier accepts emitted solutions") {
    Network net = chain_net(2, 2, 100'000'000);
    Config cfg;
    Rng rng(123);
    for (int trial = 0; trial < 10; ++trial) {
        auto flows = random_small_instance(net, 6, 2, 1, rng);
        for (Algo a : {Algo::Static, Algo::Upgrade, Algo::Proposed}) {
            Solution sol = orchestrate(net, flows, cfg, a);
            CHECK(verify_deadlines(net, flows, sol, cfg).empty());
            CHECK(check_constraints(sol.schedule, net, flows).empty());
        }
    }
}

TEST_CASE("small instances bracket between static and brute force") {
    Config cfg;
    Rng rng(2024);
    int ran = 0;
    for (int trial = 0; trial < 25; ++trial) {
        Network net = chain_net(1 + static_cast<int>(rng.below(2)), 2, 100'000'000);
        auto flows = random_small_instance(net, 3 + static_cast<int>(rng.below(3)), 1, 1, rng);
        Solution st = orchestrate(net, flows, cfg, Algo::Static);
        Solution pr = orchestrate(net, flows, cfg, Algo::Proposed);
        const int best = brute_force_best(net, flows, cfg);
        CHECK(st.objective <= pr.objective);
        CHECK(pr.objective <= best);
        ++ran;
    }
    CHECK(ran == 25);
}

TEST_CASE("component scheduling is identical sequentially and in parallel") {
    Network net = chain_net(3, 3, 1'000'000'000);
    Config cfg;
    Rng rng(555);
    auto flows = random_small_instance(net, 24, 6, 3, rng);
    Solution seq = orchestrate(net, flows, cfg, Algo::Proposed, 1);
    Solution par = orchestrate(net, flows, cfg, Algo::Proposed, 4);
    CHECK(solution_to_json_text(seq, net, flows) == solution_to_json_text(par, net, flows));
}

TEST_CASE("orchestrate twice gives byte-identical output") {
    Network net = chain_net(2, 2, 1'000'000'000);
    Config cfg;
    Rng rng(9);
    auto flows = random_small_instance(net, 10, 3, 2, rng);
    Solution a = orchestrate(net, flows, cfg, Algo::Proposed);
    Solution b = orchestrate(net, flows, cfg, Algo::Proposed);
    CHECK(solution_to_json_text(a, net, flows) == solution_to_json_text(b, net, flows));
}

TEST_CASE("empty flow set gives an empty solution") {
    Network net = direct_pair();
    Config cfg;
    Solution sol = orchestrate(net, {}, cfg, Algo::Proposed);
    CHECK(sol.objective == 0);
    CHECK(sol.flows.empty());
}

TEST_CASE("solution JSON reload rebuilds classes and reservations") {
    Network net = chain_net(2, 2, 1'000'000'000);
    Config cfg;
    Rng rng(31);
    auto flows = random_small_instance(net, 8, 3, 1, rng);
    Solution sol = orchestrate(net, flows, cfg, Algo::Proposed);
    const std::string text = solution_to_json_text(sol, net, flows);
    LoadedSolution ls = solution_from_json_text(text, net, flows);
    CHECK(ls.classes == sol.classes);
    CHECK(ls.schedule.placements().size() == sol.schedule.placements().size());
    for (int li = 0; li < net.link_count(); ++li) {
        const auto& a = sol.schedule.link_reservations(li);
        const auto& b = ls.schedule.link_reservations(li);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].flow == b[i].flow);
            CHECK(a[i].start == b[i].start);
            CHECK(a[i].len == b[i].len);
            CHECK(a[i].tt_queue == b[i].tt_queue);
        }
    }
    for (const SolutionFlow& sf : sol.flows) {
        CHECK(ls.scheduled.at(sf.id) == sf.scheduled);
    }
}
