#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "tsn/flow_groups.hpp"
#include "tsn/rng.hpp"

using namespace tsn;

namespace {

// Chain of `k` switches (ids 0..k-1), `m` end stations per switch.
Network chain(int k, int m) {
    std::vector<Node> nodes;
    std::vector<Link> links;
    auto both = [&](int a, int b) {
        links.push_back({a, b, 1'000'000'000, 0, 0});
        links.push_back({b, a, 1'000'000'000, 0, 0});
    };
    for (int s = 0; s < k; ++s) {
        nodes.push_back({s, NodeKind::Switch});
    }
    for (int s = 0; s + 1 < k; ++s) {
        both(s, s + 1);
    }
    int next = 100;
    for (int s = 0; s < k; ++s) {
        for (int e = 0; e < m; ++e) {
            nodes.push_back({next, NodeKind::EndStation});
            both(next, s);
            ++next;
        }
    }
    return Network(nodes, links);
}

Flow mk_flow(const Network& net, int id, int src, int dst, Ns period, Ns ddl,
             PriorityClass cls = PriorityClass::AvbA) {
    Flow f;
    f.id = id;
    f.src = src;
    f.dst = dst;
    f.period = period;
    f.ddl = ddl;
    f.static_prio = cls;
    f.route = shortest_route(net, src, dst);
    return f;
}

} // namespace

TEST_CASE("flows with one route form one group") {
    Network net = chain(2, 2);
    std::vector<Flow> flows = {mk_flow(net, 0, 100, 102, kMilli, kMilli),
                               mk_flow(net, 1, 100, 102, kMilli, kMilli)};
    auto groups = group_flows(flows);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].members == std::vector<int>{0, 1});
}

TEST_CASE("reversed routes are distinct groups") {
    Network net = chain(2, 1);
    std::vector<Flow> flows = {mk_flow(net, 0, 100, 101, kMilli, kMilli),
                               mk_flow(net, 1, 101, 100, kMilli, kMilli)};
    auto groups = group_flows(flows);
    CHECK(groups.size() == 2);
    CHECK(shared_link_count(groups[0].route, groups[1].route) == 0);
}

TEST_CASE("groups partition the flow set") {
    Network net = chain(3, 3);
    Rng rng(42);
    std::vector<int> stations;
    for (const Node& n : net.nodes()) {
        if (n.kind == NodeKind::EndStation) {
            stations.push_back(n.id);
        }
    }
    std::vector<Flow> flows;
    for (int i = 0; i < 40; ++i) {
        int src = stations[rng.below(stations.size())];
        int dst = src;
        while (dst == src) {
            dst = stations[rng.below(stations.size())];
        }
        flows.push_back(mk_flow(net, i, src, dst, kMilli, kMilli));
    }
    auto groups = group_flows(flows);
    std::set<int> seen;
    size_t total = 0;
    for (const FlowGroup& g : groups) {
        for (int id : g.members) {
            CHECK(seen.insert(id).second);  // no flow in two groups
            const Flow& f = flows[static_cast<size_t>(id)];
            CHECK(f.route == g.route);
        }
        total += g.members.size();
    }
    CHECK(total == flows.size());
}

TEST_CASE("tt conflict instance count over the route") {
    Network net = chain(3, 1);
    Flow f = mk_flow(net, 0, 100, 102, 2 * kMilli, 2 * kMilli);
    REQUIRE(f.route.size() == 4);

    Flow g1 = mk_flow(net, 1, 100, 102, 500 * kMicro, 500 * kMicro, PriorityClass::TT);
    Flow g2 = mk_flow(net, 2, 100, 101, kMilli, kMilli, PriorityClass::TT);

    CHECK(tt_conflict_count(f, {}, kMilli) == 0);
    // g1 crosses all four links of f's route: 4 links x 2 instances per 1 ms.
    CHECK(tt_conflict_count(f, {&g1}, kMilli) == 8);
    // Two-link route: one TT flow with 2 instances on both links -> 4.
    Flow two_link = f;
    two_link.route = {f.route[1], f.route[2]};
    CHECK(tt_conflict_count(two_link, {&g1}, kMilli) == 4);
    // Plus a 1 ms TT flow sharing one link -> 5.
    CHECK(tt_conflict_count(two_link, {&g1, &g2}, kMilli) == 5);
}

TEST_CASE("tt adjustment precedence metric") {
    Flow f;
    f.id = 0;
    f.ddl = 2 * kMilli;
    CHECK(tt_adjust_metric(f, 4) == Rational::of(125, 1));
    // Zero conflicts take a unit factor and outrank any positive conflict.
    CHECK(tt_adjust_metric(f, 0) == Rational::of(500, 1));
    // The unit substitution ties zero conflicts with a single conflict and
    // outranks anything heavier.
    CHECK(tt_adjust_metric(f, 0) == tt_adjust_metric(f, 1));
    CHECK(tt_adjust_metric(f, 0) > tt_adjust_metric(f, 2));

    // Equal conflicts order by ascending deadline.
    Flow tight = f, loose = f;
    tight.ddl = kMilli;
    loose.ddl = 4 * kMilli;
    CHECK(tt_adjust_metric(tight, 3) > tt_adjust_metric(loose, 3));
}

TEST_CASE("conflict edge weight") {
    CHECK(conflict_edge_weight(0, 3, 2) == 0);
    CHECK(conflict_edge_weight(2, 3, 2) == 10);
    CHECK(conflict_edge_weight(2, 3, 2) == conflict_edge_weight(2, 2, 3));
}

TEST_CASE("conflict graph degrees and adjustment metric") {
    Network net = chain(3, 2);
    std::vector<Flow> flows = {
        mk_flow(net, 0, 100, 104, kMilli, 2 * kMilli),  // sw0 -> sw2
        mk_flow(net, 1, 101, 102, kMilli, 2 * kMilli),  // sw0 -> sw1
        mk_flow(net, 2, 104, 105, kMilli, 2 * kMilli),  // within sw2
    };
    auto groups = group_flows(flows);
    REQUIRE(groups.size() == 3);
    FgConflictGraph g = build_conflict_graph(groups, {3, 2, 1});

    // Groups 0 and 1 share the sw0->sw1 link; group 2 is isolated.
    CHECK(g.shared_links[0][1] == 1);
    CHECK(g.weight[0][1] == 1 * (3 + 2));
    CHECK(g.weight[0][1] == g.weight[1][0]);
    CHECK(avb_conflict_count(flows[2], g) == 0);
    CHECK(avb_conflict_count(flows[0], g) == 5);

    // conflict 14 over ddl 2 ms -> 7000 per second.
    Flow probe = flows[0];
    CHECK(avb_adjust_metric(probe, 14) == Rational::of(7000, 1));
    CHECK(avb_adjust_metric(probe, 0) == Rational::of(0, 1));

    auto comps = connected_components(g);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].kind == ComponentKind::Crossed);
    CHECK(comps[0].group_indices == std::vector<int>{0, 1});
    CHECK(comps[1].kind == ComponentKind::Parallel);

    auto dot = conflict_graph_dot(net, g);
    CHECK(dot.find("FG_R0 -- FG_R1 [label=\"5\"]") != std::string::npos);
}

TEST_CASE("all members of one group share the conflict count") {
    Network net = chain(2, 2);
    std::vector<Flow> flows = {mk_flow(net, 0, 100, 102, kMilli, kMilli),
                               mk_flow(net, 1, 100, 102, kMilli, 2 * kMilli),
                               mk_flow(net, 2, 101, 103, kMilli, kMilli)};
    auto groups = group_flows(flows);
    FgConflictGraph g = build_conflict_graph(groups, {2, 1});
    CHECK(avb_conflict_count(flows[0], g) == avb_conflict_count(flows[1], g));
}

TEST_CASE("empty flow set yields no components") {
    auto groups = group_flows({});
    FgConflictGraph g = build_conflict_graph(groups, {});
    CHECK(connected_components(g).empty());
}

TEST_CASE("tt conflict count is additive over route splits") {
    Network net = chain(4, 1);
    Flow f = mk_flow(net, 0, 100, 103, 4 * kMilli, 4 * kMilli);
    Flow g = mk_flow(net, 1, 100, 103, kMilli, kMilli, PriorityClass::TT);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const size_t cut = 1 + rng.below(f.route.size() - 1);
        Flow head = f, tail = f;
        head.route.assign(f.route.begin(), f.route.begin() + static_cast<long>(cut));
        tail.route.assign(f.route.begin() + static_cast<long>(cut), f.route.end());
        CHECK(tt_conflict_count(f, {&g}, 4 * kMilli) ==
              tt_conflict_count(head, {&g}, 4 * kMilli) +
                  tt_conflict_count(tail, {&g}, 4 * kMilli));
    }
}
