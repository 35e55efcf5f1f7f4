#pragma once

// Test-only instance builders and exhaustive oracles. Everything here stays
// independent of the search paths it is used to check: the brute force walks
// every class assignment and scores it with the public evaluator.

#include <algorithm>
#include <map>
#include <vector>

#include "tsn/adjust.hpp"
#include "tsn/model.hpp"
#include "tsn/rng.hpp"
#include "tsn/tt_schedule.hpp"

namespace tsn_test {

using namespace tsn;

// Chain of `k` switches with `m` end stations each.
inline Network chain_net(int k, int m, std::int64_t rate_bps = 1'000'000'000) {
    std::vector<Node> nodes;
    std::vector<Link> links;
    auto both = [&](int a, int b) {
        links.push_back({a, b, rate_bps, 0, 0});
        links.push_back({b, a, rate_bps, 0, 0});
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

inline Flow make_flow(const Network& net, int id, int src, int dst, Ns period, Ns ddl,
                      PriorityClass cls) {
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

// Small congested instances: a 100 Mbit/s chain keeps wire times fat enough
// that class assignment genuinely decides feasibility.
inline std::vector<Flow> random_small_instance(const Network& net, int n_avb, int n_tt, int n_be,
                                               Rng& rng) {
    std::vector<int> stations;
    for (const Node& n : net.nodes()) {
        if (n.kind == NodeKind::EndStation) {
            stations.push_back(n.id);
        }
    }
    const std::vector<Ns> periods = {2 * kMilli, 4 * kMilli, 8 * kMilli};
    std::vector<Flow> flows;
    int id = 0;
    auto add = [&](PriorityClass cls) {
        int src = stations[rng.below(stations.size())];
        int dst = src;
        while (dst == src) {
            dst = stations[rng.below(stations.size())];
        }
        const Ns p = periods[rng.below(periods.size())];
        const Ns ddl = p / 2 + rng.range(0, p - p / 2);
        flows.push_back(make_flow(net, id++, src, dst, p, ddl,
                                  cls == PriorityClass::AvbA && rng.below(2)
                                      ? PriorityClass::AvbB
                                      : cls));
    };
    for (int i = 0; i < n_tt; ++i) {
        add(PriorityClass::TT);
    }
    for (int i = 0; i < n_avb; ++i) {
        add(PriorityClass::AvbA);
    }
    for (int i = 0; i < n_be; ++i) {
        add(PriorityClass::BE);
    }
    return flows;
}

// Builds the schedule for one concrete promotion set with the production
// placement discipline: static TT batch first, then promotions deadline-
// ascending. Promotions that fail stay TT but unplaced (score zero).
inline TtSchedule schedule_for_assignment(const Network& net, const std::vector<Flow>& flows,
                                          const std::map<int, PriorityClass>& classes,
                                          const Config& cfg, Ns hyper) {
    TtSchedule sched(hyper, net.link_count());
    std::vector<const Flow*> statics;
    std::vector<const Flow*> promoted;
    for (const Flow& f : flows) {
        if (f.static_prio == PriorityClass::TT) {
            statics.push_back(&f);
        } else if (classes.at(f.id) == PriorityClass::TT) {
            promoted.push_back(&f);
        }
    }
    asap_schedule(statics, net, cfg, sched);
    std::sort(promoted.begin(), promoted.end(), [](const Flow* a, const Flow* b) {
        if (a->ddl != b->ddl) return a->ddl < b->ddl;
        return a->id < b->id;
    });
    for (const Flow* f : promoted) {
        asap_add(*f, net, cfg, sched);
    }
    return sched;
}

// Exhaustive search over every {TT, A, B} assignment of the AVB flows.
inline int brute_force_best(const Network& net, const std::vector<Flow>& flows,
                            const Config& cfg) {
    std::vector<const Flow*> avb;
    for (const Flow& f : flows) {
        if (f.static_prio == PriorityClass::AvbA || f.static_prio == PriorityClass::AvbB) {
            avb.push_back(&f);
        }
    }
    const Ns hyper = hyperperiod(flows);
    std::vector<int> digits(avb.size(), 0);
    int best = 0;
    for (;;) {
        std::map<int, PriorityClass> classes;
        for (const Flow& f : flows) {
            classes[f.id] = f.static_prio;
        }
        for (size_t i = 0; i < avb.size(); ++i) {
            classes[avb[i]->id] = digits[i] == 0   ? PriorityClass::TT
                                  : digits[i] == 1 ? PriorityClass::AvbA
                                                   : PriorityClass::AvbB;
        }
        TtSchedule sched = schedule_for_assignment(net, flows, classes, cfg, hyper);
        Solution sol = evaluate_assignment(net, flows, classes, sched, cfg);
        best = std::max(best, sol.objective);

        size_t i = 0;
        while (i < digits.size() && ++digits[i] == 3) {
            digits[i] = 0;
            ++i;
        }
        if (i == digits.size()) {
            break;
        }
    }
    return best;
}

} // namespace tsn_test
