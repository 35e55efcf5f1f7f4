#include "tsn/adjust.hpp"

#include <algorithm>
#include <future>
#include <optional>
#include <set>
#include <thread>

#include "json.hpp"
#include "tsn/errors.hpp"
#include "tsn/rational.hpp"

namespace tsn {

const char* algo_name(Algo a) {
    switch (a) {
    case Algo::Static: return "static";
    case Algo::Upgrade: return "upgrade";
    case Algo::Proposed: return "proposed";
    }
    return "?";
}

std::optional<Algo> algo_from_name(const std::string& s) {
    if (s == "static") return Algo::Static;
    if (s == "upgrade") return Algo::Upgrade;
    if (s == "proposed") return Algo::Proposed;
    return std::nullopt;
}

EstimateResult estimate_schedulable(const std::vector<int>& same_class_ids,
                                    const RtaContext& ctx) {
    EstimateResult res;
    std::vector<int> list = same_class_ids;
    std::sort(list.begin(), list.end(), [&](int a, int b) {
        const Flow& fa = ctx.flow(a);
        const Flow& fb = ctx.flow(b);
        if (fa.ddl != fb.ddl) return fa.ddl < fb.ddl;
        return fa.id < fb.id;
    });
    while (!list.empty()) {
        auto rt = ctx.rt_of_set(list);
        if (rt.has_value() && ctx.flow(list.front()).ddl >= *rt) {
            break;
        }
        res.drops.push_back({list.front(), rt, ctx.flow(list.front()).ddl});
        list.erase(list.begin());
    }
    res.kept = std::move(list);
    return res;
}

namespace {

// Scope for a component's analysis context: the component's own flows plus
// every BE flow (BE presence feeds the non-preemptable blocking term).
std::map<int, PriorityClass> with_global_be(const std::map<int, PriorityClass>& classes,
                                            const std::vector<Flow>& all_flows) {
    std::map<int, PriorityClass> scope = classes;
    for (const Flow& f : all_flows) {
        if (f.static_prio == PriorityClass::BE) {
            scope.emplace(f.id, PriorityClass::BE);
        }
    }
    return scope;
}

std::vector<const Flow*> filter_class(const std::vector<const Flow*>& flows, PriorityClass cls) {
    std::vector<const Flow*> out;
    for (const Flow* f : flows) {
        if (f->static_prio == cls) {
            out.push_back(f);
        }
    }
    return out;
}

std::vector<const Flow*> static_avb(const std::vector<const Flow*>& flows) {
    std::vector<const Flow*> out;
    for (const Flow* f : flows) {
        if (f->static_prio == PriorityClass::AvbA || f->static_prio == PriorityClass::AvbB) {
            out.push_back(f);
        }
    }
    return out;
}

void sort_by_ddl(std::vector<const Flow*>& v) {
    std::sort(v.begin(), v.end(), [](const Flow* a, const Flow* b) {
        if (a->ddl != b->ddl) return a->ddl < b->ddl;
        return a->id < b->id;
    });
}

// Feasibility ledger over the component's AVB flows; a class move re-checks
// only the mover and the flows sharing a link with it.
class AvbFeasibility {
public:
    AvbFeasibility(RtaContext& ctx, const std::vector<int>& avb_ids) : ctx_(ctx) {
        for (int id : avb_ids) {
            neighbors_[id] = {};
        }
        for (size_t i = 0; i < avb_ids.size(); ++i) {
            for (size_t j = i + 1; j < avb_ids.size(); ++j) {
                const Flow& a = ctx.flow(avb_ids[i]);
                const Flow& b = ctx.flow(avb_ids[j]);
                if (shared_link_count(a.route, b.route) > 0) {
                    neighbors_[a.id].push_back(b.id);
                    neighbors_[b.id].push_back(a.id);
                }
            }
        }
        for (int id : avb_ids) {
            set_feasible(id, ctx_.rt_avb(id).feasible);
        }
    }

    void move_class(int id, PriorityClass cls) {
        ctx_.set_class(id, cls);
        reevaluate(id);
    }

    void reevaluate(int id) {
        set_feasible(id, ctx_.rt_avb(id).feasible);
        for (int n : neighbors_.at(id)) {
            set_feasible(n, ctx_.rt_avb(n).feasible);
        }
    }

    bool feasible(int id) const { return feasible_.at(id); }
    int count() const { return count_; }
    const std::vector<int>& neighbors(int id) const { return neighbors_.at(id); }

private:
    void set_feasible(int id, bool v) {
        auto it = feasible_.find(id);
        if (it == feasible_.end()) {
            feasible_[id] = v;
            count_ += v ? 1 : 0;
            return;
        }
        count_ += (v ? 1 : 0) - (it->second ? 1 : 0);
        it->second = v;
    }

    RtaContext& ctx_;
    std::map<int, bool> feasible_;
    std::map<int, std::vector<int>> neighbors_;
    int count_ = 0;
};

int feasible_count(const RtaContext& ctx, const std::vector<const Flow*>& flows) {
    int n = 0;
    for (const Flow* f : flows) {
        n += ctx.rt_avb(f->id).feasible ? 1 : 0;
    }
    return n;
}

enum class PromotionPolicy {
    Greedy,      // any feasible placement is kept
    NoHarm,      // the pool must not lose feasible flows over the new windows
    StrictGain,  // the promotion must raise the total estimated count
};

// Phase-1 promotion walk. Candidates are tried in the given order; the
// policy decides which successful placements are committed, comparing the
// pool's estimated feasibility (all pending flows counted as class A under a
// refined jitter pass) before and after. Returns the flows that stay AVB.
std::vector<const Flow*> promote_with_guard(const std::vector<const Flow*>& candidates,
                                            Fragment& fr, const std::vector<Flow>& all_flows,
                                            const Network& net, const Config& cfg,
                                            PromotionPolicy policy) {
    std::vector<const Flow*> pending = candidates;
    if (policy == PromotionPolicy::Greedy) {
        std::vector<const Flow*> rest;
        for (const Flow* f : candidates) {
            if (asap_add(*f, net, cfg, fr.schedule)) {
                fr.classes[f->id] = PriorityClass::TT;
            } else {
                rest.push_back(f);
            }
        }
        return rest;
    }
    auto make_ctx = [&](const Flow* promoted, const std::vector<const Flow*>& pool) {
        std::map<int, PriorityClass> cls = fr.classes;
        if (promoted != nullptr) {
            cls[promoted->id] = PriorityClass::TT;
        }
        for (const Flow* p : pool) {
            cls[p->id] = PriorityClass::AvbA;
        }
        RtaContext ctx(net, all_flows, with_global_be(cls, all_flows), fr.schedule, cfg);
        ctx.refine_jitter();  // the gate must see what the final scorer sees
        return ctx;
    };
    std::optional<RtaContext> cur(make_ctx(nullptr, pending));
    for (const Flow* f : candidates) {
        if (!asap_add(*f, net, cfg, fr.schedule)) {
            continue;
        }
        std::vector<const Flow*> rest;
        for (const Flow* p : pending) {
            if (p != f) {
                rest.push_back(p);
            }
        }
        RtaContext after = make_ctx(f, rest);
        const int rest_before = feasible_count(*cur, rest);
        const int rest_after = feasible_count(after, rest);
        bool keep = false;
        if (policy == PromotionPolicy::NoHarm) {
            keep = rest_after >= rest_before;
        } else {
            // Strict gain: scheduled-f plus the pool must beat the pool with
            // f still competing in it.
            const int f_before = cur->rt_avb(f->id).feasible ? 1 : 0;
            keep = 1 + rest_after > f_before + rest_before;
        }
        if (keep) {
            fr.classes[f->id] = PriorityClass::TT;
            pending = std::move(rest);
            cur.emplace(std::move(after));
        } else {
            fr.schedule.remove_flow(f->id);
        }
    }
    return pending;
}

} // namespace

Fragment schedule_parallel_fg(const std::vector<const Flow*>& component_flows,
                              const std::vector<Flow>& all_flows, const Network& net,
                              const Config& cfg, Ns hyper, int promotion_policy,
                              Fragment* all_a_out) {
    Fragment fr;
    fr.schedule = TtSchedule(hyper, net.link_count());

    auto static_tt = filter_class(component_flows, PriorityClass::TT);
    fr.tt_failed = asap_schedule(static_tt, net, cfg, fr.schedule);
    for (const Flow* f : static_tt) {
        fr.classes[f->id] = PriorityClass::TT;
    }

    // Promote AVB flows to TT in deadline order while placements exist and
    // do not cost more schedulability than they add.
    auto avb = static_avb(component_flows);
    sort_by_ddl(avb);
    std::vector<const Flow*> remaining = promote_with_guard(
        avb, fr, all_flows, net, cfg, static_cast<PromotionPolicy>(promotion_policy));
    for (const Flow* f : remaining) {
        fr.classes[f->id] = PriorityClass::AvbA;
    }
    if (all_a_out != nullptr) {
        *all_a_out = fr;  // snapshot before the class-B walk
    }
    if (remaining.empty()) {
        return fr;
    }

    RtaContext ctx(net, all_flows, with_global_be(fr.classes, all_flows), fr.schedule, cfg);
    ctx.refine_jitter();
    std::vector<int> a_ids;
    for (const Flow* f : remaining) {
        a_ids.push_back(f->id);
    }
    std::vector<int> b_ids;

    int n_best = estimate_schedulable(a_ids, ctx).count();
    std::map<int, PriorityClass> best;
    for (int id : a_ids) {
        best[id] = PriorityClass::AvbA;
    }

    // Demote from the largest deadline down; stop at the first drop in the
    // estimated count and keep the best split seen.
    std::vector<const Flow*> order = remaining;
    sort_by_ddl(order);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int id = (*it)->id;
        ctx.set_class(id, PriorityClass::AvbB);
        a_ids.erase(std::find(a_ids.begin(), a_ids.end(), id));
        b_ids.push_back(id);
        const int n_cur =
            estimate_schedulable(a_ids, ctx).count() + estimate_schedulable(b_ids, ctx).count();
        if (n_cur >= n_best) {
            n_best = n_cur;
            for (int a : a_ids) best[a] = PriorityClass::AvbA;
            for (int b : b_ids) best[b] = PriorityClass::AvbB;
        } else {
            break;
        }
    }
    for (const auto& [id, cls] : best) {
        fr.classes[id] = cls;
    }
    return fr;
}

Fragment schedule_cross_fg(const std::vector<const Flow*>& component_flows,
                           const std::vector<Flow>& all_flows, const Network& net,
                           const Config& cfg, Ns hyper, int promotion_policy,
                           Fragment* all_a_out) {
    Fragment fr;
    fr.schedule = TtSchedule(hyper, net.link_count());

    auto static_tt = filter_class(component_flows, PriorityClass::TT);
    fr.tt_failed = asap_schedule(static_tt, net, cfg, fr.schedule);
    for (const Flow* f : static_tt) {
        fr.classes[f->id] = PriorityClass::TT;
    }
    std::vector<const Flow*> scheduled_tt;
    for (const Flow* f : static_tt) {
        if (fr.schedule.has_flow(f->id)) {
            scheduled_tt.push_back(f);
        }
    }

    // TT adjustment ordered by the TT-conflict precedence metric.
    auto avb = static_avb(component_flows);
    std::vector<std::pair<Rational, const Flow*>> order;
    for (const Flow* f : avb) {
        order.push_back({tt_adjust_metric(*f, tt_conflict_count(*f, scheduled_tt, hyper)), f});
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (!(a.first == b.first)) return b.first < a.first;  // metric descending
        return a.second->id < b.second->id;
    });
    std::vector<const Flow*> ordered;
    for (const auto& [metric, f] : order) {
        ordered.push_back(f);
    }
    std::vector<const Flow*> remaining = promote_with_guard(
        ordered, fr, all_flows, net, cfg, static_cast<PromotionPolicy>(promotion_policy));
    for (const Flow* f : remaining) {
        fr.classes[f->id] = PriorityClass::AvbA;
    }
    if (all_a_out != nullptr) {
        *all_a_out = fr;  // snapshot before the class-B walk
    }
    if (remaining.empty()) {
        return fr;
    }

    // Conflict-graph metrics: group member counts take scheduled TT flows and
    // the still-pending AVB flows, re-counted now that promotions settled.
    std::vector<Flow> non_be;
    for (const Flow* f : component_flows) {
        non_be.push_back(*f);
    }
    auto groups = group_flows(non_be);
    std::vector<std::int64_t> counts(groups.size(), 0);
    std::set<int> pending;
    for (const Flow* f : remaining) {
        pending.insert(f->id);
    }
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        for (int member : groups[gi].members) {
            const bool scheduled_tt_member =
                fr.classes.count(member) && fr.classes.at(member) == PriorityClass::TT &&
                fr.schedule.has_flow(member);
            if (scheduled_tt_member || pending.count(member)) {
                ++counts[gi];
            }
        }
    }
    const FgConflictGraph graph = build_conflict_graph(std::move(groups), counts);

    std::vector<std::pair<Rational, const Flow*>> avb_order;
    for (const Flow* f : remaining) {
        avb_order.push_back({avb_adjust_metric(*f, avb_conflict_count(*f, graph)), f});
    }
    std::stable_sort(avb_order.begin(), avb_order.end(), [](const auto& a, const auto& b) {
        if (!(a.first == b.first)) return b.first < a.first;  // metric descending
        return a.second->id < b.second->id;
    });

    RtaContext ctx(net, all_flows, with_global_be(fr.classes, all_flows), fr.schedule, cfg);
    ctx.refine_jitter();
    std::vector<int> avb_ids;
    for (const Flow* f : remaining) {
        avb_ids.push_back(f->id);
    }
    AvbFeasibility eval(ctx, avb_ids);

    int n_best = eval.count();
    // Tail of the descending metric order first: the smallest precedence
    // value has the most margin as a class-B flow. A harmful demotion is
    // rolled back and the walk continues.
    for (auto it = avb_order.rbegin(); it != avb_order.rend(); ++it) {
        const int id = it->second->id;
        eval.move_class(id, PriorityClass::AvbB);
        if (eval.count() >= n_best) {
            n_best = eval.count();
            fr.classes[id] = PriorityClass::AvbB;
        } else {
            eval.move_class(id, PriorityClass::AvbA);
        }
    }
    return fr;
}

namespace {

Fragment schedule_static_fragment(const std::vector<const Flow*>& component_flows,
                                  const Network& net, const Config& cfg, Ns hyper) {
    Fragment fr;
    fr.schedule = TtSchedule(hyper, net.link_count());
    auto static_tt = filter_class(component_flows, PriorityClass::TT);
    fr.tt_failed = asap_schedule(static_tt, net, cfg, fr.schedule);
    for (const Flow* f : component_flows) {
        fr.classes[f->id] = f->static_prio;
    }
    return fr;
}

Fragment schedule_upgrade_fragment(const std::vector<const Flow*>& component_flows,
                                   const std::vector<Flow>& all_flows, const Network& net,
                                   const Config& cfg, Ns hyper) {
    Fragment fr = schedule_static_fragment(component_flows, net, cfg, hyper);

    std::vector<int> avb_ids;
    for (const Flow* f : component_flows) {
        if (f->static_prio == PriorityClass::AvbA || f->static_prio == PriorityClass::AvbB) {
            avb_ids.push_back(f->id);
        }
    }
    if (avb_ids.empty()) {
        return fr;
    }

    auto make_ctx = [&]() {
        RtaContext ctx(net, all_flows, with_global_be(fr.classes, all_flows), fr.schedule, cfg);
        ctx.refine_jitter();
        return ctx;
    };
    std::optional<RtaContext> ctx(make_ctx());
    std::vector<int> cur_ids = avb_ids;  // AVB flows not yet upgraded to TT
    std::optional<AvbFeasibility> eval(std::in_place, *ctx, cur_ids);

    std::vector<const Flow*> infeasible;
    for (const Flow* f : component_flows) {
        if ((f->static_prio == PriorityClass::AvbA || f->static_prio == PriorityClass::AvbB) &&
            !eval->feasible(f->id)) {
            infeasible.push_back(f);
        }
    }
    sort_by_ddl(infeasible);

    for (const Flow* f : infeasible) {
        const PriorityClass orig = fr.classes.at(f->id);
        std::map<int, bool> before;
        for (int n : eval->neighbors(f->id)) {
            before[n] = eval->feasible(n);
        }
        auto others_intact = [&]() {
            for (const auto& [id, was] : before) {
                if (was && !eval->feasible(id)) {
                    return false;
                }
            }
            return true;
        };

        bool done = false;
        if (orig == PriorityClass::AvbB) {
            eval->move_class(f->id, PriorityClass::AvbA);
            if (eval->feasible(f->id) && others_intact()) {
                fr.classes[f->id] = PriorityClass::AvbA;
                done = true;
            } else {
                eval->move_class(f->id, PriorityClass::AvbB);
            }
        }
        if (!done && asap_add(*f, net, cfg, fr.schedule)) {
            // Last rung: time-triggered placement; feasible by the commit rule.
            fr.classes[f->id] = PriorityClass::TT;
            cur_ids.erase(std::find(cur_ids.begin(), cur_ids.end(), f->id));
            ctx.emplace(make_ctx());
            eval.emplace(*ctx, cur_ids);
            if (!others_intact()) {
                fr.schedule.remove_flow(f->id);
                fr.classes[f->id] = orig;
                cur_ids.insert(std::lower_bound(cur_ids.begin(), cur_ids.end(), f->id), f->id);
                ctx.emplace(make_ctx());
                eval.emplace(*ctx, cur_ids);
            }
        }
    }
    return fr;
}

struct ComponentWork {
    std::vector<const Flow*> flows;
};

} // namespace

Solution evaluate_assignment(const Network& net, const std::vector<Flow>& flows,
                             std::map<int, PriorityClass> classes, TtSchedule schedule,
                             const Config& cfg) {
    Solution sol;
    sol.classes = std::move(classes);
    sol.schedule = std::move(schedule);

    RtaContext ctx(net, flows, sol.classes, sol.schedule, cfg);
    ctx.refine_jitter();
    std::vector<const Flow*> ordered;
    for (const Flow& f : flows) {
        ordered.push_back(&f);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Flow* a, const Flow* b) { return a->id < b->id; });

    for (const Flow* f : ordered) {
        SolutionFlow sf;
        sf.id = f->id;
        sf.static_cls = f->static_prio;
        sf.assigned = sol.classes.at(f->id);
        sf.ddl = f->ddl;
        switch (sf.assigned) {
        case PriorityClass::TT:
            if (sol.schedule.has_flow(f->id)) {
                sf.scheduled = true;
                sf.rt = ctx.rt_tt(f->id);
                sol.rta.entries.push_back({f->id, PriorityClass::TT, true, *sf.rt, {}});
            }
            break;
        case PriorityClass::AvbA:
        case PriorityClass::AvbB: {
            RtaFlowEntry e = ctx.rt_avb(f->id);
            sf.scheduled = e.feasible;
            if (e.feasible) {
                sf.rt = e.rt;
            }
            sol.rta.entries.push_back(e);
            break;
        }
        case PriorityClass::BE:
            sf.scheduled = true;  // no deadline to miss; interferes only as blocking
            break;
        }
        sol.objective += sf.scheduled ? 1 : 0;
        sol.flows.push_back(sf);
    }
    return sol;
}

Solution orchestrate(const Network& net, const std::vector<Flow>& flows, const Config& cfg,
                     Algo algo, int jobs) {
    if (flows.empty()) {
        Solution empty;
        empty.schedule = TtSchedule(1, net.link_count());
        return empty;
    }
    const Ns hyper = hyperperiod(flows);

    std::vector<Flow> non_be;
    for (const Flow& f : flows) {
        if (f.static_prio != PriorityClass::BE) {
            non_be.push_back(f);
        }
    }

    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }

    std::vector<ComponentWork> work;
    std::vector<ComponentKind> kinds;
    if (!non_be.empty()) {
        auto groups = group_flows(non_be);
        std::vector<std::int64_t> counts;
        for (const FlowGroup& g : groups) {
            counts.push_back(static_cast<std::int64_t>(g.members.size()));
        }
        const FgConflictGraph graph = build_conflict_graph(groups, counts);
        auto comps = connected_components(graph);
        std::sort(comps.begin(), comps.end(), [&](const Component& a, const Component& b) {
            return graph.groups[static_cast<size_t>(a.group_indices[0])].members[0] <
                   graph.groups[static_cast<size_t>(b.group_indices[0])].members[0];
        });
        for (const Component& c : comps) {
            ComponentWork w;
            std::vector<int> ids;
            for (int gi : c.group_indices) {
                const auto& m = graph.groups[static_cast<size_t>(gi)].members;
                ids.insert(ids.end(), m.begin(), m.end());
            }
            std::sort(ids.begin(), ids.end());
            for (int id : ids) {
                w.flows.push_back(by_id.at(id));
            }
            work.push_back(std::move(w));
            kinds.push_back(c.kind);
        }
    }

    // Scores one component's fragment; BE traffic enters only as blocking and
    // contributes the same constant to every candidate.
    auto fragment_score = [&](const std::vector<const Flow*>& comp, const Fragment& fr) {
        std::vector<Flow> scoped;
        for (const Flow* f : comp) {
            scoped.push_back(*f);
        }
        for (const Flow& f : flows) {
            if (f.static_prio == PriorityClass::BE) {
                scoped.push_back(f);
            }
        }
        Solution sol = evaluate_assignment(net, scoped, with_global_be(fr.classes, flows),
                                           fr.schedule, cfg);
        int score = 0;
        for (const SolutionFlow& sf : sol.flows) {
            if (fr.classes.count(sf.id) && sf.scheduled) {
                ++score;
            }
        }
        return score;
    };

    auto run_component = [&](size_t i) -> Fragment {
        switch (algo) {
        case Algo::Static:
            return schedule_static_fragment(work[i].flows, net, cfg, hyper);
        case Algo::Upgrade:
            return schedule_upgrade_fragment(work[i].flows, flows, net, cfg, hyper);
        case Algo::Proposed: {
            // Candidate solutions per component: both promotion policies
            // (guarded and pure greedy), each with and without the class-B
            // walk, plus the untouched static assignment. The best one by
            // the definitive evaluation wins; ties prefer earlier entries.
            std::vector<Fragment> cands;
            for (int policy : {1, 2, 0}) {  // no-harm, strict-gain, greedy
                Fragment all_a;
                cands.push_back(kinds[i] == ComponentKind::Parallel
                                    ? schedule_parallel_fg(work[i].flows, flows, net, cfg,
                                                           hyper, policy, &all_a)
                                    : schedule_cross_fg(work[i].flows, flows, net, cfg, hyper,
                                                        policy, &all_a));
                if (!all_a.classes.empty()) {
                    cands.push_back(std::move(all_a));
                }
            }
            cands.push_back(schedule_static_fragment(work[i].flows, net, cfg, hyper));
            size_t best = 0;
            int best_score = -1;
            for (size_t c = 0; c < cands.size(); ++c) {
                const int score = fragment_score(work[i].flows, cands[c]);
                if (score > best_score) {
                    best_score = score;
                    best = c;
                }
            }
            return std::move(cands[best]);
        }
        }
        throw ArgumentError("unknown algorithm");
    };

    std::vector<Fragment> fragments(work.size());
    const int workers = std::max(1, jobs);
    if (workers == 1 || work.size() <= 1) {
        for (size_t i = 0; i < work.size(); ++i) {
            fragments[i] = run_component(i);
        }
    } else {
        std::vector<std::future<void>> futs;
        std::atomic<size_t> next{0};
        const int n_threads = std::min<int>(workers, static_cast<int>(work.size()));
        for (int t = 0; t < n_threads; ++t) {
            futs.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= work.size()) {
                        return;
                    }
                    fragments[i] = run_component(i);
                }
            }));
        }
        for (auto& f : futs) {
            f.get();
        }
    }

    TtSchedule schedule(hyper, net.link_count());
    std::map<int, PriorityClass> classes;
    for (const Fragment& fr : fragments) {
        schedule.merge_from(fr.schedule);
        for (const auto& [id, cls] : fr.classes) {
            classes[id] = cls;
        }
    }
    for (const Flow& f : flows) {
        if (f.static_prio == PriorityClass::BE) {
            classes[f.id] = PriorityClass::BE;
        }
    }
    return evaluate_assignment(net, flows, std::move(classes), std::move(schedule), cfg);
}

std::vector<std::string> verify_deadlines(const Network& net, const std::vector<Flow>& flows,
                                          const Solution& solution, const Config& cfg) {
    std::vector<std::string> out;
    RtaContext ctx(net, flows, solution.classes, solution.schedule, cfg);
    ctx.refine_jitter();
    for (const SolutionFlow& sf : solution.flows) {
        if (!sf.scheduled || sf.assigned == PriorityClass::BE) {
            continue;
        }
        Ns rt = 0;
        if (sf.assigned == PriorityClass::TT) {
            rt = ctx.rt_tt(sf.id);
        } else {
            RtaFlowEntry e = ctx.rt_avb(sf.id);
            if (!e.feasible) {
                out.push_back("flow " + std::to_string(sf.id) +
                              " marked scheduled but analysis diverges");
                continue;
            }
            rt = e.rt;
        }
        if (rt > sf.ddl) {
            out.push_back("flow " + std::to_string(sf.id) + " rt " + std::to_string(rt) +
                          " exceeds deadline " + std::to_string(sf.ddl));
        }
        if (!sf.rt || *sf.rt != rt) {
            out.push_back("flow " + std::to_string(sf.id) + " emitted rt disagrees with re-check");
        }
    }
    return out;
}

std::string solution_to_json_text(const Solution& solution, const Network& net,
                                  const std::vector<Flow>& flows) {
    using json = nlohmann::ordered_json;
    json j;
    j["objective"] = solution.objective;

    json counts;
    for (PriorityClass c : {PriorityClass::TT, PriorityClass::AvbA, PriorityClass::AvbB,
                            PriorityClass::BE}) {
        int n = 0;
        for (const SolutionFlow& sf : solution.flows) {
            if (sf.assigned == c && sf.scheduled) {
                ++n;
            }
        }
        counts[class_name(c)] = n;
    }
    j["scheduled_by_class"] = counts;

    j["flows"] = json::array();
    for (const SolutionFlow& sf : solution.flows) {
        json fj = {{"id", sf.id},
                   {"class_static", class_name(sf.static_cls)},
                   {"class_assigned", class_name(sf.assigned)},
                   {"scheduled", sf.scheduled}};
        if (sf.rt) {
            fj["rt_ns"] = *sf.rt;
        } else {
            fj["rt_ns"] = nullptr;
        }
        fj["ddl_ns"] = sf.ddl;
        j["flows"].push_back(fj);
    }

    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }
    json tt;
    tt["hyperperiod_ns"] = solution.schedule.hyperperiod();
    tt["flows"] = json::array();
    for (const auto& [fid, p] : solution.schedule.placements()) {
        json pj;
        pj["flow"] = fid;
        json links = json::array();
        for (int li : by_id.at(fid)->route) {
            links.push_back(net.link_name(li));
        }
        pj["links"] = links;
        pj["window_start_ns"] = p.window_start;
        pj["window_len_ns"] = p.window_len;
        pj["queue"] = p.queue;
        pj["arrival_ns"] = p.arrival;
        tt["flows"].push_back(pj);
    }
    j["tt_schedule"] = tt;

    j["gcl"] = json::parse(gcl_to_json_text(emit_gcl(solution.schedule, net), net));
    return j.dump(2) + "\n";
}

LoadedSolution solution_from_json_text(const std::string& text, const Network& net,
                                       const std::vector<Flow>& flows) {
    using json = nlohmann::ordered_json;
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("malformed solution JSON");
    }
    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }
    LoadedSolution ls;
    for (const auto& fj : j.at("flows")) {
        auto cls = class_from_name(fj.at("class_assigned").get<std::string>());
        if (!cls) {
            throw ValidationError("solution flow has unknown class");
        }
        const int id = fj.at("id").get<int>();
        ls.classes[id] = *cls;
        ls.scheduled[id] = fj.at("scheduled").get<bool>();
    }
    const auto& tt = j.at("tt_schedule");
    ls.schedule = TtSchedule(tt.at("hyperperiod_ns").get<std::int64_t>(), net.link_count());
    for (const auto& pj : tt.at("flows")) {
        const int fid = pj.at("flow").get<int>();
        auto it = by_id.find(fid);
        if (it == by_id.end()) {
            throw ValidationError("solution schedules unknown flow " + std::to_string(fid));
        }
        const Flow& f = *it->second;
        FlowPlacement p;
        p.window_start = pj.at("window_start_ns").get<std::vector<Ns>>();
        p.window_len = pj.at("window_len_ns").get<std::vector<Ns>>();
        p.queue = pj.at("queue").get<std::vector<int>>();
        p.arrival = pj.at("arrival_ns").get<std::vector<Ns>>();
        if (p.window_start.size() != f.route.size()) {
            throw ValidationError("solution placement does not match flow route");
        }
        const std::int64_t instances = ls.schedule.hyperperiod() / f.period;
        for (size_t h = 0; h < f.route.size(); ++h) {
            for (std::int64_t k = 0; k < instances; ++k) {
                Reservation r;
                r.link = f.route[h];
                r.flow = fid;
                r.instance = static_cast<int>(k);
                r.start = k * f.period + p.window_start[h];
                r.len = p.window_len[h];
                r.tt_queue = p.queue[h];
                r.queue_arrival = k * f.period + p.arrival[h];
                ls.schedule.insert(r);
            }
        }
        ls.schedule.set_placement(fid, std::move(p));
    }
    return ls;
}

} // namespace tsn
