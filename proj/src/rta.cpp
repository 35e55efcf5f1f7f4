#include "tsn/rta.hpp"

#include <algorithm>
#include <sstream>

#include "tsn/errors.hpp"

namespace tsn {

LinkTtIndex::LinkTtIndex(const std::vector<Reservation>& reservations, Ns hyper) : hyper_(hyper) {
    starts_.reserve(reservations.size());
    ends_.reserve(reservations.size());
    for (const Reservation& r : reservations) {
        starts_.push_back(r.start);
        ends_.push_back(r.start + r.len);
    }
    prefix_.resize(starts_.size() + 1, 0);
    for (size_t i = 0; i < starts_.size(); ++i) {
        prefix_[i + 1] = prefix_[i] + (ends_[i] - starts_[i]);
    }
    total_closed_ = prefix_.empty() ? 0 : prefix_.back();
}

Ns LinkTtIndex::covered_until(Ns x) const {
    // Closed time in [0, x), x may reach 2 * hyper thanks to periodicity.
    const std::int64_t full = x / hyper_;
    const Ns rem = x % hyper_;
    Ns v = full * total_closed_;
    const size_t i = static_cast<size_t>(
        std::upper_bound(starts_.begin(), starts_.end(), rem - 1) - starts_.begin());
    v += prefix_[i];
    if (i > 0 && ends_[i - 1] > rem) {
        v -= ends_[i - 1] - rem;
    }
    return v;
}

Ns LinkTtIndex::closed_time_max(Ns w) const {
    if (w <= 0 || starts_.empty()) {
        return 0;
    }
    const std::int64_t full = w / hyper_;
    const Ns rem = w % hyper_;
    Ns best = full * total_closed_;
    if (rem == 0) {
        return best;
    }
    Ns slide = 0;
    auto consider = [&](Ns t) {
        t %= hyper_;
        if (t < 0) {
            t += hyper_;
        }
        slide = std::max(slide, covered_until(t + rem) - covered_until(t));
    };
    consider(0);
    for (size_t i = 0; i < starts_.size(); ++i) {
        consider(starts_[i]);
        consider(ends_[i]);
        consider(starts_[i] - rem);
        consider(ends_[i] - rem);
    }
    return best + slide;
}

std::int64_t LinkTtIndex::max_intersections(Ns w) const {
    if (w <= 0 || starts_.empty()) {
        return 0;
    }
    const std::int64_t n = static_cast<std::int64_t>(starts_.size());
    const std::int64_t full = w / hyper_;
    const Ns rem = w % hyper_;
    std::int64_t best = full * n + (full > 0 ? 1 : 0);  // +1 covers a straddling window
    if (rem == 0) {
        return best;
    }
    auto starts_before = [&](Ns x) -> std::int64_t {
        const std::int64_t f = x / hyper_;
        const Ns r = x % hyper_;
        return f * n + (std::lower_bound(starts_.begin(), starts_.end(), r) - starts_.begin());
    };
    auto ends_at_or_before = [&](Ns t) -> std::int64_t {
        return std::upper_bound(ends_.begin(), ends_.end(), t) - ends_.begin();
    };
    std::int64_t slide = 0;
    auto consider = [&](Ns t) {
        t %= hyper_;
        if (t < 0) {
            t += hyper_;
        }
        slide = std::max(slide, starts_before(t + rem) - ends_at_or_before(t));
    };
    consider(0);
    for (size_t i = 0; i < starts_.size(); ++i) {
        consider(starts_[i] - rem + 1);
        consider(ends_[i] - 1);
    }
    return full * n + slide + (full > 0 ? 1 : 0);
}

Ns closed_time_max(int link, const TtSchedule& schedule, Ns w) {
    LinkTtIndex idx(schedule.link_reservations(link), schedule.hyperperiod());
    return idx.closed_time_max(w);
}

std::string rta_report_csv(const RtaReport& report, const std::vector<Flow>& flows) {
    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }
    std::ostringstream os;
    os << "flow,class,rt_ns,ddl_ns,feasible,hops\n";
    for (const RtaFlowEntry& e : report.entries) {
        os << e.flow << ',' << class_name(e.cls) << ',';
        if (e.feasible) {
            os << e.rt;
        }
        os << ',' << by_id.at(e.flow)->ddl << ',' << (e.feasible ? 1 : 0) << ',';
        for (size_t i = 0; i < e.hops.size(); ++i) {
            if (i) {
                os << ';';
            }
            os << e.hops[i].bound;
        }
        os << '\n';
    }
    return os.str();
}

RtaContext::RtaContext(const Network& net, const std::vector<Flow>& flows,
                       const std::map<int, PriorityClass>& assigned, const TtSchedule& schedule,
                       const Config& cfg)
    : net_(&net), cfg_(&cfg), schedule_(&schedule) {
    traffic_.resize(static_cast<size_t>(net.link_count()));
    tt_.reserve(traffic_.size());
    tt_memo_.resize(traffic_.size());
    for (int li = 0; li < net.link_count(); ++li) {
        tt_.emplace_back(schedule.link_reservations(li), schedule.hyperperiod());
    }
    for (const Flow& f : flows) {
        flows_[f.id] = &f;
    }
    for (const auto& [id, cls] : assigned) {
        classes_[id] = cls;
        const Flow& f = *flows_.at(id);
        if (cls == PriorityClass::AvbA || cls == PriorityClass::AvbB) {
            const int slot = cls == PriorityClass::AvbA ? 0 : 1;
            for (size_t h = 0; h < f.route.size(); ++h) {
                const Link& l = net.link(f.route[h]);
                traffic_[static_cast<size_t>(f.route[h])].avb[slot].push_back(
                    {f.id, f.period, transmission_time(f.size_b, l, cfg.frame_overhead),
                     static_cast<int>(h)});
            }
            jitter_[id].assign(f.route.size(), 0);
        } else if (cls == PriorityClass::BE) {
            for (int li : f.route) {
                traffic_[static_cast<size_t>(li)].has_be = true;
            }
        }
    }
}

const Flow& RtaContext::flow(int id) const {
    auto it = flows_.find(id);
    if (it == flows_.end()) {
        throw ArgumentError("unknown flow id " + std::to_string(id));
    }
    return *it->second;
}

PriorityClass RtaContext::assigned_class(int flow_id) const {
    return classes_.at(flow_id);
}

void RtaContext::set_class(int flow_id, PriorityClass cls) {
    const Flow& f = flow(flow_id);
    const PriorityClass old = classes_.at(flow_id);
    if (old == cls) {
        return;
    }
    auto strip = [&](int slot) {
        for (int li : f.route) {
            auto& v = traffic_[static_cast<size_t>(li)].avb[slot];
            v.erase(std::remove_if(v.begin(), v.end(),
                                   [flow_id](const LinkEntry& e) { return e.flow == flow_id; }),
                    v.end());
        }
    };
    if (old == PriorityClass::AvbA) strip(0);
    if (old == PriorityClass::AvbB) strip(1);
    if (cls == PriorityClass::AvbA || cls == PriorityClass::AvbB) {
        const int slot = cls == PriorityClass::AvbA ? 0 : 1;
        for (size_t h = 0; h < f.route.size(); ++h) {
            const Link& l = net_->link(f.route[h]);
            traffic_[static_cast<size_t>(f.route[h])].avb[slot].push_back(
                {f.id, f.period, transmission_time(f.size_b, l, cfg_->frame_overhead),
                 static_cast<int>(h)});
        }
        if (!jitter_.count(flow_id)) {
            jitter_[flow_id].assign(f.route.size(), 0);
        }
    }
    classes_[flow_id] = cls;
}

Ns RtaContext::arrival_jitter(const LinkEntry& e) const {
    if (e.hop_index == 0) {
        return 0;  // source release is exactly periodic
    }
    auto it = jitter_.find(e.flow);
    if (it == jitter_.end()) {
        return 0;
    }
    // A frame of an admitted flow can never lag a full period behind its
    // earliest possible arrival, so the burst allowance is capped there.
    return std::min(it->second[static_cast<size_t>(e.hop_index)], e.period);
}

bool RtaContext::lower_class_present(const LinkTraffic& t, PriorityClass cls) const {
    if (cls == PriorityClass::AvbA) {
        return !t.avb[1].empty() || t.has_be;
    }
    return t.has_be;
}

// Busy-window fixpoint for one hop.
//
//   W = ceil((B + H + Q + closed + resume) * R / idleSlope) + C_own
//
// B charges one non-preemptable hold-over per blocking opportunity (one ahead
// of the window plus one per interfering frame, since every credit-recovery
// gap can admit a lower-class frame whose tail must drain). H and Q are the
// higher-class and same-class demands, each counted as ceil((W + J)/T) where
// J is the competitor's accumulated upstream queuing slack (see
// refine_jitter). `closed` is the exact worst-case TT gate closure, and
// `resume` pays one fragment header per preemption a frame ahead of us may
// suffer.
std::optional<Ns> RtaContext::hop_bound(const Flow& f, Ns c_own, size_t hop_index,
                                        PriorityClass cls, const std::vector<int>* member_set,
                                        Ns bound) const {
    const int li = f.route[hop_index];
    const Link& link = net_->link(li);
    const LinkTraffic& t = traffic_[static_cast<size_t>(li)];
    const LinkTtIndex& tt = tt_[static_cast<size_t>(li)];
    auto& memo = tt_memo_[static_cast<size_t>(li)];

    const std::int64_t slope = cls == PriorityClass::AvbA ? cfg_->idle_slope_a(link.rate_bps)
                                                          : cfg_->idle_slope_b(link.rate_bps);
    if (slope <= 0 || slope >= link.rate_bps) {
        throw ConfigError("idle slope must lie strictly between 0 and the link rate");
    }

    Ns b_np = 0;
    if (cfg_->preemption) {
        b_np = wire_time(cfg_->np_residue_b + cfg_->frag_overhead_b, link.rate_bps);
    } else if (lower_class_present(t, cls)) {
        b_np = wire_time(cfg_->max_lp_frame_b, link.rate_bps);
    }
    const Ns frag_wire = cfg_->preemption ? wire_time(cfg_->frag_overhead_b, link.rate_bps) : 0;

    const bool member_filter = member_set != nullptr;
    auto in_set = [&](int id) {
        return std::find(member_set->begin(), member_set->end(), id) != member_set->end();
    };

    Ns w = c_own;
    for (;;) {
        Ns demand = 0;
        std::int64_t frames = 0;   // same + higher class frames in the window
        std::int64_t higher = 0;   // higher-class frames only
        const int own_slot = cls == PriorityClass::AvbA ? 0 : 1;
        for (const LinkEntry& e : t.avb[own_slot]) {
            if (e.flow == f.id) {
                continue;
            }
            if (member_filter && !in_set(e.flow)) {
                continue;
            }
            const std::int64_t n = ceil_div(w + arrival_jitter(e), e.period);
            demand += n * e.c_wire;
            frames += n;
        }
        if (cls == PriorityClass::AvbB) {
            for (const LinkEntry& e : t.avb[0]) {
                const std::int64_t n = ceil_div(w + arrival_jitter(e), e.period);
                demand += n * e.c_wire;
                frames += n;
                higher += n;
            }
        }

        Ns closed;
        std::int64_t tt_windows;
        if (auto it = memo.find(w); it != memo.end()) {
            closed = it->second.first;
            tt_windows = it->second.second;
        } else {
            closed = tt.closed_time_max(w);
            tt_windows = tt.max_intersections(w);
            memo.emplace(w, std::make_pair(closed, tt_windows));
        }

        const __int128 numerator = static_cast<__int128>(b_np) * (1 + frames) + demand + closed +
                                   static_cast<__int128>(frag_wire) * (tt_windows + higher);
        const __int128 scaled =
            (numerator * link.rate_bps + slope - 1) / slope;  // ceil(num * R / slope)
        const Ns next = static_cast<Ns>(scaled) + c_own;
        if (next > bound) {
            return std::nullopt;
        }
        if (next <= w) {
            return w;
        }
        w = next;
    }
}

RtaFlowEntry RtaContext::rt_avb(int flow_id) const {
    const Flow& f = flow(flow_id);
    const PriorityClass cls = classes_.at(flow_id);
    if (cls != PriorityClass::AvbA && cls != PriorityClass::AvbB) {
        throw ArgumentError("rt_avb expects an AVB class flow");
    }
    RtaFlowEntry entry;
    entry.flow = flow_id;
    entry.cls = cls;
    Ns total = 0;
    for (size_t h = 0; h < f.route.size(); ++h) {
        const Link& link = net_->link(f.route[h]);
        const Ns c = transmission_time(f.size_b, link, cfg_->frame_overhead);
        auto hop = hop_bound(f, c, h, cls, nullptr, f.ddl);
        if (!hop) {
            entry.feasible = false;
            return entry;
        }
        entry.hops.push_back({f.route[h], *hop});
        total += *hop;
        total += link.propagation;
        if (h + 1 < f.route.size()) {
            total += link.proc_delay;
        }
        if (total > f.ddl) {
            entry.feasible = false;
            return entry;
        }
    }
    entry.feasible = true;
    entry.rt = total;
    return entry;
}

Ns RtaContext::rt_tt(int flow_id) const {
    const Flow& f = flow(flow_id);
    const FlowPlacement& p = schedule_->placement(flow_id);
    const Link& last = net_->link(f.route.back());
    return p.window_start.back() + p.window_len.back() + last.propagation;
}

void RtaContext::refine_jitter(int max_passes) {
    for (const auto& [id, cls] : classes_) {
        if (cls != PriorityClass::AvbA && cls != PriorityClass::AvbB) {
            continue;
        }
        const Flow& f = *flows_.at(id);
        auto& est = hop_est_[id];
        if (est.size() != f.route.size()) {
            est.assign(f.route.size(), 0);
            for (size_t h = 0; h < f.route.size(); ++h) {
                est[h] =
                    transmission_time(f.size_b, net_->link(f.route[h]), cfg_->frame_overhead);
            }
        }
    }

    bool converged = false;
    for (int pass = 0; pass < max_passes && !converged; ++pass) {
        converged = true;
        for (const auto& [id, cls] : classes_) {
            if (cls != PriorityClass::AvbA && cls != PriorityClass::AvbB) {
                continue;
            }
            const Flow& f = *flows_.at(id);
            auto& est = hop_est_.at(id);
            auto& jit = jitter_.at(id);
            Ns cum = 0;
            for (size_t h = 0; h < f.route.size(); ++h) {
                jit[h] = cum;
                const Ns c =
                    transmission_time(f.size_b, net_->link(f.route[h]), cfg_->frame_overhead);
                auto b = hop_bound(f, c, h, cls, nullptr, f.ddl);
                const Ns v = b ? *b : f.ddl;  // divergent hops saturate at the deadline
                if (v > est[h]) {
                    est[h] = v;
                    converged = false;
                }
                cum += est[h] - c;
            }
        }
    }
    if (!converged) {
        // Estimates were still moving at the pass cap. Saturate everything:
        // the jitter consumers clamp at one period, so this stays a sound
        // (very pessimistic) state and the affected flows report infeasible.
        for (const auto& [id, cls] : classes_) {
            if (cls != PriorityClass::AvbA && cls != PriorityClass::AvbB) {
                continue;
            }
            const Flow& f = *flows_.at(id);
            auto& est = hop_est_.at(id);
            auto& jit = jitter_.at(id);
            Ns cum = 0;
            for (size_t h = 0; h < f.route.size(); ++h) {
                jit[h] = cum;
                est[h] = f.ddl;
                const Ns c =
                    transmission_time(f.size_b, net_->link(f.route[h]), cfg_->frame_overhead);
                cum += est[h] - c;
            }
        }
    }
}

std::optional<Ns> RtaContext::rt_of_set(const std::vector<int>& member_ids) const {
    if (member_ids.empty()) {
        throw ArgumentError("rt_of_set needs a non-empty set");
    }
    // Head = smallest deadline, flow id breaking ties.
    int head = member_ids.front();
    for (int id : member_ids) {
        const Flow& a = flow(id);
        const Flow& h = flow(head);
        if (a.ddl < h.ddl || (a.ddl == h.ddl && a.id < h.id)) {
            head = id;
        }
    }
    const Flow& f = flow(head);
    const PriorityClass cls = classes_.at(head);
    Ns total = 0;
    for (size_t h = 0; h < f.route.size(); ++h) {
        const Link& link = net_->link(f.route[h]);
        const Ns c = transmission_time(f.size_b, link, cfg_->frame_overhead);
        auto hop = hop_bound(f, c, h, cls, &member_ids, f.ddl);
        if (!hop) {
            return std::nullopt;
        }
        total += *hop;
        total += link.propagation;
        if (h + 1 < f.route.size()) {
            total += link.proc_delay;
        }
        if (total > f.ddl) {
            return std::nullopt;
        }
    }
    return total;
}

} // namespace tsn
