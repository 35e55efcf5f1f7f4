#include "tsn/tt_schedule.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "tsn/errors.hpp"

namespace tsn {

namespace {

bool overlaps(Ns a1, Ns e1, Ns a2, Ns e2) {
    return a1 < e2 && a2 < e1;
}

} // namespace

const FlowPlacement& TtSchedule::placement(int flow_id) const {
    auto it = placements_.find(flow_id);
    if (it == placements_.end()) {
        throw ArgumentError("flow " + std::to_string(flow_id) + " is not in the TT schedule");
    }
    return it->second;
}

void TtSchedule::insert(const Reservation& r) {
    auto& v = per_link_[static_cast<size_t>(r.link)];
    auto it = std::upper_bound(v.begin(), v.end(), r.start,
                               [](Ns s, const Reservation& x) { return s < x.start; });
    v.insert(it, r);
}

void TtSchedule::remove_flow(int flow_id) {
    for (auto& v : per_link_) {
        v.erase(std::remove_if(v.begin(), v.end(),
                               [flow_id](const Reservation& r) { return r.flow == flow_id; }),
                v.end());
    }
    placements_.erase(flow_id);
}

void TtSchedule::merge_from(const TtSchedule& other) {
    if (hyperperiod_ != other.hyperperiod_) {
        throw ArgumentError("cannot merge schedules with different hyperperiods");
    }
    for (size_t li = 0; li < per_link_.size(); ++li) {
        if (other.per_link_[li].empty()) {
            continue;
        }
        if (!per_link_[li].empty()) {
            throw ArgumentError("merge expects disjoint link usage");
        }
        per_link_[li] = other.per_link_[li];
    }
    for (const auto& [id, p] : other.placements_) {
        placements_[id] = p;
    }
}

Ns guard_pad(const Link& link, const Config& cfg) {
    if (!cfg.tt_guard_pad) {
        return 0;
    }
    return wire_time(cfg.np_residue_b + cfg.frag_overhead_b, link.rate_bps);
}

Ns reservation_len(const Flow& f, const Link& link, const Config& cfg) {
    return guard_pad(link, cfg) + transmission_time(f.size_b, link, cfg.frame_overhead);
}

namespace {

struct HopPlan {
    Ns start = 0;
    Ns len = 0;
    Ns arrival = 0;
    int queue = 0;
};

// Earliest start on one link at or after `lb` such that every periodic
// instance clears the existing reservations and one TT queue accepts the
// frame without interleaving. Candidate starts advance over reservation end
// points only, so the search is event driven. On the first hop the talker
// paces the frame into the queue at the window start itself, so the
// residency interval follows the candidate.
bool place_hop(const Flow& f, int link_index, Ns lb, Ns arrival, bool paced, Ns len, Ns period,
               const TtSchedule& schedule, HopPlan& out) {
    const Ns hyper = schedule.hyperperiod();
    const std::int64_t instance_count = hyper / period;
    const auto& existing = schedule.link_reservations(link_index);

    Ns s = lb;
    while (s + len <= period) {
        // Link constraint over all instance images.
        Ns pushed = s;
        for (std::int64_t k = 0; k < instance_count; ++k) {
            const Ns ws = k * period + s;
            const Ns we = ws + len;
            auto it = std::upper_bound(existing.begin(), existing.end(), ws,
                                       [](Ns v, const Reservation& r) { return v < r.start; });
            // Step back to the reservation that may still cover ws.
            if (it != existing.begin()) {
                --it;
                if (it->start + it->len <= ws) {
                    ++it;
                }
            }
            for (; it != existing.end() && it->start < we; ++it) {
                if (overlaps(ws, we, it->start, it->start + it->len)) {
                    pushed = std::max(pushed, it->start + it->len - k * period);
                }
            }
        }
        if (pushed != s) {
            s = pushed;
            continue;
        }

        // Deterministic-queue constraint: frames sharing a TT queue must not
        // reside in it at the same time, i.e. their [earliest arrival,
        // window end) spans must not overlap. Greedy queue 0, then queue 1.
        const Ns qa_off = paced ? s : arrival;
        int chosen = -1;
        for (int q = 0; q < 2 && chosen < 0; ++q) {
            bool ok = true;
            for (const Reservation& r : existing) {
                if (r.tt_queue != q || r.flow == f.id) {
                    continue;
                }
                for (std::int64_t k = 0; k < instance_count && ok; ++k) {
                    const Ns qa = k * period + qa_off;
                    const Ns qe = k * period + s + len;
                    if (overlaps(qa, qe, r.queue_arrival, r.start + r.len)) {
                        ok = false;
                    }
                }
                if (!ok) {
                    break;
                }
            }
            if (ok) {
                chosen = q;
            }
        }
        if (chosen >= 0) {
            out.start = s;
            out.len = len;
            out.arrival = qa_off;
            out.queue = chosen;
            return true;
        }

        // Both queues rejected: push to the next reservation-end event.
        Ns next = period;  // sentinel meaning no candidate
        for (const Reservation& r : existing) {
            for (std::int64_t k = 0; k < instance_count; ++k) {
                const Ns cand = r.start + r.len - k * period;
                if (cand > s && cand < next) {
                    next = cand;
                }
            }
        }
        if (next + len > period) {
            return false;
        }
        s = next;
    }
    return false;
}

} // namespace

bool asap_add(const Flow& f, const Network& net, const Config& cfg, TtSchedule& schedule) {
    if (schedule.hyperperiod() % f.period != 0) {
        throw ArgumentError("flow period does not divide the hyperperiod");
    }
    std::vector<HopPlan> plan;
    plan.reserve(f.route.size());

    // Two arrival notions per hop: the latest possible arrival (previous
    // window end, i.e. worst-case hold-over) lower-bounds the next window so
    // the sequential-order constraint is safe, while the earliest possible
    // arrival (previous window start + wire time) opens the queue-residency
    // interval - a frame running ahead of its worst case must still find its
    // queue silent until its own gate opens. On the first hop the talker
    // itself launches the frame at the window start.
    Ns lb = 0;        // flow-transmission lower bound for the window start
    Ns earliest = 0;  // earliest time the frame can reach this egress queue
    for (size_t h = 0; h < f.route.size(); ++h) {
        const int li = f.route[h];
        const Link& link = net.link(li);
        const Ns len = reservation_len(f, link, cfg);
        const Ns c = transmission_time(f.size_b, link, cfg.frame_overhead);
        HopPlan hp;
        if (!place_hop(f, li, lb, earliest, h == 0, len, f.period, schedule, hp)) {
            return false;
        }
        plan.push_back(hp);
        lb = hp.start + hp.len + link.propagation + link.proc_delay;
        earliest = hp.start + c + link.propagation + link.proc_delay;
    }

    const Link& last = net.link(f.route.back());
    const Ns finish = plan.back().start + plan.back().len + last.propagation;
    if (finish > f.ddl) {
        return false;
    }

    FlowPlacement placement;
    for (size_t h = 0; h < f.route.size(); ++h) {
        const HopPlan& hp = plan[h];
        placement.window_start.push_back(hp.start);
        placement.window_len.push_back(hp.len);
        placement.queue.push_back(hp.queue);
        placement.arrival.push_back(hp.arrival);
        const std::int64_t instance_count = schedule.hyperperiod() / f.period;
        for (std::int64_t k = 0; k < instance_count; ++k) {
            Reservation r;
            r.link = f.route[h];
            r.flow = f.id;
            r.instance = static_cast<int>(k);
            r.start = k * f.period + hp.start;
            r.len = hp.len;
            r.tt_queue = hp.queue;
            r.queue_arrival = k * f.period + hp.arrival;
            schedule.insert(r);
        }
    }
    schedule.set_placement(f.id, std::move(placement));
    return true;
}

std::vector<int> asap_schedule(std::vector<const Flow*> tt_flows, const Network& net,
                               const Config& cfg, TtSchedule& schedule) {
    std::sort(tt_flows.begin(), tt_flows.end(), [](const Flow* a, const Flow* b) {
        if (a->period != b->period) return a->period < b->period;
        if (a->ddl != b->ddl) return a->ddl < b->ddl;
        return a->id < b->id;
    });
    std::vector<int> failed;
    for (const Flow* f : tt_flows) {
        if (!asap_add(*f, net, cfg, schedule)) {
            failed.push_back(f->id);
        }
    }
    return failed;
}

std::vector<ConstraintViolation> check_constraints(const TtSchedule& schedule, const Network& net,
                                                   const std::vector<Flow>& flows) {
    std::vector<ConstraintViolation> out;
    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }

    for (const auto& [fid, p] : schedule.placements()) {
        auto it = by_id.find(fid);
        if (it == by_id.end()) {
            out.push_back({"frame", -1, fid, -1, 0, "scheduled flow missing from flow set"});
            continue;
        }
        const Flow& f = *it->second;
        for (size_t h = 0; h < p.window_start.size(); ++h) {
            if (p.window_start[h] < 0 || p.window_start[h] + p.window_len[h] > f.period) {
                out.push_back({"frame", f.route[h], fid, -1, p.window_start[h],
                               "window outside the period"});
            }
        }
        for (size_t h = 0; h + 1 < p.window_start.size(); ++h) {
            const Link& l = net.link(f.route[h]);
            const Ns earliest = p.window_start[h] + p.window_len[h] + l.propagation + l.proc_delay;
            if (p.window_start[h + 1] < earliest) {
                out.push_back({"flow-transmission", f.route[h + 1], fid, -1,
                               p.window_start[h + 1], "offset precedes upstream completion"});
            }
        }
    }

    for (int li = 0; li < net.link_count(); ++li) {
        const auto& v = schedule.link_reservations(li);
        for (size_t i = 0; i + 1 < v.size(); ++i) {
            if (overlaps(v[i].start, v[i].start + v[i].len, v[i + 1].start,
                         v[i + 1].start + v[i + 1].len)) {
                out.push_back({"link", li, v[i].flow, v[i + 1].flow, v[i + 1].start,
                               "reservations overlap"});
            }
        }
        for (size_t i = 0; i < v.size(); ++i) {
            for (size_t j = i + 1; j < v.size(); ++j) {
                if (v[i].flow == v[j].flow || v[i].tt_queue != v[j].tt_queue) {
                    continue;
                }
                if (overlaps(v[i].queue_arrival, v[i].start + v[i].len, v[j].queue_arrival,
                             v[j].start + v[j].len)) {
                    out.push_back({"queue", li, v[i].flow, v[j].flow, v[j].queue_arrival,
                                   "same-queue residency intervals interleave"});
                }
            }
        }
    }
    return out;
}

std::vector<PortGcl> emit_gcl(const TtSchedule& schedule, const Network& net) {
    constexpr std::uint8_t kAvbOpen = 0b11111100;  // TT gates shut, everything else open

    std::vector<PortGcl> out;
    for (int li = 0; li < net.link_count(); ++li) {
        PortGcl port;
        port.link = li;
        const auto& v = schedule.link_reservations(li);
        std::vector<GclEntry> entries;
        entries.push_back({0, kAvbOpen});
        for (const Reservation& r : v) {
            const std::uint8_t gates = static_cast<std::uint8_t>(1u << r.tt_queue);
            entries.push_back({r.start, gates});
            entries.push_back({r.start + r.len, kAvbOpen});
        }
        std::sort(entries.begin(), entries.end(),
                  [](const GclEntry& a, const GclEntry& b) { return a.t < b.t; });
        // Resolve same-time groups first: where a window ends exactly at the
        // next window's start, the window state wins over the reopen. Then
        // drop entries that do not change the gate state.
        std::vector<GclEntry> merged;
        size_t i = 0;
        while (i < entries.size()) {
            std::uint8_t state = entries[i].gates;
            size_t j = i;
            while (j + 1 < entries.size() && entries[j + 1].t == entries[i].t) {
                ++j;
                if (entries[j].gates != kAvbOpen) {
                    state = entries[j].gates;
                }
            }
            if (merged.empty() || merged.back().gates != state) {
                merged.push_back({entries[i].t, state});
            }
            i = j + 1;
        }
        port.entries = std::move(merged);
        out.push_back(std::move(port));
    }
    return out;
}

std::vector<std::pair<Ns, Ns>> gcl_open_intervals(const PortGcl& gcl, int queue, Ns cycle) {
    std::vector<std::pair<Ns, Ns>> out;
    const auto& e = gcl.entries;
    for (size_t i = 0; i < e.size(); ++i) {
        if ((e[i].gates >> queue) & 1u) {
            const Ns from = e[i].t;
            const Ns to = (i + 1 < e.size()) ? e[i + 1].t : cycle;
            if (!out.empty() && out.back().second == from) {
                out.back().second = to;
            } else {
                out.push_back({from, to});
            }
        }
    }
    return out;
}

std::string gcl_to_json_text(const std::vector<PortGcl>& gcls, const Network& net) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const PortGcl& p : gcls) {
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const GclEntry& e : p.entries) {
            std::string bits(8, '0');
            for (int q = 0; q < kQueueCount; ++q) {
                if ((e.gates >> q) & 1u) {
                    bits[static_cast<size_t>(q)] = '1';
                }
            }
            entries.push_back({{"t_ns", e.t}, {"gates", bits}});
        }
        j.push_back({{"port", net.link_name(p.link)}, {"entries", entries}});
    }
    return j.dump(2) + "\n";
}

std::vector<PortGcl> gcl_from_json_text(const std::string& text, const Network& net, Ns cycle) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        throw ConfigError("malformed GCL document");
    }
    std::map<std::string, int> by_name;
    for (int li = 0; li < net.link_count(); ++li) {
        by_name[net.link_name(li)] = li;
    }
    std::vector<PortGcl> out;
    for (const auto& pj : j) {
        PortGcl p;
        auto it = by_name.find(pj.at("port").get<std::string>());
        if (it == by_name.end()) {
            throw ConfigError("GCL references unknown port");
        }
        p.link = it->second;
        Ns prev = -1;
        for (const auto& ej : pj.at("entries")) {
            GclEntry e;
            e.t = ej.at("t_ns").get<std::int64_t>();
            const std::string bits = ej.at("gates").get<std::string>();
            if (bits.size() != 8) {
                throw ConfigError("GCL gate string must have 8 bits");
            }
            for (int q = 0; q < kQueueCount; ++q) {
                if (bits[static_cast<size_t>(q)] == '1') {
                    e.gates |= static_cast<std::uint8_t>(1u << q);
                }
            }
            if (e.t <= prev || e.t >= cycle) {
                if (!(prev == -1 && e.t == 0)) {
                    throw ConfigError("GCL entries must be strictly time-sorted within the cycle");
                }
            }
            prev = e.t;
            p.entries.push_back(e);
        }
        if (p.entries.empty() || p.entries.front().t != 0) {
            throw ConfigError("GCL must start with an entry at t=0");
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace tsn
