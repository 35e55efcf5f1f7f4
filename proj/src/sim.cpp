#include "tsn/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>

#include "json.hpp"
#include "tsn/errors.hpp"
#include "tsn/rng.hpp"

namespace tsn {

namespace {

constexpr Ns kInf = std::numeric_limits<Ns>::max() / 4;

int queue_rank(int queue) {
    if (queue <= kQueueTt1) return 0;
    if (queue == kQueueA) return 1;
    if (queue == kQueueB) return 2;
    return 3;
}

struct GateTable {
    Ns cycle = 0;
    std::array<std::vector<std::pair<Ns, Ns>>, kQueueCount> open;

    bool is_open(int q, Ns t) const {
        const Ns r = t % cycle;
        const auto& v = open[static_cast<size_t>(q)];
        auto it = std::upper_bound(v.begin(), v.end(), r,
                                   [](Ns x, const auto& iv) { return x < iv.first; });
        if (it == v.begin()) {
            return false;
        }
        --it;
        return r < it->second;
    }

    Ns next_open_at(int q, Ns t) const {
        const auto& v = open[static_cast<size_t>(q)];
        if (v.empty()) {
            return kInf;
        }
        const Ns base = t - t % cycle;
        const Ns r = t % cycle;
        for (const auto& iv : v) {
            if (r < iv.second) {
                return base + std::max(r, iv.first);
            }
        }
        return base + cycle + v.front().first;
    }

    // End of the open interval containing t (absolute); caller ensures open.
    Ns close_after(int q, Ns t) const {
        const Ns base = t - t % cycle;
        const Ns r = t % cycle;
        const auto& v = open[static_cast<size_t>(q)];
        for (const auto& iv : v) {
            if (r >= iv.first && r < iv.second) {
                return base + iv.second;
            }
        }
        return t;
    }
};

struct SimFrame {
    int flow_index = -1;  // into injected flow table
    int k = 0;            // release index
    Ns release = 0;
    int hop = 0;
    std::int64_t bytes_left = 0;
    bool fragment = false;
};

struct Injected {
    const Flow* flow = nullptr;
    PriorityClass cls = PriorityClass::BE;
    std::vector<Ns> releases;
    std::vector<int> queues;  // per hop
    Ns launch_offset = 0;     // talker pacing: TT frames enter the queue at their window
    bool synthetic = false;   // Poisson background, no stats entry
    int stats_id = -1;
};

enum class EvKind { Release, Arrive, TxEnd, Wake };

struct Event {
    Ns t = 0;
    std::uint64_t seq = 0;
    EvKind kind = EvKind::Release;
    int port = -1;      // link index for Arrive/TxEnd/Wake
    int frame = -1;     // frame pool index for Release/Arrive
    std::uint64_t ver = 0;

    bool operator>(const Event& o) const {
        if (t != o.t) return t > o.t;
        return seq > o.seq;
    }
};

struct PortSim {
    std::array<std::deque<int>, kQueueCount> q;
    std::int64_t credit[2] = {0, 0};  // accumulated in bps * ns
    Ns credit_at = 0;
    int inflight = -1;
    int inflight_queue = -1;
    Ns tx_start = 0;
    Ns tx_end = 0;
    std::uint64_t tx_ver = 0;
    bool cut_pending = false;
    std::int64_t cut_rem_bytes = 0;  // remainder after the pending cut
    Ns wake_at = kInf;
    std::uint64_t wake_ver = 0;
    GateTable gates;
};

class Engine {
public:
    Engine(const Network& net, const std::vector<Injected>& injected, const TtSchedule& schedule,
           const std::vector<PortGcl>& gcls, const Config& cfg, const SimOptions& opts)
        : net_(net), injected_(injected), schedule_(schedule), cfg_(cfg), opts_(opts) {
        ports_.resize(static_cast<size_t>(net.link_count()));
        for (auto& p : ports_) {
            p.gates.cycle = schedule.hyperperiod();
        }
        for (const PortGcl& g : gcls) {
            auto& gt = ports_[static_cast<size_t>(g.link)].gates;
            for (int q = 0; q < kQueueCount; ++q) {
                gt.open[static_cast<size_t>(q)] =
                    gcl_open_intervals(g, q, schedule.hyperperiod());
            }
        }
        Ns last_release = 0;
        for (size_t i = 0; i < injected_.size(); ++i) {
            for (size_t k = 0; k < injected_[i].releases.size(); ++k) {
                const Ns t = injected_[i].releases[k];
                last_release = std::max(last_release, t);
                frames_.push_back({static_cast<int>(i), static_cast<int>(k), t, 0, 0, false});
                push({t + injected_[i].launch_offset, 0, EvKind::Release, -1,
                      static_cast<int>(frames_.size()) - 1, 0});
            }
        }
        // Frames that cannot drain within this many extra hyperperiods are
        // declared stranded instead of spinning the event loop forever.
        drain_limit_ = last_release + 64 * schedule.hyperperiod();
    }

    void run(SimResult& out) {
        while (!events_.empty()) {
            Event ev = events_.top();
            events_.pop();
            switch (ev.kind) {
            case EvKind::Release:
            case EvKind::Arrive:
                handle_arrive(ev);
                break;
            case EvKind::TxEnd:
                if (ev.ver == ports_[static_cast<size_t>(ev.port)].tx_ver) {
                    handle_tx_end(ev);
                }
                break;
            case EvKind::Wake: {
                PortSim& p = ports_[static_cast<size_t>(ev.port)];
                if (ev.ver == p.wake_ver) {
                    p.wake_at = kInf;
                    try_start(ev.port, ev.t);
                }
                break;
            }
            }
        }
        finish(out);
    }

private:
    void push(Event ev) {
        ev.seq = ++seq_;
        events_.push(ev);
    }

    const Flow& flow_of(const SimFrame& fr) const { return *injected_[fr.flow_index].flow; }

    std::int64_t full_wire_bytes(const SimFrame& fr) const {
        return cfg_.wire_bytes(flow_of(fr).size_b);
    }

    void trace(Ns t, int port, const char* event, int frame, std::int64_t bytes) {
        if (!opts_.collect_trace) {
            return;
        }
        const Injected& inj = injected_[frames_[static_cast<size_t>(frame)].flow_index];
        trace_ << t << ',' << (port >= 0 ? net_.link_name(port) : "-") << ',' << event << ','
               << inj.stats_id << ',' << bytes << '\n';
    }

    void advance_credits(PortSim& p, int link, Ns t) {
        const Ns dt = t - p.credit_at;
        if (dt <= 0) {
            return;
        }
        const std::int64_t rate = net_.link(link).rate_bps;
        const std::int64_t idle[2] = {cfg_.idle_slope_a(rate), cfg_.idle_slope_b(rate)};
        for (int c = 0; c < 2; ++c) {
            const int queue = c == 0 ? kQueueA : kQueueB;
            if (p.inflight >= 0 && p.inflight_queue == queue) {
                p.credit[c] += (idle[c] - rate) * dt;
            } else if (!p.q[static_cast<size_t>(queue)].empty()) {
                p.credit[c] += idle[c] * dt;
            } else if (p.credit[c] < 0) {
                p.credit[c] = std::min<std::int64_t>(0, p.credit[c] + idle[c] * dt);
            } else {
                p.credit[c] = 0;  // positive credit does not survive an empty queue
            }
        }
        p.credit_at = t;
    }

    bool queue_eligible(const PortSim& p, int link, int q, Ns t, bool lookahead) const {
        if (p.q[static_cast<size_t>(q)].empty() || !p.gates.is_open(q, t)) {
            return false;
        }
        if ((q == kQueueA || q == kQueueB) && p.credit[q == kQueueA ? 0 : 1] < 0) {
            return false;
        }
        if (lookahead && queue_rank(q) > 0) {
            const SimFrame& fr = frames_[static_cast<size_t>(p.q[static_cast<size_t>(q)].front())];
            const Ns end = t + wire_time(fr.bytes_left, net_.link(link).rate_bps);
            if (end > p.gates.close_after(q, t)) {
                return false;
            }
        }
        return true;
    }

    void start_tx(int link, PortSim& p, int q, Ns t) {
        const int fi = p.q[static_cast<size_t>(q)].front();
        p.q[static_cast<size_t>(q)].pop_front();
        SimFrame& fr = frames_[static_cast<size_t>(fi)];
        p.inflight = fi;
        p.inflight_queue = q;
        p.tx_start = t;
        p.tx_end = t + wire_time(fr.bytes_left, net_.link(link).rate_bps);
        p.cut_pending = false;
        ++p.tx_ver;
        push({p.tx_end, 0, EvKind::TxEnd, link, -1, p.tx_ver});
        trace(t, link, "tx_start", fi, fr.bytes_left);
    }

    // Cut the in-flight preemptable frame as soon as the fragmenting rules
    // allow: at least 64 bytes on the wire, at least 64 left for the resumed
    // fragment, otherwise the frame just completes.
    void maybe_preempt(int link, PortSim& p, Ns t) {
        if (!cfg_.preemption || p.inflight < 0 || p.cut_pending) {
            return;
        }
        const int cur_rank = queue_rank(p.inflight_queue);
        if (cur_rank == 0) {
            return;  // express traffic is never cut
        }
        bool contender = false;
        for (int q = 0; q < kQueueCount && queue_rank(q) < cur_rank; ++q) {
            if (queue_eligible(p, link, q, t, false)) {
                contender = true;
                break;
            }
        }
        if (!contender) {
            return;
        }
        SimFrame& fr = frames_[static_cast<size_t>(p.inflight)];
        const std::int64_t rate = net_.link(link).rate_bps;
        const std::int64_t sent = ceil_div((t - p.tx_start) * rate, 8 * kSecond);
        const std::int64_t rem = fr.bytes_left - sent;
        const std::int64_t cont = std::max<std::int64_t>(0, 64 - sent);
        if (rem - cont < 64) {
            return;  // too little left to fragment; runs to completion
        }
        p.cut_rem_bytes = rem - cont;
        p.cut_pending = true;
        const Ns cut_at = std::max(t, p.tx_start + wire_time(sent + cont, rate));
        p.tx_end = cut_at;
        ++p.tx_ver;
        push({cut_at, 0, EvKind::TxEnd, link, -1, p.tx_ver});
        trace(t, link, "preempt", p.inflight, rem - cont);
    }

    void schedule_wake(int link, PortSim& p, Ns t) {
        Ns wake = kInf;
        const std::int64_t rate = net_.link(link).rate_bps;
        for (int q = 0; q < kQueueCount; ++q) {
            if (p.q[static_cast<size_t>(q)].empty()) {
                continue;
            }
            Ns cand = t;
            if (!p.gates.is_open(q, t)) {
                cand = p.gates.next_open_at(q, t);
            } else if (!cfg_.preemption && queue_rank(q) > 0) {
                const SimFrame& fr =
                    frames_[static_cast<size_t>(p.q[static_cast<size_t>(q)].front())];
                const Ns end = t + wire_time(fr.bytes_left, rate);
                if (end > p.gates.close_after(q, t)) {
                    cand = p.gates.next_open_at(q, p.gates.close_after(q, t));
                }
            }
            if (q == kQueueA || q == kQueueB) {
                const std::int64_t credit = p.credit[q == kQueueA ? 0 : 1];
                if (credit < 0) {
                    const std::int64_t idle =
                        q == kQueueA ? cfg_.idle_slope_a(rate) : cfg_.idle_slope_b(rate);
                    cand = std::max(cand, t + ceil_div(-credit, idle));
                }
            }
            if (cand > t) {
                wake = std::min(wake, cand);
            }
        }
        if (wake < p.wake_at && wake < drain_limit_) {
            p.wake_at = wake;
            ++p.wake_ver;
            push({wake, 0, EvKind::Wake, link, -1, p.wake_ver});
        }
    }

    void try_start(int link, Ns t) {
        PortSim& p = ports_[static_cast<size_t>(link)];
        advance_credits(p, link, t);
        if (p.inflight >= 0) {
            maybe_preempt(link, p, t);
            schedule_wake(link, p, t);
            return;
        }
        for (int q = 0; q < kQueueCount; ++q) {
            if (queue_eligible(p, link, q, t, !cfg_.preemption)) {
                start_tx(link, p, q, t);
                schedule_wake(link, p, t);
                return;
            }
        }
        schedule_wake(link, p, t);
    }

    void handle_arrive(const Event& ev) {
        SimFrame& fr = frames_[static_cast<size_t>(ev.frame)];
        const Injected& inj = injected_[fr.flow_index];
        const Flow& f = *inj.flow;
        if (ev.kind == EvKind::Release) {
            fr.hop = 0;
            ++released_;
            if (!inj.synthetic) {
                stats_[inj.stats_id].released++;
            }
        }
        fr.bytes_left = full_wire_bytes(fr);
        fr.fragment = false;
        const int link = f.route[static_cast<size_t>(fr.hop)];
        PortSim& p = ports_[static_cast<size_t>(link)];
        advance_credits(p, link, ev.t);
        const int q = inj.queues[static_cast<size_t>(fr.hop)];
        p.q[static_cast<size_t>(q)].push_back(ev.frame);
        trace(ev.t, link, ev.kind == EvKind::Release ? "release" : "arrive", ev.frame,
              fr.bytes_left);
        try_start(link, ev.t);
    }

    void handle_tx_end(const Event& ev) {
        const int link = ev.port;
        PortSim& p = ports_[static_cast<size_t>(link)];
        advance_credits(p, link, ev.t);
        const int fi = p.inflight;
        SimFrame& fr = frames_[static_cast<size_t>(fi)];
        const Injected& inj = injected_[fr.flow_index];

        if (p.cut_pending) {
            fr.bytes_left = p.cut_rem_bytes + cfg_.frag_overhead_b;
            fr.fragment = true;
            p.q[static_cast<size_t>(p.inflight_queue)].push_front(fi);
            p.inflight = -1;
            p.cut_pending = false;
            trace(ev.t, link, "cut", fi, fr.bytes_left);
            try_start(link, ev.t);
            return;
        }

        if (queue_rank(p.inflight_queue) == 0) {
            tt_tx_.push_back({inj.flow->id, fr.k, link, p.tx_start, ev.t});
        }
        p.inflight = -1;
        trace(ev.t, link, "tx_end", fi, 0);

        const Flow& f = *inj.flow;
        const Link& l = net_.link(link);
        if (static_cast<size_t>(fr.hop) + 1 == f.route.size()) {
            const Ns done = ev.t + l.propagation;
            ++delivered_;
            if (!inj.synthetic) {
                SimFlowStats& st = stats_[inj.stats_id];
                const Ns delay = done - fr.release;
                st.delivered++;
                st.delay_sum += delay;
                st.max_delay = std::max(st.max_delay, delay);
                if (inj.cls != PriorityClass::BE && delay > f.ddl) {
                    st.deadline_misses++;
                }
            }
            trace(done, -1, "deliver", fi, 0);
        } else {
            fr.hop++;
            Event next{ev.t + l.propagation + l.proc_delay, 0, EvKind::Arrive,
                       f.route[static_cast<size_t>(fr.hop)], fi, 0};
            push(next);
        }
        try_start(link, ev.t);
    }

    void finish(SimResult& out) {
        out.frames_released = released_;
        out.frames_delivered = delivered_;
        out.frames_stranded = released_ - delivered_;
        out.tt_transmissions = std::move(tt_tx_);
        for (auto& [id, st] : stats_) {
            out.per_flow[id] = st;
        }
        // After the drain every credit must have recovered to exactly zero.
        out.credits_neutral = true;
        for (size_t li = 0; li < ports_.size(); ++li) {
            PortSim& p = ports_[li];
            advance_credits(p, static_cast<int>(li), drain_limit_ + kSecond);
            bool queues_empty = true;
            for (const auto& dq : p.q) {
                queues_empty &= dq.empty();
            }
            if (queues_empty && p.inflight < 0 && (p.credit[0] != 0 || p.credit[1] != 0)) {
                out.credits_neutral = false;
            }
        }
        if (opts_.collect_trace) {
            out.trace_csv = "time_ns,port,event,flow,bytes\n" + trace_.str();
        }
    }

    const Network& net_;
    const std::vector<Injected>& injected_;
    const TtSchedule& schedule_;
    const Config& cfg_;
    const SimOptions& opts_;

    std::vector<PortSim> ports_;
    std::vector<SimFrame> frames_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
    std::uint64_t seq_ = 0;
    Ns drain_limit_ = 0;
    std::int64_t released_ = 0;
    std::int64_t delivered_ = 0;
    std::map<int, SimFlowStats> stats_;
    std::vector<TtTxRecord> tt_tx_;
    std::ostringstream trace_;
};

} // namespace

SimResult simulate(const Network& net, const std::vector<Flow>& flows,
                   const std::map<int, PriorityClass>& classes, const TtSchedule& schedule,
                   const std::vector<PortGcl>& gcls, const Config& cfg, const SimOptions& opts) {
    if (opts.horizon < 1) {
        throw ArgumentError("simulation horizon must be at least one hyperperiod");
    }
    const Ns hyper = schedule.hyperperiod();
    Rng rng(opts.seed);

    std::vector<Injected> injected;
    std::vector<const Flow*> ordered;
    for (const Flow& f : flows) {
        ordered.push_back(&f);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Flow* a, const Flow* b) { return a->id < b->id; });

    for (const Flow* f : ordered) {
        auto it = classes.find(f->id);
        if (it == classes.end()) {
            continue;
        }
        Injected inj;
        inj.flow = f;
        inj.cls = it->second;
        inj.stats_id = f->id;
        if (hyper % f->period != 0) {
            throw ArgumentError("flow period does not divide the schedule hyperperiod");
        }
        const std::int64_t per_hyper = hyper / f->period;
        Ns phase = 0;
        if (opts.random_phase && inj.cls != PriorityClass::TT) {
            phase = static_cast<Ns>(rng.below(static_cast<std::uint64_t>(f->period)));
        }
        for (int h = 0; h < opts.horizon; ++h) {
            for (std::int64_t k = 0; k < per_hyper; ++k) {
                inj.releases.push_back(phase + (h * per_hyper + k) * f->period);
            }
        }
        if (inj.cls == PriorityClass::TT) {
            const FlowPlacement& p = schedule.placement(f->id);
            inj.launch_offset = p.window_start.front();
            for (size_t h = 0; h < f->route.size(); ++h) {
                inj.queues.push_back(p.queue[h]);
            }
        } else {
            const int q = inj.cls == PriorityClass::AvbA  ? kQueueA
                          : inj.cls == PriorityClass::AvbB ? kQueueB
                                                           : kQueueBeBase + (f->id & 3);
            inj.queues.assign(f->route.size(), q);
        }
        injected.push_back(std::move(inj));
    }

    // Optional Poisson best-effort background per end station.
    std::deque<Flow> synthetic_storage;
    if (opts.be_poisson_load > 0) {
        int next_id = 1;
        for (const Flow& f : flows) {
            next_id = std::max(next_id, f.id + 1);
        }
        std::vector<const Node*> stations;
        for (const Node& n : net.nodes()) {
            if (n.kind == NodeKind::EndStation) {
                stations.push_back(&n);
            }
        }
        for (const Node* es : stations) {
            const auto& out = net.neighbors_out(es->id);
            if (out.empty()) {
                continue;
            }
            const Link& up = net.link(net.find_link(es->id, out.front()));
            const double bits = opts.be_poisson_frame_b * 8.0;
            const double rate_fps = opts.be_poisson_load * static_cast<double>(up.rate_bps) / bits;
            if (rate_fps <= 0) {
                continue;
            }
            const double mean_gap_ns = 1e9 / rate_fps;
            std::vector<Ns> arrivals;
            double t = 0;
            const double end = static_cast<double>(opts.horizon) * static_cast<double>(hyper);
            for (;;) {
                t += -std::log(1.0 - rng.unit()) * mean_gap_ns;
                if (t >= end) {
                    break;
                }
                arrivals.push_back(static_cast<Ns>(t));
            }
            if (arrivals.empty()) {
                continue;
            }
            // One synthetic flow per (source, destination) pair actually drawn.
            std::map<int, std::vector<Ns>> per_dst;
            for (Ns at : arrivals) {
                const Node* dst = stations[rng.below(stations.size())];
                if (dst->id == es->id) {
                    continue;
                }
                per_dst[dst->id].push_back(at);
            }
            for (auto& [dst, times] : per_dst) {
                Flow bf;
                bf.id = next_id++;
                bf.src = es->id;
                bf.dst = dst;
                bf.period = hyper;
                bf.size_b = std::min(opts.be_poisson_frame_b, 1518);
                bf.ddl = hyper;
                bf.static_prio = PriorityClass::BE;
                bf.route = shortest_route(net, es->id, dst);
                synthetic_storage.push_back(bf);
                Injected inj;
                inj.flow = &synthetic_storage.back();
                inj.cls = PriorityClass::BE;
                inj.synthetic = true;
                inj.stats_id = -bf.id;
                inj.releases = times;
                inj.queues.assign(bf.route.size(), kQueueBeBase + (bf.id & 3));
                injected.push_back(std::move(inj));
            }
        }
    }

    SimResult out;
    Engine engine(net, injected, schedule, gcls, cfg, opts);
    engine.run(out);
    return out;
}

std::vector<std::string> check_tt_containment(const SimResult& result,
                                              const TtSchedule& schedule,
                                              const std::vector<Flow>& flows) {
    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }
    std::vector<std::string> out;
    for (const TtTxRecord& r : result.tt_transmissions) {
        const Flow& f = *by_id.at(r.flow);
        const FlowPlacement& p = schedule.placement(r.flow);
        const auto pos = std::find(f.route.begin(), f.route.end(), r.link);
        if (pos == f.route.end()) {
            out.push_back("flow " + std::to_string(r.flow) + " transmitted on a link off-route");
            continue;
        }
        const size_t hop = static_cast<size_t>(pos - f.route.begin());
        const Ns release = static_cast<Ns>(r.instance) * f.period;
        const Ns w0 = release + p.window_start[hop];
        const Ns w1 = w0 + p.window_len[hop];
        if (r.start < w0 || r.end > w1) {
            out.push_back("flow " + std::to_string(r.flow) + " instance " +
                          std::to_string(r.instance) + " link " + std::to_string(r.link) +
                          " transmitted [" + std::to_string(r.start) + "," +
                          std::to_string(r.end) + ") outside window [" + std::to_string(w0) +
                          "," + std::to_string(w1) + ")");
        }
    }
    return out;
}

std::vector<std::string> replay_check(const Network& net, const std::vector<Flow>& flows,
                                      const std::map<int, PriorityClass>& classes,
                                      const TtSchedule& schedule,
                                      const std::vector<PortGcl>& gcls, const Config& cfg) {
    std::vector<Flow> tt_only;
    std::map<int, PriorityClass> tt_classes;
    for (const Flow& f : flows) {
        auto it = classes.find(f.id);
        if (it != classes.end() && it->second == PriorityClass::TT && schedule.has_flow(f.id)) {
            tt_only.push_back(f);
            tt_classes[f.id] = PriorityClass::TT;
        }
    }
    SimOptions opts;
    opts.horizon = 1;
    SimResult res = simulate(net, tt_only, tt_classes, schedule, gcls, cfg, opts);
    std::vector<std::string> out = check_tt_containment(res, schedule, tt_only);
    if (res.frames_stranded != 0) {
        out.push_back("TT replay left " + std::to_string(res.frames_stranded) +
                      " frames undelivered");
    }
    return out;
}

std::string sim_result_json(const SimResult& result, const std::vector<Flow>& flows) {
    using json = nlohmann::ordered_json;
    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }
    json j;
    j["frames_released"] = result.frames_released;
    j["frames_delivered"] = result.frames_delivered;
    j["frames_stranded"] = result.frames_stranded;
    j["credits_neutral"] = result.credits_neutral;
    j["flows"] = json::array();
    for (const auto& [id, st] : result.per_flow) {
        json fj = {{"id", id},
                   {"released", st.released},
                   {"delivered", st.delivered},
                   {"max_delay_ns", st.max_delay},
                   {"mean_delay_ns", st.mean_delay()},
                   {"deadline_misses", st.deadline_misses}};
        auto it = by_id.find(id);
        if (it != by_id.end()) {
            fj["ddl_ns"] = it->second->ddl;
        }
        j["flows"].push_back(fj);
    }
    return j.dump(2) + "\n";
}

} // namespace tsn
