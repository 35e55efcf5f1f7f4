#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsn/model.hpp"
#include "tsn/tt_schedule.hpp"

namespace tsn {

// Per-link view of the TT reservations: disjoint closed windows over one
// hyperperiod plus prefix sums, so worst-case gate-closed time and window
// counts for an arbitrary analysis window come out of binary searches.
class LinkTtIndex {
public:
    LinkTtIndex() = default;
    LinkTtIndex(const std::vector<Reservation>& reservations, Ns hyper);

    // Maximum total closed (TT-reserved) time in any window of length w.
    Ns closed_time_max(Ns w) const;
    // Maximum number of reservation windows intersecting any window of length w.
    std::int64_t max_intersections(Ns w) const;

    Ns total_closed() const { return total_closed_; }
    bool empty() const { return starts_.empty(); }

private:
    Ns covered_until(Ns x) const;  // integral of the closed indicator over [0, x)

    std::vector<Ns> starts_;
    std::vector<Ns> ends_;
    std::vector<Ns> prefix_;  // closed time before starts_[i]
    Ns total_closed_ = 0;
    Ns hyper_ = 0;
};

// Convenience entry points matching the index methods.
Ns closed_time_max(int link, const TtSchedule& schedule, Ns w);

struct RtaHop {
    int link = -1;
    Ns bound = 0;
};

struct RtaFlowEntry {
    int flow = -1;
    PriorityClass cls = PriorityClass::AvbA;
    bool feasible = false;
    Ns rt = 0;  // meaningful only when feasible
    std::vector<RtaHop> hops;
};

struct RtaReport {
    std::vector<RtaFlowEntry> entries;  // ascending flow id
};

std::string rta_report_csv(const RtaReport& report, const std::vector<Flow>& flows);

// Interference bookkeeping for one evaluation: which AVB flows currently sit
// in class A and class B on every link, plus the TT window index. The class
// map is mutable so a search loop can move one flow and re-evaluate only the
// flows it touches.
class RtaContext {
public:
    RtaContext(const Network& net, const std::vector<Flow>& flows,
               const std::map<int, PriorityClass>& assigned, const TtSchedule& schedule,
               const Config& cfg);

    void set_class(int flow_id, PriorityClass cls);
    PriorityClass assigned_class(int flow_id) const;

    // Worst-case end-to-end delay of one AVB flow under the current classes.
    RtaFlowEntry rt_avb(int flow_id) const;

    // Exact TT delay from the committed offsets.
    Ns rt_tt(int flow_id) const;

    // Busy-window bound of the head (smallest-deadline) flow of a same-class,
    // same-route set, with every member of the set interfering. nullopt when
    // the iteration escapes the head's deadline.
    std::optional<Ns> rt_of_set(const std::vector<int>& member_ids) const;

    // Holistic pass: propagates per-hop queuing into downstream arrival
    // jitter until the per-flow hop bounds stop moving. Call once after
    // construction (and again after class moves when exact numbers matter;
    // search loops may keep the frozen values).
    void refine_jitter(int max_passes = 200);

    const Network& net() const { return *net_; }
    const Config& config() const { return *cfg_; }
    const Flow& flow(int id) const;
    const TtSchedule& schedule() const { return *schedule_; }

private:
    struct LinkEntry {
        int flow = -1;
        Ns period = 0;
        Ns c_wire = 0;
        int hop_index = 0;  // position of this link in the flow's route
    };
    struct LinkTraffic {
        std::vector<LinkEntry> avb[2];  // index 0 = class A, 1 = class B
        bool has_be = false;
    };

    std::optional<Ns> hop_bound(const Flow& f, Ns c_own, size_t hop_index, PriorityClass cls,
                                const std::vector<int>* member_set, Ns bound) const;
    bool lower_class_present(const LinkTraffic& t, PriorityClass cls) const;
    Ns arrival_jitter(const LinkEntry& e) const;

    const Network* net_;
    const Config* cfg_;
    const TtSchedule* schedule_;
    std::map<int, const Flow*> flows_;
    std::map<int, PriorityClass> classes_;
    std::vector<LinkTraffic> traffic_;
    std::vector<LinkTtIndex> tt_;
    // Cumulative queuing slack a flow may have accumulated before each of its
    // hops; feeds competitors' burst terms. Zero until refine_jitter runs.
    std::map<int, std::vector<Ns>> jitter_;
    std::map<int, std::vector<Ns>> hop_est_;
    // Memo of (closed, intersections) per window length; the TT schedule is
    // frozen for the context's lifetime.
    mutable std::vector<std::unordered_map<Ns, std::pair<Ns, std::int64_t>>> tt_memo_;
};

} // namespace tsn
