#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsn/model.hpp"

namespace tsn {

// One gate window on one link for one flow instance. `start` is absolute
// within the hyperperiod; `len` includes the guard pad in front of the frame.
struct Reservation {
    int link = -1;
    int flow = -1;
    int instance = 0;
    Ns start = 0;
    Ns len = 0;
    int tt_queue = 0;         // 0 or 1
    Ns queue_arrival = 0;     // earliest absolute time the frame can reach this queue
};

// Per-flow placement, offsets relative to the instance release.
struct FlowPlacement {
    std::vector<Ns> window_start;
    std::vector<Ns> window_len;
    std::vector<int> queue;
    std::vector<Ns> arrival;
};

class TtSchedule {
public:
    TtSchedule() = default;
    TtSchedule(Ns hyper, int link_count) : hyperperiod_(hyper) {
        per_link_.resize(static_cast<size_t>(link_count));
    }

    Ns hyperperiod() const { return hyperperiod_; }
    const std::vector<Reservation>& link_reservations(int link) const {
        return per_link_[static_cast<size_t>(link)];
    }
    const std::map<int, FlowPlacement>& placements() const { return placements_; }
    bool has_flow(int flow_id) const { return placements_.count(flow_id) != 0; }
    const FlowPlacement& placement(int flow_id) const;

    void insert(const Reservation& r);
    void set_placement(int flow_id, FlowPlacement p) { placements_[flow_id] = std::move(p); }
    void remove_flow(int flow_id);

    // Disjoint-link union of two component schedules.
    void merge_from(const TtSchedule& other);

private:
    Ns hyperperiod_ = 0;
    std::vector<std::vector<Reservation>> per_link_;  // each sorted by start
    std::map<int, FlowPlacement> placements_;
};

// Reserved window length for one frame of `f` on `link`.
Ns reservation_len(const Flow& f, const Link& link, const Config& cfg);
Ns guard_pad(const Link& link, const Config& cfg);

// Earliest-feasible insertion of one flow. Returns false and leaves the
// schedule untouched when no placement meets the constraints and the deadline.
bool asap_add(const Flow& f, const Network& net, const Config& cfg, TtSchedule& schedule);

// Batch ASAP in canonical order: period ascending, deadline ascending, id.
// Returns the ids that could not be placed.
std::vector<int> asap_schedule(std::vector<const Flow*> tt_flows, const Network& net,
                               const Config& cfg, TtSchedule& schedule);

struct ConstraintViolation {
    std::string family;  // frame | flow-transmission | link | queue
    int link = -1;
    int flow_a = -1;
    int flow_b = -1;
    Ns at = 0;
    std::string detail;
};

std::vector<ConstraintViolation> check_constraints(const TtSchedule& schedule, const Network& net,
                                                   const std::vector<Flow>& flows);

// Queue layout on every egress port: TT0, TT1, A, B, BE x4.
inline constexpr int kQueueTt0 = 0;
inline constexpr int kQueueTt1 = 1;
inline constexpr int kQueueA = 2;
inline constexpr int kQueueB = 3;
inline constexpr int kQueueBeBase = 4;
inline constexpr int kQueueCount = 8;

struct GclEntry {
    Ns t = 0;
    std::uint8_t gates = 0;  // bit i set = queue i open
};

struct PortGcl {
    int link = -1;
    std::vector<GclEntry> entries;  // time sorted, first at t = 0
};

// Gate lists over one hyperperiod: a TT gate is open exactly during its
// queue's reservations, the AVB/BE gates are the complement.
std::vector<PortGcl> emit_gcl(const TtSchedule& schedule, const Network& net);

// Open intervals of one queue over one cycle, reconstructed from the entries.
std::vector<std::pair<Ns, Ns>> gcl_open_intervals(const PortGcl& gcl, int queue, Ns cycle);

std::string gcl_to_json_text(const std::vector<PortGcl>& gcls, const Network& net);
std::vector<PortGcl> gcl_from_json_text(const std::string& text, const Network& net, Ns cycle);

} // namespace tsn
