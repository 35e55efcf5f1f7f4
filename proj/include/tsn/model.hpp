#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsn/time_util.hpp"

namespace tsn {

enum class NodeKind { EndStation, Switch };

struct Node {
    int id = -1;
    NodeKind kind = NodeKind::EndStation;

    std::string name() const {
        return (kind == NodeKind::Switch ? "sw" : "es") + std::to_string(id);
    }
};

struct Link {
    int src = -1;
    int dst = -1;
    std::int64_t rate_bps = 0;
    Ns propagation = 0;    // wire delay src -> dst
    Ns proc_delay = 0;     // forwarding latency paid at dst before the next hop
};

// Directed graph of end stations and switches. Immutable after construction;
// lookup tables are built once in finalize().
class Network {
public:
    Network() = default;
    Network(std::vector<Node> nodes, std::vector<Link> links);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const Node& node(int id) const;
    const Link& link(int index) const { return links_[static_cast<size_t>(index)]; }
    int link_count() const { return static_cast<int>(links_.size()); }

    // Index of the directed link src->dst, or -1.
    int find_link(int src, int dst) const;
    // Outgoing neighbor node ids, ascending.
    const std::vector<int>& neighbors_out(int node_id) const;
    // Incoming neighbor node ids, ascending.
    const std::vector<int>& neighbors_in(int node_id) const;

    std::string link_name(int index) const;

private:
    void finalize();

    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::unordered_map<int, size_t> node_index_;
    std::unordered_map<std::int64_t, int> link_index_;
    std::unordered_map<int, std::vector<int>> out_;
    std::unordered_map<int, std::vector<int>> in_;
    std::vector<int> empty_;
};

// Priority classes in decreasing order of service priority.
enum class PriorityClass { TT = 0, AvbA = 1, AvbB = 2, BE = 3 };

inline bool higher_priority(PriorityClass a, PriorityClass b) {
    return static_cast<int>(a) < static_cast<int>(b);
}

const char* class_name(PriorityClass c);
std::optional<PriorityClass> class_from_name(const std::string& s);

struct Flow {
    int id = -1;
    int src = -1;
    int dst = -1;
    Ns period = 0;
    int size_b = 1500;
    Ns ddl = 0;
    PriorityClass static_prio = PriorityClass::AvbA;
    std::vector<int> route;  // link indices, source to destination
};

// Global knobs shared by the scheduler, the response-time analysis and the
// simulator. Defaults model 802.3br preemption with a guarded TT window.
struct Config {
    bool frame_overhead = true;   // add 20 B preamble+IPG to every frame on the wire
    bool preemption = true;       // frames may be cut by higher classes
    bool tt_guard_pad = true;     // extend TT windows by the worst-case hold-over
    int np_residue_b = 123;       // bytes a preempted frame may still send
    int frag_overhead_b = 24;     // header cost of a resumed fragment
    int max_lp_frame_b = 1538;    // largest non-preemptable frame incl. overhead
    int slope_a_pct = 40;         // class-A idle slope as percent of link rate
    int slope_b_pct = 20;         // class-B idle slope as percent of link rate

    std::int64_t idle_slope_a(std::int64_t rate_bps) const { return rate_bps * slope_a_pct / 100; }
    std::int64_t idle_slope_b(std::int64_t rate_bps) const { return rate_bps * slope_b_pct / 100; }

    int wire_bytes(int size_b) const { return size_b + (frame_overhead ? 20 : 0); }
};

// Wire time of size_b bytes on `link`, rounded up to whole nanoseconds.
Ns transmission_time(int size_b, const Link& link, bool include_overhead);

// Exact wire time of a raw byte count (no overhead logic).
Ns wire_time(std::int64_t bytes, std::int64_t rate_bps);

// LCM of all flow periods. Computed once over the whole flow set so the value
// does not move when flows later change class.
Ns hyperperiod(const std::vector<Flow>& flows);

// Minimum-hop route; among equal-length routes the lexicographically smallest
// node-id sequence wins, so repeated calls always agree.
std::vector<int> shortest_route(const Network& net, int src, int dst);

// Checks flow invariants (endpoints, deadline window, route contiguity) and
// fills in missing routes. Throws ValidationError on the first problem.
void validate_and_route(const Network& net, std::vector<Flow>& flows);

} // namespace tsn
