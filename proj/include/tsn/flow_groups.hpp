#pragma once

#include <string>
#include <vector>

#include "tsn/model.hpp"
#include "tsn/rational.hpp"

namespace tsn {

// Flows sharing one exact route (identical ordered link sequence).
struct FlowGroup {
    std::vector<int> route;    // link indices
    std::vector<int> members;  // flow ids, ascending
};

// Undirected weighted graph over flow groups. An edge exists whenever two
// group routes share at least one directed link; its weight is
// shared_links * (count_i + count_j) where the counts are supplied by the
// caller (scheduled TT members plus AVB members still awaiting a decision).
struct FgConflictGraph {
    std::vector<FlowGroup> groups;
    std::vector<std::vector<int>> shared_links;  // symmetric, 0 on diagonal
    std::vector<std::vector<std::int64_t>> weight;

    std::int64_t weighted_degree(int group_index) const;
};

enum class ComponentKind { Parallel, Crossed };

struct Component {
    ComponentKind kind = ComponentKind::Parallel;
    std::vector<int> group_indices;  // into FgConflictGraph::groups
};

// Partition flows by route identity. Group order follows the smallest member
// flow id; members ascend within each group.
std::vector<FlowGroup> group_flows(const std::vector<Flow>& flows);

int shared_link_count(const std::vector<int>& route_a, const std::vector<int>& route_b);

// Conflict-graph构: counts[i] is |FG_i| in the edge-weight sense.
FgConflictGraph build_conflict_graph(std::vector<FlowGroup> groups,
                                     const std::vector<std::int64_t>& counts);

// Total TT instances per hyperperiod crossing f's route.
std::int64_t tt_conflict_count(const Flow& f, const std::vector<const Flow*>& tt_flows,
                               Ns t_sched);

// Precedence for promoting an AVB flow to TT: 1 / (conflict * ddl_seconds).
// A zero conflict count uses 1 in the denominator so conflict-free flows rank
// highest among equal deadlines.
Rational tt_adjust_metric(const Flow& f, std::int64_t conflict_count);

std::int64_t conflict_edge_weight(int shared_links, std::int64_t count_i, std::int64_t count_j);

// Weighted degree of the group containing f (0 if f's route is isolated).
std::int64_t avb_conflict_count(const Flow& f, const FgConflictGraph& graph);

// Precedence for keeping an AVB flow in class A: conflict / ddl_seconds.
Rational avb_adjust_metric(const Flow& f, std::int64_t conflict_count);

// Connected components over the shared-link edges. Singletons are parallel.
std::vector<Component> connected_components(const FgConflictGraph& graph);

// Graphviz dump for debugging; nodes are FG_R<i>, edges carry their weight.
std::string conflict_graph_dot(const Network& net, const FgConflictGraph& graph);

} // namespace tsn
