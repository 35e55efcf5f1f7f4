#include "tsn/flow_groups.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tsn/errors.hpp"

namespace tsn {

std::vector<FlowGroup> group_flows(const std::vector<Flow>& flows) {
    std::map<std::vector<int>, std::vector<int>> by_route;
    for (const Flow& f : flows) {
        if (f.route.empty()) {
            throw ArgumentError("flow " + std::to_string(f.id) + " has no route");
        }
        by_route[f.route].push_back(f.id);
    }
    std::vector<FlowGroup> groups;
    for (auto& [route, members] : by_route) {
        std::sort(members.begin(), members.end());
        groups.push_back(FlowGroup{route, members});
    }
    // Deterministic group order: by smallest member flow id.
    std::sort(groups.begin(), groups.end(),
              [](const FlowGroup& a, const FlowGroup& b) { return a.members[0] < b.members[0]; });
    return groups;
}

int shared_link_count(const std::vector<int>& route_a, const std::vector<int>& route_b) {
    int shared = 0;
    for (int la : route_a) {
        if (std::find(route_b.begin(), route_b.end(), la) != route_b.end()) {
            ++shared;
        }
    }
    return shared;
}

std::int64_t FgConflictGraph::weighted_degree(int group_index) const {
    std::int64_t sum = 0;
    const auto& row = weight[static_cast<size_t>(group_index)];
    for (std::int64_t w : row) {
        sum += w;
    }
    return sum;
}

FgConflictGraph build_conflict_graph(std::vector<FlowGroup> groups,
                                     const std::vector<std::int64_t>& counts) {
    if (counts.size() != groups.size()) {
        throw ArgumentError("conflict graph needs one count per group");
    }
    const size_t n = groups.size();
    FgConflictGraph g;
    g.groups = std::move(groups);
    g.shared_links.assign(n, std::vector<int>(n, 0));
    g.weight.assign(n, std::vector<std::int64_t>(n, 0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            int shared = shared_link_count(g.groups[i].route, g.groups[j].route);
            if (shared == 0) {
                continue;
            }
            std::int64_t w = conflict_edge_weight(shared, counts[i], counts[j]);
            g.shared_links[i][j] = g.shared_links[j][i] = shared;
            g.weight[i][j] = g.weight[j][i] = w;
        }
    }
    return g;
}

std::int64_t tt_conflict_count(const Flow& f, const std::vector<const Flow*>& tt_flows,
                               Ns t_sched) {
    std::int64_t total = 0;
    for (int link : f.route) {
        for (const Flow* g : tt_flows) {
            if (std::find(g->route.begin(), g->route.end(), link) != g->route.end()) {
                total += t_sched / g->period;
            }
        }
    }
    return total;
}

Rational tt_adjust_metric(const Flow& f, std::int64_t conflict_count) {
    if (f.ddl <= 0) {
        throw ArgumentError("tt_adjust_metric needs a positive deadline");
    }
    const std::int64_t factor = conflict_count > 0 ? conflict_count : 1;
    // 1 / (conflict * ddl_seconds) == 1e9 / (conflict * ddl_ns)
    return Rational::of(kSecond, factor * f.ddl);
}

std::int64_t conflict_edge_weight(int shared_links, std::int64_t count_i, std::int64_t count_j) {
    return static_cast<std::int64_t>(shared_links) * (count_i + count_j);
}

std::int64_t avb_conflict_count(const Flow& f, const FgConflictGraph& graph) {
    for (size_t i = 0; i < graph.groups.size(); ++i) {
        const auto& m = graph.groups[i].members;
        if (std::binary_search(m.begin(), m.end(), f.id)) {
            return graph.weighted_degree(static_cast<int>(i));
        }
    }
    throw ArgumentError("flow " + std::to_string(f.id) + " belongs to no flow group");
}

Rational avb_adjust_metric(const Flow& f, std::int64_t conflict_count) {
    if (f.ddl <= 0) {
        throw ArgumentError("avb_adjust_metric needs a positive deadline");
    }
    // conflict / ddl_seconds == conflict * 1e9 / ddl_ns
    return Rational::of(conflict_count * kSecond, f.ddl);
}

std::vector<Component> connected_components(const FgConflictGraph& graph) {
    const size_t n = graph.groups.size();
    std::vector<int> comp(n, -1);
    int next = 0;
    for (size_t i = 0; i < n; ++i) {
        if (comp[i] >= 0) {
            continue;
        }
        std::vector<size_t> stack{i};
        comp[i] = next;
        while (!stack.empty()) {
            size_t cur = stack.back();
            stack.pop_back();
            for (size_t j = 0; j < n; ++j) {
                if (comp[j] < 0 && graph.shared_links[cur][j] > 0) {
                    comp[j] = next;
                    stack.push_back(j);
                }
            }
        }
        ++next;
    }
    std::vector<Component> out(static_cast<size_t>(next));
    for (size_t i = 0; i < n; ++i) {
        out[static_cast<size_t>(comp[i])].group_indices.push_back(static_cast<int>(i));
    }
    for (Component& c : out) {
        c.kind = c.group_indices.size() == 1 ? ComponentKind::Parallel : ComponentKind::Crossed;
    }
    return out;
}

std::string conflict_graph_dot(const Network& net, const FgConflictGraph& graph) {
    std::ostringstream os;
    os << "graph fg_conflicts {\n";
    for (size_t i = 0; i < graph.groups.size(); ++i) {
        const FlowGroup& g = graph.groups[i];
        os << "  FG_R" << i << " [label=\"FG_R" << i << "\\n"
           << net.link_name(g.route.front()) << "..(" << g.route.size() << " links), "
           << g.members.size() << " flows\"];\n";
    }
    for (size_t i = 0; i < graph.groups.size(); ++i) {
        for (size_t j = i + 1; j < graph.groups.size(); ++j) {
            if (graph.shared_links[i][j] > 0) {
                os << "  FG_R" << i << " -- FG_R" << j << " [label=\"" << graph.weight[i][j]
                   << "\"];\n";
            }
        }
    }
    os << "}\n";
    return os.str();
}

} // namespace tsn
