#include "tsn/model.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "tsn/errors.hpp"

namespace tsn {

namespace {
std::int64_t link_key(int src, int dst) {
    return (static_cast<std::int64_t>(src) << 32) | static_cast<std::uint32_t>(dst);
}
} // namespace

Network::Network(std::vector<Node> nodes, std::vector<Link> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
    finalize();
}

void Network::finalize() {
    node_index_.clear();
    link_index_.clear();
    out_.clear();
    in_.clear();
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (!node_index_.emplace(nodes_[i].id, i).second) {
            throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
        }
    }
    for (size_t i = 0; i < links_.size(); ++i) {
        const Link& l = links_[i];
        if (!node_index_.count(l.src) || !node_index_.count(l.dst)) {
            throw ValidationError("link endpoint references unknown node");
        }
        if (l.src == l.dst) {
            throw ValidationError("self-loop link on node " + std::to_string(l.src));
        }
        if (l.rate_bps <= 0) {
            throw ValidationError("link rate must be positive");
        }
        if (!link_index_.emplace(link_key(l.src, l.dst), static_cast<int>(i)).second) {
            throw ValidationError("duplicate directed link");
        }
        out_[l.src].push_back(l.dst);
        in_[l.dst].push_back(l.src);
    }
    for (auto& [id, v] : out_) {
        std::sort(v.begin(), v.end());
    }
    for (auto& [id, v] : in_) {
        std::sort(v.begin(), v.end());
    }
}

const Node& Network::node(int id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) {
        throw ArgumentError("unknown node id " + std::to_string(id));
    }
    return nodes_[it->second];
}

int Network::find_link(int src, int dst) const {
    auto it = link_index_.find(link_key(src, dst));
    return it == link_index_.end() ? -1 : it->second;
}

const std::vector<int>& Network::neighbors_out(int node_id) const {
    auto it = out_.find(node_id);
    return it == out_.end() ? empty_ : it->second;
}

const std::vector<int>& Network::neighbors_in(int node_id) const {
    auto it = in_.find(node_id);
    return it == in_.end() ? empty_ : it->second;
}

std::string Network::link_name(int index) const {
    const Link& l = links_[static_cast<size_t>(index)];
    return node(l.src).name() + "->" + node(l.dst).name();
}

const char* class_name(PriorityClass c) {
    switch (c) {
    case PriorityClass::TT: return "tt";
    case PriorityClass::AvbA: return "avb_a";
    case PriorityClass::AvbB: return "avb_b";
    case PriorityClass::BE: return "be";
    }
    return "?";
}

std::optional<PriorityClass> class_from_name(const std::string& s) {
    if (s == "tt") return PriorityClass::TT;
    if (s == "avb_a" || s == "a") return PriorityClass::AvbA;
    if (s == "avb_b" || s == "b") return PriorityClass::AvbB;
    if (s == "be") return PriorityClass::BE;
    return std::nullopt;
}

Ns wire_time(std::int64_t bytes, std::int64_t rate_bps) {
    if (rate_bps <= 0) {
        throw ConfigError("link rate must be positive");
    }
    return ceil_div(bytes * 8 * kSecond, rate_bps);
}

Ns transmission_time(int size_b, const Link& link, bool include_overhead) {
    if (include_overhead && size_b < 64) {
        throw ArgumentError("frame below minimum Ethernet size");
    }
    const std::int64_t bytes = size_b + (include_overhead ? 20 : 0);
    return wire_time(bytes, link.rate_bps);
}

Ns hyperperiod(const std::vector<Flow>& flows) {
    if (flows.empty()) {
        throw ArgumentError("hyperperiod of empty flow set");
    }
    Ns h = 1;
    for (const Flow& f : flows) {
        if (f.period <= 0) {
            throw ValidationError("flow period must be positive");
        }
        h = lcm_checked(h, f.period);
    }
    return h;
}

std::vector<int> shortest_route(const Network& net, int src, int dst) {
    if (src == dst) {
        throw ArgumentError("route source equals destination");
    }
    const Node& s = net.node(src);
    const Node& d = net.node(dst);
    if (s.kind != NodeKind::EndStation || d.kind != NodeKind::EndStation) {
        throw ArgumentError("flows must run between end stations");
    }

    // Hop distance to dst over reversed edges. End stations other than the
    // endpoints never forward, so they are not expanded.
    std::unordered_map<int, int> dist;
    dist[dst] = 0;
    std::deque<int> frontier{dst};
    while (!frontier.empty()) {
        int cur = frontier.front();
        frontier.pop_front();
        if (cur != dst && net.node(cur).kind == NodeKind::EndStation && cur != src) {
            continue;
        }
        for (int prev : net.neighbors_in(cur)) {
            if (!dist.count(prev)) {
                dist[prev] = dist[cur] + 1;
                frontier.push_back(prev);
            }
        }
    }
    if (!dist.count(src)) {
        throw InfeasibleError("no route from " + s.name() + " to " + d.name());
    }

    // Walk forward, always taking the smallest-id neighbor that stays on a
    // shortest path. Produces the lexicographically least node sequence.
    std::vector<int> route;
    int cur = src;
    while (cur != dst) {
        int best = -1;
        for (int next : net.neighbors_out(cur)) {
            if (next != dst && net.node(next).kind == NodeKind::EndStation) {
                continue;
            }
            auto it = dist.find(next);
            if (it != dist.end() && it->second == dist[cur] - 1) {
                best = next;
                break;  // neighbors are ascending, first hit is smallest id
            }
        }
        if (best < 0) {
            throw InfeasibleError("route walk failed between " + s.name() + " and " + d.name());
        }
        route.push_back(net.find_link(cur, best));
        cur = best;
    }
    return route;
}

void validate_and_route(const Network& net, std::vector<Flow>& flows) {
    for (Flow& f : flows) {
        const std::string tag = "flow " + std::to_string(f.id) + ": ";
        if (f.src == f.dst) {
            throw ValidationError(tag + "source equals destination");
        }
        if (net.node(f.src).kind != NodeKind::EndStation ||
            net.node(f.dst).kind != NodeKind::EndStation) {
            throw ValidationError(tag + "endpoints must be end stations");
        }
        if (f.period <= 0) {
            throw ValidationError(tag + "period must be positive");
        }
        if (f.ddl <= 0 || f.ddl > f.period) {
            throw ValidationError(tag + "deadline must satisfy 0 < ddl <= period");
        }
        if (f.size_b < 64 || f.size_b > 1518) {
            throw ValidationError(tag + "frame size outside [64, 1518] bytes");
        }
        if (f.route.empty()) {
            f.route = shortest_route(net, f.src, f.dst);
        } else {
            int at = f.src;
            std::vector<char> seen(net.nodes().size(), 0);
            for (int li : f.route) {
                if (li < 0 || li >= net.link_count()) {
                    throw ValidationError(tag + "route references unknown link");
                }
                const Link& l = net.link(li);
                if (l.src != at) {
                    throw ValidationError(tag + "route is not link-contiguous");
                }
                at = l.dst;
            }
            if (at != f.dst) {
                throw ValidationError(tag + "route does not end at destination");
            }
            // Cycle-free: no node visited twice.
            std::vector<int> visited{f.src};
            for (int li : f.route) {
                int nxt = net.link(li).dst;
                if (std::find(visited.begin(), visited.end(), nxt) != visited.end()) {
                    throw ValidationError(tag + "route revisits a node");
                }
                visited.push_back(nxt);
            }
        }
    }
}

} // namespace tsn
