#include "tsn/json_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tsn/errors.hpp"

namespace tsn {

using json = nlohmann::ordered_json;

namespace {
json parse(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("malformed JSON document");
    }
    return j;
}
} // namespace

Network network_from_json_text(const std::string& text) {
    json j = parse(text);
    if (!j.contains("nodes") || !j.contains("links")) {
        throw ValidationError("network document needs 'nodes' and 'links'");
    }
    std::vector<Node> nodes;
    for (const auto& n : j["nodes"]) {
        Node node;
        node.id = n.at("id").get<int>();
        const std::string kind = n.at("kind").get<std::string>();
        if (kind == "es") {
            node.kind = NodeKind::EndStation;
        } else if (kind == "sw") {
            node.kind = NodeKind::Switch;
        } else {
            throw ValidationError("node kind must be 'es' or 'sw'");
        }
        nodes.push_back(node);
    }
    std::vector<Link> links;
    for (const auto& l : j["links"]) {
        Link link;
        link.src = l.at("src").get<int>();
        link.dst = l.at("dst").get<int>();
        link.rate_bps = l.at("rate_bps").get<std::int64_t>();
        link.propagation = l.value("propagation_ns", std::int64_t{0});
        link.proc_delay = l.value("proc_delay_ns", std::int64_t{0});
        links.push_back(link);
    }
    return Network(std::move(nodes), std::move(links));
}

std::string network_to_json_text(const Network& net) {
    json j;
    j["nodes"] = json::array();
    for (const Node& n : net.nodes()) {
        j["nodes"].push_back({{"id", n.id}, {"kind", n.kind == NodeKind::Switch ? "sw" : "es"}});
    }
    j["links"] = json::array();
    for (const Link& l : net.links()) {
        json lj = {{"src", l.src}, {"dst", l.dst}, {"rate_bps", l.rate_bps}};
        if (l.propagation != 0) lj["propagation_ns"] = l.propagation;
        if (l.proc_delay != 0) lj["proc_delay_ns"] = l.proc_delay;
        j["links"].push_back(lj);
    }
    return j.dump(2) + "\n";
}

std::vector<Flow> flows_from_json_text(const std::string& text, const Network& net) {
    json j = parse(text);
    if (!j.contains("flows")) {
        throw ValidationError("flow document needs 'flows'");
    }
    std::vector<Flow> flows;
    for (const auto& fj : j["flows"]) {
        Flow f;
        f.id = fj.at("id").get<int>();
        f.src = fj.at("src").get<int>();
        f.dst = fj.at("dst").get<int>();
        f.period = fj.at("period_ns").get<std::int64_t>();
        f.size_b = fj.value("size_b", 1500);
        f.ddl = fj.at("ddl_ns").get<std::int64_t>();
        auto cls = class_from_name(fj.at("class").get<std::string>());
        if (!cls) {
            throw ValidationError("unknown flow class");
        }
        f.static_prio = *cls;
        if (fj.contains("route")) {
            // Route given as the node-id sequence including both endpoints.
            const auto& nodes = fj["route"];
            for (size_t i = 0; i + 1 < nodes.size(); ++i) {
                int li = net.find_link(nodes[i].get<int>(), nodes[i + 1].get<int>());
                if (li < 0) {
                    throw ValidationError("flow route uses a nonexistent link");
                }
                f.route.push_back(li);
            }
        }
        flows.push_back(f);
    }
    validate_and_route(net, flows);
    return flows;
}

std::string flows_to_json_text(const std::vector<Flow>& flows) {
    json j;
    j["flows"] = json::array();
    for (const Flow& f : flows) {
        j["flows"].push_back({{"id", f.id},
                              {"src", f.src},
                              {"dst", f.dst},
                              {"period_ns", f.period},
                              {"size_b", f.size_b},
                              {"ddl_ns", f.ddl},
                              {"class", class_name(f.static_prio)}});
    }
    return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ArgumentError("cannot write " + path);
    }
    out << content;
}

} // namespace tsn
