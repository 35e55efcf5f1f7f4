#include "tsn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "tsn/errors.hpp"
#include "tsn/rng.hpp"

namespace tsn {

const char* topo_name(TopoKind k) {
    switch (k) {
    case TopoKind::Sae: return "sae";
    case TopoKind::Afdx: return "afdx";
    case TopoKind::Ladder: return "ladder";
    }
    return "?";
}

std::optional<TopoKind> topo_from_name(const std::string& s) {
    if (s == "sae") return TopoKind::Sae;
    if (s == "afdx") return TopoKind::Afdx;
    if (s == "ladder") return TopoKind::Ladder;
    return std::nullopt;
}

namespace {

struct Builder {
    std::vector<Node> nodes;
    std::vector<Link> links;
    std::int64_t rate;

    int add_switch(int id) {
        nodes.push_back({id, NodeKind::Switch});
        return id;
    }
    int add_es(int id) {
        nodes.push_back({id, NodeKind::EndStation});
        return id;
    }
    void connect(int a, int b) {
        links.push_back({a, b, rate, 0, 0});
        links.push_back({b, a, rate, 0, 0});
    }
};

} // namespace

Network gen_topology(TopoKind kind, const TopoParams& params) {
    Builder b;
    b.rate = params.rate_bps;
    if (params.rate_bps <= 0) {
        throw ArgumentError("link rate must be positive");
    }

    switch (kind) {
    case TopoKind::Sae: {
        const int es_per = params.es_per_switch < 0 ? 3 : params.es_per_switch;
        for (int s = 0; s < 5; ++s) {
            b.add_switch(s);
        }
        for (int s = 0; s < 5; ++s) {
            b.connect(s, (s + 1) % 5);
        }
        b.connect(0, 2);
        b.connect(1, 3);
        int next = 5;
        for (int s = 0; s < 5; ++s) {
            for (int e = 0; e < es_per; ++e) {
                b.add_es(next);
                b.connect(next, s);
                ++next;
            }
        }
        break;
    }
    case TopoKind::Afdx: {
        const int es_per = params.es_per_switch < 0 ? 4 : params.es_per_switch;
        for (int s = 0; s < 8; ++s) {
            b.add_switch(s);
        }
        for (int group = 0; group < 2; ++group) {
            const int base = group * 4;
            for (int i = 0; i < 4; ++i) {
                for (int j = i + 1; j < 4; ++j) {
                    b.connect(base + i, base + j);
                }
            }
        }
        for (int i = 0; i < 4; ++i) {
            b.connect(i, i + 4);
        }
        int next = 8;
        for (int s = 0; s < 8; ++s) {
            for (int e = 0; e < es_per; ++e) {
                b.add_es(next);
                b.connect(next, s);
                ++next;
            }
        }
        break;
    }
    case TopoKind::Ladder: {
        const int k = params.ladder_k;
        if (k < 1) {
            throw ArgumentError("ladder needs at least one switch per rail");
        }
        const int es_per = params.es_per_switch < 0 ? 1 : params.es_per_switch;
        // Rail A: 0..k-1, rail B: k..2k-1.
        for (int s = 0; s < 2 * k; ++s) {
            b.add_switch(s);
        }
        for (int i = 0; i + 1 < k; ++i) {
            b.connect(i, i + 1);
            b.connect(k + i, k + i + 1);
        }
        for (int i = 0; i < k; ++i) {
            b.connect(i, k + i);
        }
        int next = 2 * k;
        for (int s = 0; s < 2 * k; ++s) {
            for (int e = 0; e < es_per; ++e) {
                b.add_es(next);
                b.connect(next, s);
                ++next;
            }
        }
        break;
    }
    }
    return Network(std::move(b.nodes), std::move(b.links));
}

std::vector<Flow> gen_flows(const Network& net, const FlowGenParams& params, std::uint64_t seed) {
    if (params.count <= 0) {
        throw ArgumentError("flow count must be positive");
    }
    int mix_sum = 0;
    for (int m : params.mix_permille) {
        mix_sum += m;
    }
    if (mix_sum != 1000) {
        throw ArgumentError("class mix must sum to 1000 per-mille");
    }
    std::vector<int> stations;
    for (const Node& n : net.nodes()) {
        if (n.kind == NodeKind::EndStation) {
            stations.push_back(n.id);
        }
    }
    if (stations.size() < 2) {
        throw ArgumentError("network needs at least two end stations");
    }

    Rng rng(seed);
    std::vector<Flow> flows;
    flows.reserve(static_cast<size_t>(params.count));
    for (int i = 0; i < params.count; ++i) {
        Flow f;
        f.id = i;
        // Ordered pair of distinct end stations, uniform with replacement so
        // flow groups of size above one actually occur.
        f.src = stations[rng.below(stations.size())];
        do {
            f.dst = stations[rng.below(stations.size())];
        } while (f.dst == f.src);
        f.period = params.periods[rng.below(params.periods.size())];
        f.size_b = params.size_b;
        f.ddl = f.period / 2 + rng.range(0, f.period - f.period / 2);
        const int roll = static_cast<int>(rng.below(1000));
        int acc = 0;
        for (int c = 0; c < 4; ++c) {
            acc += params.mix_permille[static_cast<size_t>(c)];
            if (roll < acc) {
                f.static_prio = static_cast<PriorityClass>(c);
                break;
            }
        }
        flows.push_back(std::move(f));
    }
    validate_and_route(net, flows);
    return flows;
}

std::pair<double, double> nominal_utilization(const Solution& solution,
                                              const std::vector<Flow>& flows, const Network& net,
                                              const Config& cfg) {
    std::map<int, const Flow*> by_id;
    for (const Flow& f : flows) {
        by_id[f.id] = &f;
    }
    double raw = 0;
    for (const SolutionFlow& sf : solution.flows) {
        if (!sf.scheduled) {
            continue;
        }
        const Flow& f = *by_id.at(sf.id);
        for (int li : f.route) {
            const Ns c = transmission_time(f.size_b, net.link(li), cfg.frame_overhead);
            raw += static_cast<double>(c) / static_cast<double>(f.period);
        }
    }
    const double per_link = net.link_count() > 0 ? raw / net.link_count() : 0;
    return {raw, per_link};
}

namespace {

// Minimal flat TOML subset: comments, [section] headers (flattened into key
// prefixes), string/int/float/bool scalars and one-line arrays.
struct TomlValue {
    std::string raw;
};

std::map<std::string, std::string> parse_flat_toml(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ValidationError("malformed TOML section: " + line);
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("malformed TOML line: " + line);
        }
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) {
            key = section + "." + key;
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

std::vector<std::string> split_array(const std::string& raw) {
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
        throw ValidationError("expected TOML array, got: " + raw);
    }
    std::vector<std::string> items;
    std::string cur;
    for (char ch : raw.substr(1, raw.size() - 2)) {
        if (ch == ',') {
            items.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) {
        items.push_back(cur);
    }
    for (auto& s : items) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }
    items.erase(std::remove(items.begin(), items.end(), ""), items.end());
    return items;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

} // namespace

BenchConfig bench_config_from_toml(const std::string& text) {
    BenchConfig cfg;
    auto kv = parse_flat_toml(text);
    auto has = [&](const char* k) { return kv.count(k) != 0; };

    if (has("topologies")) {
        cfg.topologies.clear();
        for (const auto& s : split_array(kv["topologies"])) {
            auto t = topo_from_name(unquote(s));
            if (!t) {
                throw ValidationError("unknown topology: " + s);
            }
            cfg.topologies.push_back(*t);
        }
    }
    if (has("flow_counts")) {
        cfg.flow_counts.clear();
        for (const auto& s : split_array(kv["flow_counts"])) {
            cfg.flow_counts.push_back(std::stoi(s));
        }
    }
    if (has("algos")) {
        cfg.algos.clear();
        for (const auto& s : split_array(kv["algos"])) {
            auto a = algo_from_name(unquote(s));
            if (!a) {
                throw ValidationError("unknown algorithm: " + s);
            }
            cfg.algos.push_back(*a);
        }
    }
    if (has("seed_base")) cfg.seed_base = std::stoull(kv["seed_base"]);
    if (has("seed_count")) cfg.seed_count = std::stoi(kv["seed_count"]);
    if (has("jobs")) cfg.jobs = std::stoi(kv["jobs"]);
    if (has("workers")) cfg.workers = std::stoi(kv["workers"]);
    if (has("ladder_k")) cfg.topo_params.ladder_k = std::stoi(kv["ladder_k"]);
    if (has("es_per_switch")) cfg.topo_params.es_per_switch = std::stoi(kv["es_per_switch"]);
    if (has("rate_bps")) cfg.topo_params.rate_bps = std::stoll(kv["rate_bps"]);
    if (has("mix_permille")) {
        auto items = split_array(kv["mix_permille"]);
        if (items.size() != 4) {
            throw ValidationError("mix_permille needs four entries");
        }
        for (size_t i = 0; i < 4; ++i) {
            cfg.flow_params.mix_permille[i] = std::stoi(items[i]);
        }
    }
    if (has("periods_us")) {
        cfg.flow_params.periods.clear();
        for (const auto& s : split_array(kv["periods_us"])) {
            cfg.flow_params.periods.push_back(std::stoll(s) * kMicro);
        }
    }
    if (has("config.preemption")) cfg.net_config.preemption = kv["config.preemption"] == "true";
    if (has("config.frame_overhead"))
        cfg.net_config.frame_overhead = kv["config.frame_overhead"] == "true";
    if (has("config.tt_guard_pad"))
        cfg.net_config.tt_guard_pad = kv["config.tt_guard_pad"] == "true";
    if (has("config.slope_a_pct")) cfg.net_config.slope_a_pct = std::stoi(kv["config.slope_a_pct"]);
    if (has("config.slope_b_pct")) cfg.net_config.slope_b_pct = std::stoi(kv["config.slope_b_pct"]);
    return cfg;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    struct Task {
        TopoKind topo;
        int count;
        Algo algo;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (TopoKind t : cfg.topologies) {
        for (int n : cfg.flow_counts) {
            for (Algo a : cfg.algos) {
                for (int s = 0; s < cfg.seed_count; ++s) {
                    tasks.push_back({t, n, a, cfg.seed_base + static_cast<std::uint64_t>(s)});
                }
            }
        }
    }

    std::vector<BenchRow> rows(tasks.size());
    auto run_one = [&](size_t i) {
        const Task& t = tasks[i];
        BenchRow row;
        row.topology = topo_name(t.topo);
        row.flow_count = t.count;
        row.algo = algo_name(t.algo);
        row.seed = t.seed;
        try {
            const Network net = gen_topology(t.topo, cfg.topo_params);
            FlowGenParams fp = cfg.flow_params;
            fp.count = t.count;
            const std::vector<Flow> flows = gen_flows(net, fp, t.seed);
            const auto t0 = std::chrono::steady_clock::now();
            const Solution sol = orchestrate(net, flows, cfg.net_config, t.algo, cfg.jobs);
            const auto t1 = std::chrono::steady_clock::now();
            row.wall_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
            row.scheduled = sol.objective;
            row.total = static_cast<int>(flows.size());
            row.success_rate = static_cast<double>(sol.objective) / row.total;
            auto util = nominal_utilization(sol, flows, net, cfg.net_config);
            row.util_raw = util.first;
            row.util_per_link = util.second;
            for (const SolutionFlow& sf : sol.flows) {
                if (!sf.scheduled) {
                    continue;
                }
                switch (sf.assigned) {
                case PriorityClass::TT: row.tt++; break;
                case PriorityClass::AvbA: row.avb_a++; break;
                case PriorityClass::AvbB: row.avb_b++; break;
                case PriorityClass::BE: row.be++; break;
                }
            }
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
        rows[i] = std::move(row);
    };

    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        for (size_t i = 0; i < tasks.size(); ++i) {
            run_one(i);
        }
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::future<void>> futs;
        for (int w = 0; w < workers; ++w) {
            futs.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) {
                        return;
                    }
                    run_one(i);
                }
            }));
        }
        for (auto& f : futs) {
            f.get();
        }
    }
    return rows;
}

namespace {
std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
} // namespace

std::string bench_rows_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "topology,flows,algo,seed,scheduled,total,success_rate,util_raw,util_per_link,"
          "wall_ms,tt,avb_a,avb_b,be,status\n";
    for (const BenchRow& r : rows) {
        os << r.topology << ',' << r.flow_count << ',' << r.algo << ',' << r.seed << ','
           << r.scheduled << ',' << r.total << ',' << fmt6(r.success_rate) << ','
           << fmt6(r.util_raw) << ',' << fmt6(r.util_per_link) << ',' << r.wall_ms << ',' << r.tt
           << ',' << r.avb_a << ',' << r.avb_b << ',' << r.be << ',' << r.status << '\n';
    }
    return os.str();
}

std::vector<BenchRow> bench_rows_from_csv(const std::string& text) {
    std::vector<BenchRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        f.push_back(cur);
        if (f.size() < 15) {
            throw ValidationError("bad benchmark CSV row: " + line);
        }
        BenchRow r;
        r.topology = f[0];
        r.flow_count = std::stoi(f[1]);
        r.algo = f[2];
        r.seed = std::stoull(f[3]);
        r.scheduled = std::stoi(f[4]);
        r.total = std::stoi(f[5]);
        r.success_rate = std::stod(f[6]);
        r.util_raw = std::stod(f[7]);
        r.util_per_link = std::stod(f[8]);
        r.wall_ms = std::stoll(f[9]);
        r.tt = std::stoi(f[10]);
        r.avb_a = std::stoi(f[11]);
        r.avb_b = std::stoi(f[12]);
        r.be = std::stoi(f[13]);
        r.status = f[14];
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct GroupKey {
    std::string topo;
    int flows;
    std::string algo;
    bool operator<(const GroupKey& o) const {
        if (topo != o.topo) return topo < o.topo;
        if (flows != o.flows) return flows < o.flows;
        return algo < o.algo;
    }
};

std::map<GroupKey, std::vector<const BenchRow*>> group_rows(const std::vector<BenchRow>& rows) {
    std::map<GroupKey, std::vector<const BenchRow*>> g;
    for (const BenchRow& r : rows) {
        if (r.status != "ok") {
            continue;
        }
        g[{r.topology, r.flow_count, r.algo}].push_back(&r);
    }
    return g;
}

} // namespace

std::string bench_summary_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "topology,flows,algo,runs,mean_success_rate,mean_util_raw,mean_wall_ms\n";
    for (const auto& [k, v] : group_rows(rows)) {
        double sr = 0, util = 0, wall = 0;
        for (const BenchRow* r : v) {
            sr += r->success_rate;
            util += r->util_raw;
            wall += static_cast<double>(r->wall_ms);
        }
        const double n = static_cast<double>(v.size());
        os << k.topo << ',' << k.flows << ',' << k.algo << ',' << v.size() << ','
           << fmt6(sr / n) << ',' << fmt6(util / n) << ',' << fmt6(wall / n) << '\n';
    }
    return os.str();
}

std::string bench_summary_table(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "topology  flows  algo      runs  success   util      wall_ms\n";
    for (const auto& [k, v] : group_rows(rows)) {
        double sr = 0, util = 0, wall = 0;
        for (const BenchRow* r : v) {
            sr += r->success_rate;
            util += r->util_raw;
            wall += static_cast<double>(r->wall_ms);
        }
        const double n = static_cast<double>(v.size());
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-9s %-6d %-9s %-5zu %-9.4f %-9.4f %.1f\n",
                      k.topo.c_str(), k.flows, k.algo.c_str(), v.size(), sr / n, util / n,
                      wall / n);
        os << buf;
    }
    return os.str();
}

std::string bench_plot_svg(const std::vector<BenchRow>& rows, const std::string& topology) {
    auto groups = group_rows(rows);
    std::set<int> counts;
    std::set<std::string> algos;
    for (const auto& [k, v] : groups) {
        if (k.topo == topology) {
            counts.insert(k.flows);
            algos.insert(k.algo);
        }
    }
    const int w = 640, h = 420, ml = 60, mb = 50, mt = 30, mr = 20;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\">\n";
    os << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
       << topology << ": mean success rate vs flow count</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
       << h - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    if (counts.empty()) {
        os << "</svg>\n";
        return os.str();
    }
    const double xmin = *counts.begin(), xmax = *counts.rbegin();
    auto sx = [&](double c) {
        return xmax == xmin ? ml : ml + (c - xmin) / (xmax - xmin) * (w - ml - mr);
    };
    auto sy = [&](double r) { return (h - mb) - r * (h - mb - mt); };
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    int ci = 0;
    for (const std::string& algo : algos) {
        std::ostringstream pts;
        for (int c : counts) {
            auto it = groups.find({topology, c, algo});
            if (it == groups.end()) {
                continue;
            }
            double sr = 0;
            for (const BenchRow* r : it->second) {
                sr += r->success_rate;
            }
            sr /= static_cast<double>(it->second.size());
            pts << sx(c) << ',' << sy(sr) << ' ';
        }
        const char* color = colors[ci % 4];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
           << pts.str() << "\"/>\n";
        os << "<text x=\"" << w - mr - 100 << "\" y=\"" << mt + 16 * (ci + 1)
           << "\" font-size=\"12\" fill=\"" << color << "\">" << algo << "</text>\n";
        ++ci;
    }
    for (int c : counts) {
        os << "<text x=\"" << sx(c) << "\" y=\"" << h - mb + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << c << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double r = i * 0.25;
        os << "<text x=\"" << ml - 8 << "\" y=\"" << sy(r) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt6(r).substr(0, 4) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace tsn
