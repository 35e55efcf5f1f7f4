#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsn/model.hpp"
#include "tsn/tt_schedule.hpp"

namespace tsn {

struct SimOptions {
    int horizon = 10;           // hyperperiods of frame releases
    std::uint64_t seed = 0;
    bool random_phase = false;  // AVB/BE release phase uniform in [0, period); TT stays 0
    bool collect_trace = false;
    double be_poisson_load = 0.0;  // optional background load per ES uplink, fraction of rate
    int be_poisson_frame_b = 1518;
};

struct SimFlowStats {
    std::int64_t released = 0;
    std::int64_t delivered = 0;
    std::int64_t deadline_misses = 0;
    Ns max_delay = 0;
    std::int64_t delay_sum = 0;

    Ns mean_delay() const { return delivered > 0 ? delay_sum / delivered : 0; }
};

struct TtTxRecord {
    int flow = -1;
    int instance = 0;
    int link = -1;
    Ns start = 0;
    Ns end = 0;
};

struct SimResult {
    std::map<int, SimFlowStats> per_flow;
    std::int64_t frames_released = 0;
    std::int64_t frames_delivered = 0;
    std::int64_t frames_stranded = 0;  // still queued or in flight at drain cutoff
    bool credits_neutral = true;       // every CBS credit recovered to exactly 0
    std::vector<TtTxRecord> tt_transmissions;
    std::string trace_csv;
};

// Event-driven run of every flow in `flows` (the caller filters to the
// admitted set). TT flows must carry a placement in `schedule`; gate states
// come from the GCL entries.
SimResult simulate(const Network& net, const std::vector<Flow>& flows,
                   const std::map<int, PriorityClass>& classes, const TtSchedule& schedule,
                   const std::vector<PortGcl>& gcls, const Config& cfg, const SimOptions& opts);

// Every TT transmission must sit inside its reservation window.
std::vector<std::string> check_tt_containment(const SimResult& result,
                                              const TtSchedule& schedule,
                                              const std::vector<Flow>& flows);

// One hyperperiod with only the TT traffic: window containment plus full
// delivery. Empty result means the schedule replays cleanly.
std::vector<std::string> replay_check(const Network& net, const std::vector<Flow>& flows,
                                      const std::map<int, PriorityClass>& classes,
                                      const TtSchedule& schedule,
                                      const std::vector<PortGcl>& gcls, const Config& cfg);

std::string sim_result_json(const SimResult& result, const std::vector<Flow>& flows);

} // namespace tsn
