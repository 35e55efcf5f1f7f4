#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsn/flow_groups.hpp"
#include "tsn/model.hpp"
#include "tsn/rta.hpp"
#include "tsn/tt_schedule.hpp"

namespace tsn {

enum class Algo { Static, Upgrade, Proposed };

const char* algo_name(Algo a);
std::optional<Algo> algo_from_name(const std::string& s);

struct EstimateDrop {
    int flow = -1;
    std::optional<Ns> rt_at_drop;  // set bound that failed the head's guard
    Ns ddl = 0;
};

struct EstimateResult {
    std::vector<int> kept;  // deadline-ascending survivors
    std::vector<EstimateDrop> drops;

    int count() const { return static_cast<int>(kept.size()); }
};

// Set-based schedulability estimate: sort deadline-ascending, drop the head
// while its deadline cannot cover the whole remaining set's bound.
EstimateResult estimate_schedulable(const std::vector<int>& same_class_ids,
                                    const RtaContext& ctx);

// One component's scheduling outcome before the final evaluation.
struct Fragment {
    std::map<int, PriorityClass> classes;  // component flows only
    TtSchedule schedule;
    std::vector<int> tt_failed;  // statically-TT flows with no placement
};

// `promotion_policy` picks the phase-1 commit rule (0 greedy, 1 no-harm,
// 2 strict-gain); the orchestrator tries all three and keeps the best
// component fragment. `all_a_out`, when given, receives the snapshot taken
// right before the class-B walk (all undecided flows still in class A).
Fragment schedule_parallel_fg(const std::vector<const Flow*>& component_flows,
                              const std::vector<Flow>& all_flows, const Network& net,
                              const Config& cfg, Ns hyper, int promotion_policy = 1,
                              Fragment* all_a_out = nullptr);

Fragment schedule_cross_fg(const std::vector<const Flow*>& component_flows,
                           const std::vector<Flow>& all_flows, const Network& net,
                           const Config& cfg, Ns hyper, int promotion_policy = 1,
                           Fragment* all_a_out = nullptr);

struct SolutionFlow {
    int id = -1;
    PriorityClass static_cls = PriorityClass::AvbA;
    PriorityClass assigned = PriorityClass::AvbA;
    bool scheduled = false;
    std::optional<Ns> rt;
    Ns ddl = 0;
};

struct Solution {
    std::vector<SolutionFlow> flows;  // ascending id
    std::map<int, PriorityClass> classes;
    TtSchedule schedule;
    int objective = 0;
    RtaReport rta;
};

// Definitive scoring of one class assignment against one TT schedule: TT
// flows count when placed, AVB flows when their re-derived worst-case delay
// meets the deadline, BE always.
Solution evaluate_assignment(const Network& net, const std::vector<Flow>& flows,
                             std::map<int, PriorityClass> classes, TtSchedule schedule,
                             const Config& cfg);

// Full pipeline: flow groups, conflict components, per-component scheduling
// (possibly on `jobs` threads; the result does not depend on the thread
// count), deterministic merge and the final per-flow evaluation.
Solution orchestrate(const Network& net, const std::vector<Flow>& flows, const Config& cfg,
                     Algo algo, int jobs = 1);

// Re-derives every scheduled flow's worst-case delay from the emitted classes
// and schedule and compares against the deadline; returns human-readable
// violations (empty = consistent).
std::vector<std::string> verify_deadlines(const Network& net, const std::vector<Flow>& flows,
                                          const Solution& solution, const Config& cfg);

std::string solution_to_json_text(const Solution& solution, const Network& net,
                                  const std::vector<Flow>& flows);

// Enough of a solution to drive the simulator: classes, admitted flags and
// the TT schedule.
struct LoadedSolution {
    std::map<int, PriorityClass> classes;
    std::map<int, bool> scheduled;
    TtSchedule schedule;
};
LoadedSolution solution_from_json_text(const std::string& text, const Network& net,
                                       const std::vector<Flow>& flows);

} // namespace tsn
