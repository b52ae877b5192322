#pragma once

// Top-level robot controllers over K workers: greedy attention switching,
// a reactive mistake-correcting baseline, and no assistance.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnswitch/assist_pomdp.hpp"
#include "attnswitch/belief.hpp"
#include "attnswitch/error.hpp"
#include "attnswitch/exact_planner.hpp"

namespace attnswitch {

enum class PolicyKind { Attention, Reactive, None };

inline std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Attention: return "attention";
        case PolicyKind::Reactive: return "reactive";
        case PolicyKind::None: return "none";
    }
    return "?";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
    if (s == "attention") return PolicyKind::Attention;
    if (s == "reactive") return PolicyKind::Reactive;
    if (s == "none") return PolicyKind::None;
    throw ConfigError("unknown policy '" + s + "' (expected attention, reactive or none)");
}

inline std::string to_string(Heuristic h) { return h == Heuristic::QValue ? "qvalue" : "one-step"; }

inline Heuristic parse_heuristic(const std::string& s) {
    if (s == "qvalue") return Heuristic::QValue;
    if (s == "one-step") return Heuristic::OneStep;
    throw ConfigError("unknown heuristic '" + s + "' (expected qvalue or one-step)");
}

/// Where the robot stands: at a worker's station, or docked before the first assist.
struct RobotState {
    std::optional<std::size_t> location;
};

struct RobotDecision {
    struct Assist {
        std::size_t worker;
        HumanAction action;
        friend bool operator==(const Assist&, const Assist&) = default;
    };
    std::optional<Assist> assist;  // empty means Idle

    bool idle() const noexcept { return !assist.has_value(); }
    static RobotDecision make_idle() { return {}; }
    static RobotDecision make_assist(std::size_t k, HumanAction a) { return {Assist{k, a}}; }
    friend bool operator==(const RobotDecision&, const RobotDecision&) = default;
};

/// One worker's entry in the attention ranking.
struct Candidate {
    std::size_t worker;
    double gain;             // R_pi - R_phi
    std::size_t suggestion;  // robot action index, kNoOp for none
};

/// Picks the candidate maximizing gain minus relocation cost (co-located worker,
/// then lowest index, on ties) and returns its index into `candidates`, or nullopt when the
/// best net gain is not positive or its suggestion is NoOp.
std::optional<std::size_t> select_candidate(std::span<const Candidate> candidates, const RobotState& robot,
                                            double move_cost);

RobotDecision attention_step(std::span<const BehaviorBelief> beliefs, std::span<const std::size_t> xs,
                             const RobotState& robot, const AssistPolicy& policy, const RewardConfig& rewards,
                             Heuristic mode = Heuristic::QValue);

/// What a worker did on the previous step.
struct LastMove {
    std::size_t from;  // state index before the action
    HumanAction action;
};

/// True when `m` was strictly costlier than the best action in its state.
bool is_mistake(const CostTable& cost, const LastMove& m);

RobotDecision reactive_step(std::span<const std::size_t> xs, const RobotState& robot, const CostTable& cost,
                            std::span<const std::optional<LastMove>> last_moves);

inline RobotDecision none_step() { return RobotDecision::make_idle(); }

// ===========================================================================

inline std::optional<std::size_t> select_candidate(std::span<const Candidate> candidates, const RobotState& robot,
                                                   double move_cost) {
    std::optional<std::size_t> best;
    double best_net = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const double relocation = robot.location == c.worker ? 0.0 : -move_cost;
        const double net = c.gain + relocation;
        bool better = !best || net > best_net;
        if (best && net == best_net) {
            // Ties stay with the worker the robot is already at, then go to the lowest index.
            const bool here = robot.location == c.worker, there = robot.location == candidates[*best].worker;
            better = here != there ? here : c.worker < candidates[*best].worker;
        }
        if (better) {
            best = i;
            best_net = net;
        }
    }
    if (!best || !(best_net > 0.0) || candidates[*best].suggestion == kNoOp) return std::nullopt;
    return best;
}

inline RobotDecision attention_step(std::span<const BehaviorBelief> beliefs, std::span<const std::size_t> xs,
                                    const RobotState& robot, const AssistPolicy& policy, const RewardConfig& rewards,
                                    Heuristic mode) {
    if (beliefs.size() != xs.size()) throw ContractViolation("one belief per worker is required");
    const auto& space = policy.model().space();
    std::vector<Candidate> candidates;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (space.terminal(xs[k])) continue;
        const auto ev = expected_values(policy, beliefs[k], xs[k], mode);
        candidates.push_back({k, ev.r_pi - ev.r_phi, ev.suggest});
    }
    if (candidates.empty()) throw ContractViolation("attention_step called with every worker finished");
    const auto pick = select_candidate(candidates, robot, rewards.move_cost);
    if (!pick) return RobotDecision::make_idle();
    const auto& c = candidates[*pick];
    return RobotDecision::make_assist(c.worker, policy.model().suggestion(c.suggestion));
}

inline bool is_mistake(const CostTable& cost, const LastMove& m) {
    const auto e = cost.space().edge_index(m.from, m.action);
    if (!e) throw ContractViolation("recorded move is not legal in its source state");
    return cost.q(m.from, *e) > cost.v(m.from) + 1e-9;
}

inline RobotDecision reactive_step(std::span<const std::size_t> xs, const RobotState& robot, const CostTable& cost,
                                   std::span<const std::optional<LastMove>> last_moves) {
    if (last_moves.size() != xs.size()) throw ContractViolation("one last-move slot per worker is required");
    const auto& space = cost.space();
    std::optional<std::size_t> chosen;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (space.terminal(xs[k]) || !last_moves[k] || !is_mistake(cost, *last_moves[k])) continue;
        if (robot.location == k) {
            chosen = k;
            break;
        }
        if (!chosen) chosen = k;
    }
    if (!chosen) return RobotDecision::make_idle();
    const auto x = xs[*chosen];
    return RobotDecision::make_assist(*chosen, space.edges(x)[cost.best_edge(x)].action);
}

}  // namespace attnswitch
