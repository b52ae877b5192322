#pragma once

// Seeded multi-worker episodes. Each timestep: the robot decides; a suggestion
// first moves the worker's influence (and the robot's belief about it); every
// unfinished worker then acts; kits advance; the robot filters on what it saw.

#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "attnswitch/assist_pomdp.hpp"
#include "attnswitch/belief.hpp"
#include "attnswitch/exact_planner.hpp"
#include "attnswitch/human_model.hpp"
#include "attnswitch/policies.hpp"
#include "attnswitch/rng.hpp"
#include "attnswitch/task_domain.hpp"

namespace attnswitch {

/// Everything solved offline for one instance; shared read-only by all episodes.
struct Planner {
    std::shared_ptr<const StateSpace> space;
    std::shared_ptr<const CostTable> cost;
    std::shared_ptr<const AssistModel> model;
    std::shared_ptr<const AssistPolicy> policy;

    static Planner build(const KitInstance& inst, const BehaviorGrid& grid, const RewardConfig& rewards,
                         const TrustModel& trust, double discount, double tol);
};

inline constexpr std::size_t kDefaultStepCap = 500;

struct EpisodeConfig {
    const Planner* planner = nullptr;
    std::vector<HumanProfile> workers;
    PolicyKind policy = PolicyKind::Attention;
    Heuristic heuristic = Heuristic::QValue;
    std::uint64_t seed = 0;
    std::size_t step_cap = kDefaultStepCap;
    std::optional<BehaviorBelief> prior;  // robot's initial belief per worker; uniform when unset
    std::ostream* trace = nullptr;        // JSON lines, one per step, when set
};

struct WorkerRecord {
    std::size_t human_actions = 0;
    std::size_t interventions = 0;
    std::size_t belief_resets = 0;
    double final_theta = 0.0;

    friend bool operator==(const WorkerRecord&, const WorkerRecord&) = default;
};

struct RunRecord {
    std::vector<WorkerRecord> workers;
    std::size_t relocations = 0;
    std::size_t steps = 0;
    double discounted_return = 0.0;
    bool completed = false;

    std::size_t total_human_actions() const {
        std::size_t n = 0;
        for (const auto& w : workers) n += w.human_actions;
        return n;
    }
    std::size_t total_interventions() const {
        std::size_t n = 0;
        for (const auto& w : workers) n += w.interventions;
        return n;
    }
    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

RunRecord run_episode(const EpisodeConfig& cfg);

// ===========================================================================

inline Planner Planner::build(const KitInstance& inst, const BehaviorGrid& grid, const RewardConfig& rewards,
                              const TrustModel& trust, double discount, double tol) {
    Planner p;
    p.space = std::make_shared<const StateSpace>(inst);
    p.cost = std::make_shared<const CostTable>(solve_cost_to_go(p.space));
    p.model = std::make_shared<const AssistModel>(p.cost, grid, rewards, trust, discount);
    p.policy = std::make_shared<const AssistPolicy>(solve_qmdp(p.model, tol));
    return p;
}

inline RunRecord run_episode(const EpisodeConfig& cfg) {
    if (!cfg.planner) throw ContractViolation("episode has no planner");
    if (cfg.workers.empty()) throw ContractViolation("episode needs at least one worker");
    if (cfg.step_cap == 0) throw ContractViolation("step cap must be positive");
    const auto& planner = *cfg.planner;
    const auto& space = *planner.space;
    const auto& cost = *planner.cost;
    const auto& model = *planner.model;
    const auto& grid = model.grid();
    const auto& rewards = model.rewards();
    const std::size_t k_count = cfg.workers.size();

    std::vector<HumanProfile> humans = cfg.workers;  // theta evolves per episode
    for (const auto& h : humans) validate(h);
    std::vector<std::size_t> xs(k_count, space.initial());
    std::vector<BehaviorBelief> beliefs(k_count, cfg.prior ? *cfg.prior : init_belief(grid));
    if (beliefs.front().p.size() != grid.size()) throw ContractViolation("prior does not match the behavior grid");
    std::vector<std::optional<LastMove>> last(k_count);
    std::vector<RngStream> streams;
    for (std::size_t k = 0; k < k_count; ++k)
        streams.emplace_back(derive_seed({cfg.seed, static_cast<std::uint64_t>(StreamPurpose::HumanAction), k}));

    RunRecord rec;
    rec.workers.resize(k_count);
    RobotState robot;
    double discount_factor = 1.0;

    auto all_done = [&] {
        for (auto x : xs)
            if (!space.terminal(x)) return false;
        return true;
    };

    while (!all_done() && rec.steps < cfg.step_cap) {
        RobotDecision decision;
        switch (cfg.policy) {
            case PolicyKind::Attention:
                decision = attention_step(beliefs, xs, robot, *planner.policy, rewards, cfg.heuristic);
                break;
            case PolicyKind::Reactive: decision = reactive_step(xs, robot, cost, last); break;
            case PolicyKind::None: decision = none_step(); break;
        }

        double reward = 0.0;
        std::optional<std::size_t> helped;
        if (decision.assist) {
            const auto [k, a] = *decision.assist;
            if (robot.location != k) {
                ++rec.relocations;
                reward -= rewards.move_cost;
                robot.location = k;
            }
            ++rec.workers[k].interventions;
            reward -= rewards.intervention_cost;
            humans[k].theta = update_influence(humans[k], space, xs[k], a);
            beliefs[k] = advance_theta(beliefs[k], grid, cost, xs[k], a, model.trust());
            helped = k;
        }

        nlohmann::json trace_workers = nlohmann::json::array();
        for (std::size_t k = 0; k < k_count; ++k) {
            if (space.terminal(xs[k])) {
                last[k].reset();
                if (cfg.trace) trace_workers.push_back({{"worker", k}, {"done", true}});
                continue;
            }
            std::optional<HumanAction> suggestion;
            if (helped == k) suggestion = decision.assist->action;
            const auto dist = suggestion ? influenced_distribution(humans[k], space, xs[k], *suggestion)
                                         : action_distribution(humans[k], space, xs[k]);
            const auto e = sample_action(dist, streams[k]);
            const auto edge = space.edges(xs[k])[e];
            const std::size_t from = xs[k];
            xs[k] = edge.next;
            last[k] = LastMove{from, edge.action};
            ++rec.workers[k].human_actions;
            reward -= rewards.step_cost;

            auto upd = update(beliefs[k], grid, cost, from, suggestion, edge.action);
            beliefs[k] = std::move(upd.belief);
            if (upd.reset) ++rec.workers[k].belief_resets;

            if (cfg.trace)
                trace_workers.push_back({{"worker", k},
                                         {"action", to_string(space.instance(), edge.action)},
                                         {"theta", humans[k].theta},
                                         {"belief_beta_mean", beliefs[k].beta_mean(grid)},
                                         {"belief_theta_mean", beliefs[k].theta_mean(grid)},
                                         {"belief_reset", upd.reset}});
        }

        if (cfg.trace) {
            nlohmann::json line{{"t", rec.steps}, {"reward", reward}, {"workers", trace_workers}};
            if (decision.assist)
                line["decision"] = {{"assist", decision.assist->worker},
                                    {"action", to_string(space.instance(), decision.assist->action)}};
            else
                line["decision"] = "idle";
            *cfg.trace << line.dump() << '\n';
        }

        rec.discounted_return += discount_factor * reward;
        discount_factor *= model.discount();
        ++rec.steps;
    }

    rec.completed = all_done();
    for (std::size_t k = 0; k < k_count; ++k) rec.workers[k].final_theta = humans[k].theta;
    return rec;
}

}  // namespace attnswitch
