#pragma once

// Single-worker assistance model: hidden state is (kit state, expertise bin,
// influence bin), robot actions are NoOp or Suggest(a). Solved with QMDP, i.e.
// value iteration on the fully observable MDP and belief-weighted Q-values.
// Robot action 0 is NoOp; action i > 0 suggests all_actions()[i - 1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attnswitch/belief.hpp"
#include "attnswitch/error.hpp"
#include "attnswitch/exact_planner.hpp"
#include "attnswitch/human_model.hpp"
#include "attnswitch/mdp.hpp"

namespace attnswitch {

struct RewardConfig {
    double step_cost = 1.0;          // per human action while the kit is unfinished
    double intervention_cost = 0.1;  // per suggestion
    double move_cost = 1.0;          // per robot relocation between workers
};

/// Which per-worker score the attention policy compares.
enum class Heuristic {
    QValue,   // belief-weighted action values of the solved model
    OneStep,  // belief-weighted immediate rewards
};

inline constexpr std::size_t kNoOp = 0;

class AssistModel {
public:
    AssistModel(std::shared_ptr<const CostTable> cost, BehaviorGrid grid, RewardConfig rewards, TrustModel trust,
                double discount);

    const CostTable& cost() const noexcept { return *cost_; }
    std::shared_ptr<const CostTable> cost_ptr() const noexcept { return cost_; }
    const StateSpace& space() const noexcept { return cost_->space(); }
    const BehaviorGrid& grid() const noexcept { return grid_; }
    const RewardConfig& rewards() const noexcept { return rewards_; }
    const TrustModel& trust() const noexcept { return trust_; }
    const TabularMdp& mdp() const noexcept { return mdp_; }
    double discount() const noexcept { return mdp_.discount(); }

    std::size_t state_count() const noexcept { return mdp_.state_count(); }
    std::size_t action_count() const noexcept { return mdp_.action_count(); }
    std::size_t state(std::size_t env, std::size_t cell) const noexcept { return env * grid_.size() + cell; }
    std::size_t env_of(std::size_t s) const noexcept { return s / grid_.size(); }
    std::size_t cell_of(std::size_t s) const noexcept { return s % grid_.size(); }

    /// Human action proposed by robot action `a` (a > 0).
    const HumanAction& suggestion(std::size_t a) const { return suggestions_.at(a - 1); }
    std::size_t action_index(const HumanAction& h) const;
    std::string action_name(std::size_t a) const;

    bool available(std::size_t s, std::size_t a) const { return mdp_.available(s, a); }
    double reward(std::size_t s, std::size_t a) const { return mdp_.reward(s, a); }
    std::span<const Transition> transitions(std::size_t s, std::size_t a) const { return mdp_.transitions(s, a); }

private:
    std::shared_ptr<const CostTable> cost_;
    BehaviorGrid grid_;
    RewardConfig rewards_;
    TrustModel trust_;
    std::vector<HumanAction> suggestions_;
    TabularMdp mdp_;
};

class AssistPolicy {
public:
    AssistPolicy(std::shared_ptr<const AssistModel> model, std::vector<double> values, std::vector<double> qvalues,
                 double residual, std::size_t iterations)
        : model_(std::move(model)), values_(std::move(values)), qvalues_(std::move(qvalues)),
          residual_(residual), iterations_(iterations) {}

    const AssistModel& model() const noexcept { return *model_; }
    double value(std::size_t s) const { return values_.at(s); }
    /// -infinity for actions unavailable in s.
    double qvalue(std::size_t s, std::size_t a) const { return qvalues_.at(s * model_->action_count() + a); }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& qvalues() const noexcept { return qvalues_; }
    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

    /// Belief-weighted score of robot action a at env state x.
    double score(const BehaviorBelief& b, std::size_t x, std::size_t a) const;
    /// Argmax of score over available actions; NoOp wins ties.
    std::size_t act(const BehaviorBelief& b, std::size_t x) const;
    /// Greedy action of the underlying MDP at a single hidden state.
    std::size_t greedy(std::size_t s) const;

private:
    std::shared_ptr<const AssistModel> model_;
    std::vector<double> values_;
    std::vector<double> qvalues_;
    double residual_;
    std::size_t iterations_;
};

AssistPolicy solve_qmdp(std::shared_ptr<const AssistModel> model, double tol,
                        std::size_t iteration_cap = kDefaultIterationCap);

struct ExpectedValues {
    double r_pi = 0.0;
    double r_phi = 0.0;
    std::size_t suggest = kNoOp;  // robot action index
};

ExpectedValues expected_values(const AssistPolicy& policy, const BehaviorBelief& b, std::size_t x,
                               Heuristic mode = Heuristic::QValue);

/// Hidden states solved by the factored approach for k workers sharing one model.
inline double factored_state_count(const AssistModel& m, std::size_t k) {
    return static_cast<double>(k) * static_cast<double>(m.state_count());
}

/// Hidden states of the joint k-worker model (product of per-worker spaces).
inline double joint_state_count(const AssistModel& m, std::size_t k) {
    return std::pow(static_cast<double>(m.space().size()), static_cast<double>(k)) *
           std::pow(static_cast<double>(m.grid().size()), static_cast<double>(k));
}

// Policy cache: magic, version, key, sizes, values, qvalues.
inline constexpr char kPolicyCacheMagic[8] = {'A', 'S', 'P', 'O', 'L', 'I', 'C', 'Y'};
inline constexpr std::uint32_t kPolicyCacheVersion = 1;

std::uint64_t policy_key(const AssistModel& model, double tol);
void write_policy_cache(const AssistPolicy& policy, double tol, const std::filesystem::path& file);
std::optional<AssistPolicy> read_policy_cache(std::shared_ptr<const AssistModel> model, double tol,
                                              const std::filesystem::path& file);

// ===========================================================================

inline AssistModel::AssistModel(std::shared_ptr<const CostTable> cost, BehaviorGrid grid, RewardConfig rewards,
                                TrustModel trust, double discount)
    : cost_(std::move(cost)), grid_(std::move(grid)), rewards_(rewards), trust_(trust),
      suggestions_(all_actions(cost_->space().instance())),
      mdp_(cost_->space().size() * grid_.size(), 1 + suggestions_.size(), discount) {
    const auto& sp = space();
    for (std::size_t x = 0; x < sp.size(); ++x) {
        const auto edges = sp.edges(x);
        const auto q = cost_->q_row(x);
        for (std::size_t cell = 0; cell < grid_.size(); ++cell) {
            const std::size_t s = state(x, cell);
            if (sp.terminal(x)) {
                mdp_.set(s, kNoOp, 0.0, {{s, 1.0}});
                continue;
            }
            const std::size_t b = grid_.beta_of(cell);
            const std::size_t t = grid_.theta_of(cell);
            const double beta = grid_.beta_bins()[b];

            std::vector<Transition> row;
            const auto plain = boltzmann(q, beta);
            for (std::size_t e = 0; e < edges.size(); ++e)
                if (plain[e] > 0.0) row.push_back({state(edges[e].next, cell), plain[e]});
            mdp_.set(s, kNoOp, -rewards_.step_cost, std::move(row));

            // Suggest: influence moves first, then the worker acts on the moved value.
            for (std::size_t e = 0; e < edges.size(); ++e) {
                const double gain = true_utility_gain(*cost_, x, edges[e].action, trust_.form);
                const std::size_t t2 = grid_.nearest_theta(clamp_unit(grid_.theta_bins()[t] + trust_.eta * gain));
                const std::size_t cell2 = grid_.cell(b, t2);
                const auto dist = influenced(q, beta, grid_.theta_bins()[t2], e);
                std::vector<Transition> srow;
                for (std::size_t f = 0; f < edges.size(); ++f)
                    if (dist[f] > 0.0) srow.push_back({state(edges[f].next, cell2), dist[f]});
                mdp_.set(s, action_index(edges[e].action), -rewards_.step_cost - rewards_.intervention_cost,
                         std::move(srow));
            }
        }
    }
}

inline std::size_t AssistModel::action_index(const HumanAction& h) const {
    for (std::size_t i = 0; i < suggestions_.size(); ++i)
        if (suggestions_[i] == h) return i + 1;
    throw ContractViolation("unknown human action");
}

inline std::string AssistModel::action_name(std::size_t a) const {
    if (a == kNoOp) return "NoOp";
    return "Suggest(" + to_string(space().instance(), suggestion(a)) + ")";
}

inline AssistPolicy solve_qmdp(std::shared_ptr<const AssistModel> model, double tol, std::size_t iteration_cap) {
    auto sol = value_iteration(model->mdp(), tol, iteration_cap);
    return AssistPolicy(std::move(model), std::move(sol.values), std::move(sol.qvalues), sol.residual, sol.iterations);
}

inline double AssistPolicy::score(const BehaviorBelief& b, std::size_t x, std::size_t a) const {
    const auto& g = model_->grid();
    double acc = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c)
        if (b.p[c] != 0.0) acc += b.p[c] * qvalue(model_->state(x, c), a);
    return acc;
}

inline std::size_t AssistPolicy::act(const BehaviorBelief& b, std::size_t x) const {
    // Availability depends only on x, so cell 0 decides it.
    std::size_t best = kNoOp;
    double best_score = score(b, x, kNoOp);
    for (std::size_t a = 1; a < model_->action_count(); ++a) {
        if (!model_->available(model_->state(x, 0), a)) continue;
        const double sc = score(b, x, a);
        if (sc > best_score + 1e-12) {
            best = a;
            best_score = sc;
        }
    }
    return best;
}

inline std::size_t AssistPolicy::greedy(std::size_t s) const {
    std::size_t best = kNoOp;
    for (std::size_t a = 1; a < model_->action_count(); ++a)
        if (model_->available(s, a) && qvalue(s, a) > qvalue(s, best) + 1e-12) best = a;
    return best;
}

inline ExpectedValues expected_values(const AssistPolicy& policy, const BehaviorBelief& b, std::size_t x,
                                      Heuristic mode) {
    const auto& m = policy.model();
    if (m.space().terminal(x)) return {};
    ExpectedValues out;
    out.suggest = policy.act(b, x);
    if (mode == Heuristic::QValue) {
        out.r_pi = policy.score(b, x, out.suggest);
        out.r_phi = policy.score(b, x, kNoOp);
    } else {
        for (std::size_t c = 0; c < m.grid().size(); ++c) {
            out.r_pi += b.p[c] * m.reward(m.state(x, c), out.suggest);
            out.r_phi += b.p[c] * m.reward(m.state(x, c), kNoOp);
        }
    }
    return out;
}

inline std::uint64_t policy_key(const AssistModel& model, double tol) {
    std::vector<double> fields;
    fields.insert(fields.end(), model.grid().beta_bins().begin(), model.grid().beta_bins().end());
    fields.push_back(-1.0);
    fields.insert(fields.end(), model.grid().theta_bins().begin(), model.grid().theta_bins().end());
    fields.push_back(-1.0);
    const auto& r = model.rewards();
    fields.insert(fields.end(), {r.step_cost, r.intervention_cost, r.move_cost, model.trust().eta,
                                 model.trust().form == TrustForm::Literal ? 1.0 : 0.0, model.discount(), tol});
    std::uint64_t h = instance_hash(model.space().instance());
    for (double f : fields) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &f, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

inline void write_policy_cache(const AssistPolicy& policy, double tol, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out.write(kPolicyCacheMagic, sizeof kPolicyCacheMagic);
    detail::put(out, kPolicyCacheVersion);
    detail::put(out, policy_key(policy.model(), tol));
    detail::put(out, static_cast<std::uint64_t>(policy.model().state_count()));
    detail::put(out, static_cast<std::uint64_t>(policy.model().action_count()));
    detail::put(out, policy.residual());
    detail::put(out, static_cast<std::uint64_t>(policy.iterations()));
    for (double v : policy.values()) detail::put(out, v);
    for (double q : policy.qvalues()) detail::put(out, q);
}

inline std::optional<AssistPolicy> read_policy_cache(std::shared_ptr<const AssistModel> model, double tol,
                                                     const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof kPolicyCacheMagic];
    std::uint32_t version = 0;
    std::uint64_t key = 0, states = 0, actions = 0, iterations = 0;
    double residual = 0.0;
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kPolicyCacheMagic, sizeof magic) != 0) return std::nullopt;
    if (!detail::get(in, version) || version != kPolicyCacheVersion) return std::nullopt;
    if (!detail::get(in, key) || key != policy_key(*model, tol)) return std::nullopt;
    if (!detail::get(in, states) || states != model->state_count()) return std::nullopt;
    if (!detail::get(in, actions) || actions != model->action_count()) return std::nullopt;
    if (!detail::get(in, residual) || !detail::get(in, iterations)) return std::nullopt;
    std::vector<double> v(states), q(states * actions);
    for (auto& x : v)
        if (!detail::get(in, x)) return std::nullopt;
    for (auto& x : q)
        if (!detail::get(in, x)) return std::nullopt;
    return AssistPolicy(std::move(model), std::move(v), std::move(q), residual, static_cast<std::size_t>(iterations));
}

}  // namespace attnswitch
