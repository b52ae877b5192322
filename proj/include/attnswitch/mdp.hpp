#pragma once

// Tabular discounted MDP with reward maximization, and value iteration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "attnswitch/error.hpp"

namespace attnswitch {

struct Transition {
    std::size_t next;
    double prob;
};

class TabularMdp {
public:
    TabularMdp(std::size_t states, std::size_t actions, double discount)
        : states_(states), actions_(actions), discount_(discount), rows_(states * actions),
          rewards_(states * actions, 0.0), available_(states * actions, false) {
        if (!(discount_ > 0.0 && discount_ < 1.0)) throw ConfigError("discount must lie in (0, 1)");
    }

    void set(std::size_t s, std::size_t a, double reward, std::vector<Transition> row) {
        const auto r = s * actions_ + a;
        rows_.at(r) = std::move(row);
        rewards_[r] = reward;
        available_[r] = true;
    }

    std::size_t state_count() const noexcept { return states_; }
    std::size_t action_count() const noexcept { return actions_; }
    double discount() const noexcept { return discount_; }
    bool available(std::size_t s, std::size_t a) const { return available_[s * actions_ + a]; }
    double reward(std::size_t s, std::size_t a) const { return rewards_[s * actions_ + a]; }
    std::span<const Transition> transitions(std::size_t s, std::size_t a) const { return rows_[s * actions_ + a]; }

    /// r(s, a) + discount * E[values(s')].
    double backup(const std::vector<double>& values, std::size_t s, std::size_t a) const {
        double acc = 0.0;
        for (const auto& tr : transitions(s, a)) acc += tr.prob * values[tr.next];
        return reward(s, a) + discount_ * acc;
    }

    double best_backup(const std::vector<double>& values, std::size_t s) const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < actions_; ++a)
            if (available(s, a)) best = std::max(best, backup(values, s, a));
        return best;
    }

private:
    std::size_t states_;
    std::size_t actions_;
    double discount_;
    std::vector<std::vector<Transition>> rows_;
    std::vector<double> rewards_;
    std::vector<bool> available_;
};

/// Largest |max_a Q(s, a) - V(s)| over all states.
inline double bellman_residual(const TabularMdp& mdp, const std::vector<double>& values) {
    double r = 0.0;
    for (std::size_t s = 0; s < mdp.state_count(); ++s)
        r = std::max(r, std::abs(mdp.best_backup(values, s) - values[s]));
    return r;
}

struct MdpSolution {
    std::vector<double> values;
    std::vector<double> qvalues;  // state-major; -infinity where unavailable
    double residual = 0.0;
    std::size_t iterations = 0;
};

inline constexpr std::size_t kDefaultIterationCap = 100'000;

inline MdpSolution value_iteration(const TabularMdp& mdp, double tol, std::size_t iteration_cap = kDefaultIterationCap) {
    if (!(tol > 0.0)) throw ContractViolation("tolerance must be positive");
    const std::size_t n = mdp.state_count();
    std::vector<double> v(n, 0.0), next(n, 0.0);
    double change = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    // Stopping on |V_{k+1} - V_k| < tol bounds the residual of V_{k+1} by discount * tol.
    while (change >= tol) {
        if (iter++ >= iteration_cap)
            throw SolverError("value iteration did not converge in " + std::to_string(iteration_cap) +
                              " iterations; last change " + std::to_string(change));
        change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            next[s] = mdp.best_backup(v, s);
            change = std::max(change, std::abs(next[s] - v[s]));
        }
        v.swap(next);
    }
    MdpSolution out;
    out.residual = bellman_residual(mdp, v);
    if (!(out.residual < tol))
        throw SolverError("post-solve Bellman residual " + std::to_string(out.residual) + " exceeds tolerance");
    out.qvalues.assign(n * mdp.action_count(), -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < mdp.action_count(); ++a)
            if (mdp.available(s, a)) out.qvalues[s * mdp.action_count() + a] = mdp.backup(v, s, a);
    out.values = std::move(v);
    out.iterations = iter;
    return out;
}

}  // namespace attnswitch
