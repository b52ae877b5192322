#pragma once

// Shared fixtures and independent oracles. The oracles deliberately avoid
// StateSpace, CostTable and AssistModel so they can check those classes.

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "attnswitch/attnswitch.hpp"

namespace support {

using namespace attnswitch;

inline const KitInstance& canonical_instance() {
    static const KitInstance inst = parse_instance(kCanonicalInstance);
    return inst;
}

inline std::shared_ptr<const StateSpace> canonical_space() {
    static const auto space = std::make_shared<const StateSpace>(canonical_instance());
    return space;
}

inline std::shared_ptr<const CostTable> canonical_cost() {
    static const auto cost = std::make_shared<const CostTable>(solve_cost_to_go(canonical_space()));
    return cost;
}

inline const Planner& canonical_planner() {
    static const Planner p =
        Planner::build(canonical_instance(), BehaviorGrid::make_default(), RewardConfig{}, TrustModel{}, 0.95, 1e-9);
    return p;
}

inline HumanProfile make_profile(const CostTable& cost, double beta, double theta, double sigma = 0.0,
                                 std::uint64_t seed = 1, double eta = 0.2) {
    HumanProfile p;
    p.beta = beta;
    p.theta = theta;
    p.eta = eta;
    p.utility = std::make_shared<const NoisyUtility>(make_noisy_utility(cost, sigma, seed));
    return p;
}

/// Shortest number of actions from x to any terminal state, by forward BFS
/// over the raw domain functions. -1 if unreachable.
inline int forward_distance(const KitInstance& inst, const KitState& x) {
    std::map<KitState, int> dist{{x, 0}};
    std::deque<KitState> queue{x};
    while (!queue.empty()) {
        const auto cur = queue.front();
        queue.pop_front();
        if (is_terminal(inst, cur)) return dist[cur];
        for (const auto& a : legal_actions(inst, cur)) {
            auto nx = transition(inst, cur, a);
            if (dist.emplace(nx, dist[cur] + 1).second) queue.push_back(nx);
        }
    }
    return -1;
}

/// Every state reachable from the initial state, found by a plain DFS.
inline std::vector<KitState> reachable_states(const KitInstance& inst) {
    std::map<KitState, bool> seen;
    std::vector<KitState> stack{initial_state(inst)};
    seen[stack.front()] = true;
    while (!stack.empty()) {
        const auto cur = stack.back();
        stack.pop_back();
        for (const auto& a : legal_actions(inst, cur)) {
            auto nx = transition(inst, cur, a);
            if (seen.emplace(nx, true).second) stack.push_back(nx);
        }
    }
    std::vector<KitState> out;
    for (const auto& [k, v] : seen) out.push_back(k);
    return out;
}

/// Exact value iteration on the fully observed assistance MDP, built directly
/// from the domain and the forward-distance oracle. Q is indexed
/// [(env-state, beta bin, theta bin)][robot action] with robot action 0 = NoOp
/// and i > 0 suggesting all_actions()[i - 1]; unavailable entries are -inf.
struct OracleAssist {
    std::vector<KitState> states;
    std::size_t cells = 0;
    std::size_t actions = 0;
    std::vector<std::vector<double>> q;
};

inline OracleAssist oracle_assist(const KitInstance& inst, const std::vector<double>& betas,
                                  const std::vector<double>& thetas, double step_cost, double int_cost, double eta,
                                  double discount, double tol) {
    OracleAssist o;
    o.states = reachable_states(inst);
    std::map<KitState, std::size_t> index;
    for (std::size_t i = 0; i < o.states.size(); ++i) index[o.states[i]] = i;
    std::vector<int> v(o.states.size());
    for (std::size_t i = 0; i < o.states.size(); ++i) v[i] = forward_distance(inst, o.states[i]);

    const auto menu = all_actions(inst);
    o.cells = betas.size() * thetas.size();
    o.actions = menu.size() + 1;
    const std::size_t n = o.states.size() * o.cells;
    const double inf = std::numeric_limits<double>::infinity();

    auto nearest = [&](double th) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < thetas.size(); ++t)
            if (std::abs(thetas[t] - th) < std::abs(thetas[best] - th) - 1e-12) best = t;
        return best;
    };
    auto min_cost = [&](const KitState& x) {
        if (is_terminal(inst, x)) return 0.0;
        double m = inf;
        for (const auto& a : legal_actions(inst, x)) m = std::min(m, 1.0 + v[index.at(transition(inst, x, a))]);
        return m;
    };

    // (reward, [(next, prob)]) per state and action
    struct Row {
        bool ok = false;
        double reward = 0.0;
        std::vector<std::pair<std::size_t, double>> next;
    };
    std::vector<std::vector<Row>> rows(n, std::vector<Row>(o.actions));
    for (std::size_t e = 0; e < o.states.size(); ++e) {
        const auto& x = o.states[e];
        const auto legal = legal_actions(inst, x);
        std::vector<double> cost;
        for (const auto& a : legal) cost.push_back(1.0 + v[index.at(transition(inst, x, a))]);
        for (std::size_t b = 0; b < betas.size(); ++b)
            for (std::size_t t = 0; t < thetas.size(); ++t) {
                const std::size_t s = (e * betas.size() + b) * thetas.size() + t;
                if (legal.empty()) {
                    rows[s][0] = {true, 0.0, {{s, 1.0}}};
                    continue;
                }
                auto dist = [&](double theta, std::optional<std::size_t> sug) {
                    std::vector<double> w(legal.size());
                    const double lo = *std::min_element(cost.begin(), cost.end());
                    double z = 0.0;
                    for (std::size_t i = 0; i < legal.size(); ++i) {
                        w[i] = std::exp(-betas[b] * (cost[i] - lo));
                        if (sug) w[i] *= (i == *sug ? theta : 1.0 - theta);
                        z += w[i];
                    }
                    if (z == 0.0) {
                        std::fill(w.begin(), w.end(), 0.0);
                        w[*sug] = 1.0;
                        z = 1.0;
                    }
                    for (auto& wi : w) wi /= z;
                    return w;
                };
                auto noop = dist(0.0, std::nullopt);
                Row r{true, -step_cost, {}};
                for (std::size_t i = 0; i < legal.size(); ++i)
                    r.next.emplace_back((index.at(transition(inst, x, legal[i])) * betas.size() + b) * thetas.size() + t,
                                        noop[i]);
                rows[s][0] = r;
                for (std::size_t m = 0; m < menu.size(); ++m) {
                    auto it = std::find(legal.begin(), legal.end(), menu[m]);
                    if (it == legal.end()) continue;
                    const std::size_t i = static_cast<std::size_t>(it - legal.begin());
                    const auto succ = transition(inst, x, legal[i]);
                    const double gain = -min_cost(succ) + min_cost(x);
                    const std::size_t t2 = nearest(std::clamp(thetas[t] + eta * gain, 0.0, 1.0));
                    auto d = dist(thetas[t2], i);
                    Row rs{true, -step_cost - int_cost, {}};
                    for (std::size_t j = 0; j < legal.size(); ++j)
                        rs.next.emplace_back(
                            (index.at(transition(inst, x, legal[j])) * betas.size() + b) * thetas.size() + t2, d[j]);
                    rows[s][m + 1] = rs;
                }
            }
    }

    std::vector<double> val(n, 0.0), nxt(n, 0.0);
    o.q.assign(n, std::vector<double>(o.actions, -inf));
    for (double change = inf; change > tol * 1e-3;) {
        change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = -inf;
            for (std::size_t a = 0; a < o.actions; ++a) {
                if (!rows[s][a].ok) continue;
                double acc = 0.0;
                for (const auto& [ns, p] : rows[s][a].next) acc += p * val[ns];
                o.q[s][a] = rows[s][a].reward + discount * acc;
                best = std::max(best, o.q[s][a]);
            }
            nxt[s] = best;
            change = std::max(change, std::abs(nxt[s] - val[s]));
        }
        val.swap(nxt);
    }
    return o;
}

}  // namespace support
