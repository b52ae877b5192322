#pragma once

// Simulated human workers: Boltzmann action choice over private noisy costs,
// reweighting toward a robot suggestion, and linear trust dynamics.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attnswitch/error.hpp"
#include "attnswitch/exact_planner.hpp"
#include "attnswitch/rng.hpp"

namespace attnswitch {

/// How a suggestion's perceived utility change is scored.
/// Repaired: U(x) = -min_a q(x, a), so trust grows when the suggested successor
/// is closer to the goal. Literal: U(x) = max_a q(x, a) read directly as written
/// for utilities, which with costs rewards moving away from the goal.
enum class TrustForm { Repaired, Literal };

struct HumanProfile {
    double beta = 1.0;   // expertise, >= 0
    double theta = 0.5;  // influence, [0, 1]
    double eta = 0.2;    // trust learning rate, >= 0
    std::shared_ptr<const NoisyUtility> utility;
    TrustForm trust_form = TrustForm::Repaired;

    double sigma() const { return utility ? utility->sigma() : 0.0; }
};

void validate(const HumanProfile& p);

// ---------------------------------------------------------------------------
// Kernels over a row of action costs. Shared by the simulator (noisy costs)
// and the robot's models (true costs).

/// P(a) proportional to exp(-beta * cost(a)).
std::vector<double> boltzmann(std::span<const double> costs, double beta);

/// Boltzmann weights scaled by theta on `suggested` and (1 - theta) elsewhere,
/// renormalized. If every weight vanishes (theta = 0 and the suggestion is the
/// only action) the single action keeps probability 1.
std::vector<double> influenced(std::span<const double> costs, double beta, double theta, std::size_t suggested);

/// Perceived utility of a state under a cost row; a terminal state (empty row) has utility 0.
double perceived_utility(std::span<const double> costs, TrustForm form);

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// ---------------------------------------------------------------------------
// Operations on a worker at state index s of `space`.

std::vector<double> action_distribution(const HumanProfile& p, const StateSpace& space, std::size_t s);
std::vector<double> influenced_distribution(const HumanProfile& p, const StateSpace& space, std::size_t s,
                                            const HumanAction& suggestion);
/// Trust after seeing `suggestion` proposed in s. Pure; the caller commits.
double update_influence(const HumanProfile& p, const StateSpace& space, std::size_t s, const HumanAction& suggestion);

/// Inverse-CDF draw; returns an index into `distribution`.
std::size_t sample_action(std::span<const double> distribution, RngStream& rng);

struct Range {
    double low = 0.0;
    double high = 0.0;
};

struct PoolConfig {
    Range beta{0.1, 3.0};
    Range theta{0.5, 0.95};
    Range sigma{0.1, 1.0};
    double eta = 0.2;
    std::size_t pool_size = 12;
    TrustForm trust_form = TrustForm::Repaired;
};

void validate(const PoolConfig& cfg);

/// Draws one profile with parameters uniform in the given ranges and a private
/// noisy utility seeded from (seed, slot).
HumanProfile sample_profile(const CostTable& cost, Range beta, Range theta, Range sigma, double eta,
                            TrustForm form, RngStream& rng, std::uint64_t noise_seed);

std::vector<HumanProfile> sample_pool(const PoolConfig& cfg, const CostTable& cost, std::uint64_t seed);

// ===========================================================================

inline void validate(const HumanProfile& p) {
    if (!(p.beta >= 0.0)) throw ContractViolation("beta must be >= 0");
    if (!(p.theta >= 0.0 && p.theta <= 1.0)) throw ContractViolation("theta must lie in [0, 1]");
    if (!(p.eta >= 0.0)) throw ContractViolation("eta must be >= 0");
    if (!p.utility) throw ContractViolation("profile has no utility table");
}

inline std::vector<double> boltzmann(std::span<const double> costs, double beta) {
    std::vector<double> w(costs.size());
    if (costs.empty()) return w;
    const double lo = *std::min_element(costs.begin(), costs.end());
    double z = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) z += w[i] = std::exp(-beta * (costs[i] - lo));
    for (auto& x : w) x /= z;
    return w;
}

inline std::vector<double> influenced(std::span<const double> costs, double beta, double theta,
                                      std::size_t suggested) {
    if (suggested >= costs.size()) throw ContractViolation("suggested action index out of range");
    auto w = boltzmann(costs, beta);
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) z += w[i] *= (i == suggested ? theta : 1.0 - theta);
    if (z <= 0.0) {
        std::fill(w.begin(), w.end(), 0.0);
        w[suggested] = 1.0;
        return w;
    }
    for (auto& x : w) x /= z;
    return w;
}

inline double perceived_utility(std::span<const double> costs, TrustForm form) {
    if (costs.empty()) return 0.0;
    if (form == TrustForm::Literal) return *std::max_element(costs.begin(), costs.end());
    return -*std::min_element(costs.begin(), costs.end());
}

namespace detail {

inline void require_nonterminal(const StateSpace& space, std::size_t s) {
    if (space.terminal(s)) throw ContractViolation("worker is at a terminal state");
}

inline std::size_t require_legal(const StateSpace& space, std::size_t s, const HumanAction& a) {
    auto e = space.edge_index(s, a);
    if (!e) throw ContractViolation("suggestion " + to_string(space.instance(), a) + " is not legal here");
    return *e;
}

}  // namespace detail

inline std::vector<double> action_distribution(const HumanProfile& p, const StateSpace& space, std::size_t s) {
    detail::require_nonterminal(space, s);
    return boltzmann(p.utility->row(s), p.beta);
}

inline std::vector<double> influenced_distribution(const HumanProfile& p, const StateSpace& space, std::size_t s,
                                                   const HumanAction& suggestion) {
    const auto e = detail::require_legal(space, s, suggestion);
    return influenced(p.utility->row(s), p.beta, p.theta, e);
}

inline double update_influence(const HumanProfile& p, const StateSpace& space, std::size_t s,
                               const HumanAction& suggestion) {
    const auto e = detail::require_legal(space, s, suggestion);
    const auto next = space.edges(s)[e].next;
    const double gain = perceived_utility(p.utility->row(next), p.trust_form) -
                        perceived_utility(p.utility->row(s), p.trust_form);
    return clamp_unit(p.theta + p.eta * gain);
}

inline std::size_t sample_action(std::span<const double> distribution, RngStream& rng) {
    if (distribution.empty()) throw ContractViolation("cannot sample from an empty distribution");
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < distribution.size(); ++i) {
        acc += distribution[i];
        if (u < acc) return i;
    }
    // Rounding left u above the accumulated mass; take the last non-zero entry.
    for (std::size_t i = distribution.size(); i-- > 0;)
        if (distribution[i] > 0.0) return i;
    return distribution.size() - 1;
}

inline void validate(const PoolConfig& cfg) {
    auto check = [](Range r, double lo, double hi, const char* name) {
        if (!(r.low <= r.high)) throw ConfigError(std::string(name) + " range has low > high");
        if (r.low < lo || r.high > hi) throw ConfigError(std::string(name) + " range outside its legal domain");
    };
    check(cfg.beta, 0.0, std::numeric_limits<double>::infinity(), "beta");
    check(cfg.theta, 0.0, 1.0, "theta");
    check(cfg.sigma, 0.0, std::numeric_limits<double>::infinity(), "sigma");
    if (!(cfg.eta >= 0.0)) throw ConfigError("eta must be >= 0");
    if (cfg.pool_size == 0) throw ConfigError("pool_size must be positive");
}

inline HumanProfile sample_profile(const CostTable& cost, Range beta, Range theta, Range sigma, double eta,
                                   TrustForm form, RngStream& rng, std::uint64_t noise_seed) {
    HumanProfile p;
    p.beta = uniform_in(rng, beta.low, beta.high);
    p.theta = uniform_in(rng, theta.low, theta.high);
    const double sd = uniform_in(rng, sigma.low, sigma.high);
    p.eta = eta;
    p.trust_form = form;
    p.utility = std::make_shared<const NoisyUtility>(make_noisy_utility(cost, sd, noise_seed));
    return p;
}

inline std::vector<HumanProfile> sample_pool(const PoolConfig& cfg, const CostTable& cost, std::uint64_t seed) {
    validate(cfg);
    RngStream rng(derive_seed({seed, static_cast<std::uint64_t>(StreamPurpose::Pool)}));
    std::vector<HumanProfile> pool;
    for (std::size_t k = 0; k < cfg.pool_size; ++k)
        pool.push_back(sample_profile(cost, cfg.beta, cfg.theta, cfg.sigma, cfg.eta, cfg.trust_form, rng,
                                      derive_seed({seed, static_cast<std::uint64_t>(StreamPurpose::Noise), k})));
    return pool;
}

}  // namespace attnswitch
