#pragma once

// Discretized Bayes filter over a worker's hidden (expertise, influence) pair.

#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "attnswitch/error.hpp"
#include "attnswitch/exact_planner.hpp"
#include "attnswitch/human_model.hpp"

namespace attnswitch {

/// Evenly spaced values from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

class BehaviorGrid {
public:
    BehaviorGrid(std::vector<double> beta_bins, std::vector<double> theta_bins);
    /// 5 expertise centers over [0.1, 3.0] by 10 influence centers over [0, 1].
    static BehaviorGrid make_default() { return uniform(5, 0.1, 3.0, 10); }
    static BehaviorGrid uniform(std::size_t beta_count, double beta_lo, double beta_hi, std::size_t theta_count) {
        return BehaviorGrid(linspace(beta_lo, beta_hi, beta_count), linspace(0.0, 1.0, theta_count));
    }

    const std::vector<double>& beta_bins() const noexcept { return beta_; }
    const std::vector<double>& theta_bins() const noexcept { return theta_; }
    std::size_t beta_count() const noexcept { return beta_.size(); }
    std::size_t theta_count() const noexcept { return theta_.size(); }
    std::size_t size() const noexcept { return beta_.size() * theta_.size(); }
    std::size_t cell(std::size_t b, std::size_t t) const noexcept { return b * theta_.size() + t; }
    std::size_t beta_of(std::size_t cell) const noexcept { return cell / theta_.size(); }
    std::size_t theta_of(std::size_t cell) const noexcept { return cell % theta_.size(); }
    /// Closest influence bin; ties go to the lower bin.
    std::size_t nearest_theta(double value) const;

private:
    std::vector<double> beta_;
    std::vector<double> theta_;
};

/// Robot-side model of how influence evolves after a suggestion.
struct TrustModel {
    double eta = 0.2;
    TrustForm form = TrustForm::Repaired;
};

struct BehaviorBelief {
    std::vector<double> p;  // indexed by BehaviorGrid::cell

    double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
    double beta_mean(const BehaviorGrid& g) const;
    double theta_mean(const BehaviorGrid& g) const;
};

BehaviorBelief init_belief(const BehaviorGrid& grid);

/// Uniform over the cells whose centers fall inside both ranges. If an axis
/// has no center inside its range, the center nearest the range midpoint is used.
BehaviorBelief init_belief(const BehaviorGrid& grid, Range beta, Range theta);

/// Probability of `observed` in state s under the cell's parameters and the
/// true cost table: influenced when a suggestion was made, plain Boltzmann otherwise.
double likelihood(double beta, double theta, const CostTable& cost, std::size_t s,
                  const std::optional<HumanAction>& suggestion, const HumanAction& observed);

struct BeliefUpdate {
    BehaviorBelief belief;
    bool reset = false;  // posterior underflowed and was replaced by uniform
};

inline constexpr double kUnderflowMass = 1e-300;

BeliefUpdate update(const BehaviorBelief& prior, const BehaviorGrid& grid, const CostTable& cost, std::size_t s,
                    const std::optional<HumanAction>& suggestion, const HumanAction& observed);

/// Moves each cell's mass to the influence bin nearest its trust-updated value.
BehaviorBelief advance_theta(const BehaviorBelief& belief, const BehaviorGrid& grid, const CostTable& cost,
                             std::size_t s, const HumanAction& suggestion, const TrustModel& trust);

/// Utility change a suggestion produces under the true costs.
double true_utility_gain(const CostTable& cost, std::size_t s, const HumanAction& suggestion, TrustForm form);

// ===========================================================================

inline BehaviorGrid::BehaviorGrid(std::vector<double> beta_bins, std::vector<double> theta_bins)
    : beta_(std::move(beta_bins)), theta_(std::move(theta_bins)) {
    if (beta_.empty() || theta_.empty()) throw ConfigError("behavior grid needs at least one bin per axis");
    for (std::size_t i = 1; i < beta_.size(); ++i)
        if (!(beta_[i] > beta_[i - 1])) throw ConfigError("beta bin centers must be strictly increasing");
    for (std::size_t i = 1; i < theta_.size(); ++i)
        if (!(theta_[i] > theta_[i - 1])) throw ConfigError("theta bin centers must be strictly increasing");
    if (beta_.front() < 0.0) throw ConfigError("beta bin centers must be >= 0");
    if (theta_.front() < 0.0 || theta_.back() > 1.0) throw ConfigError("theta bin centers must lie in [0, 1]");
}

inline std::size_t BehaviorGrid::nearest_theta(double value) const {
    std::size_t best = 0;
    for (std::size_t t = 1; t < theta_.size(); ++t)
        if (std::abs(theta_[t] - value) < std::abs(theta_[best] - value) - 1e-12) best = t;
    return best;
}

inline double BehaviorBelief::beta_mean(const BehaviorGrid& g) const {
    double m = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) m += p[c] * g.beta_bins()[g.beta_of(c)];
    return m;
}

inline double BehaviorBelief::theta_mean(const BehaviorGrid& g) const {
    double m = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) m += p[c] * g.theta_bins()[g.theta_of(c)];
    return m;
}

inline BehaviorBelief init_belief(const BehaviorGrid& grid) {
    return BehaviorBelief{std::vector<double>(grid.size(), 1.0 / static_cast<double>(grid.size()))};
}

inline BehaviorBelief init_belief(const BehaviorGrid& grid, Range beta, Range theta) {
    auto mask = [](const std::vector<double>& centers, Range r) {
        std::vector<bool> in(centers.size(), false);
        bool any = false;
        for (std::size_t i = 0; i < centers.size(); ++i) any |= in[i] = centers[i] >= r.low && centers[i] <= r.high;
        if (!any) {
            const double mid = 0.5 * (r.low + r.high);
            std::size_t best = 0;
            for (std::size_t i = 1; i < centers.size(); ++i)
                if (std::abs(centers[i] - mid) < std::abs(centers[best] - mid)) best = i;
            in[best] = true;
        }
        return in;
    };
    const auto bm = mask(grid.beta_bins(), beta);
    const auto tm = mask(grid.theta_bins(), theta);
    BehaviorBelief out{std::vector<double>(grid.size(), 0.0)};
    double n = 0.0;
    for (std::size_t b = 0; b < grid.beta_count(); ++b)
        for (std::size_t t = 0; t < grid.theta_count(); ++t)
            if (bm[b] && tm[t]) {
                out.p[grid.cell(b, t)] = 1.0;
                n += 1.0;
            }
    for (auto& x : out.p) x /= n;
    return out;
}

inline double likelihood(double beta, double theta, const CostTable& cost, std::size_t s,
                         const std::optional<HumanAction>& suggestion, const HumanAction& observed) {
    const auto& space = cost.space();
    const auto obs = space.edge_index(s, observed);
    if (!obs) throw ContractViolation("observed action is not legal in the observed state");
    const auto row = cost.q_row(s);
    if (suggestion) {
        const auto sug = space.edge_index(s, *suggestion);
        if (!sug) throw ContractViolation("suggested action is not legal in the observed state");
        return influenced(row, beta, theta, *sug)[*obs];
    }
    return boltzmann(row, beta)[*obs];
}

inline BeliefUpdate update(const BehaviorBelief& prior, const BehaviorGrid& grid, const CostTable& cost,
                           std::size_t s, const std::optional<HumanAction>& suggestion, const HumanAction& observed) {
    BeliefUpdate out{prior, false};
    // Likelihood depends on theta only through a suggestion; cache per beta otherwise.
    for (std::size_t b = 0; b < grid.beta_count(); ++b) {
        std::optional<double> shared;
        if (!suggestion) shared = likelihood(grid.beta_bins()[b], 0.5, cost, s, std::nullopt, observed);
        for (std::size_t t = 0; t < grid.theta_count(); ++t) {
            const double l = shared ? *shared
                                    : likelihood(grid.beta_bins()[b], grid.theta_bins()[t], cost, s, suggestion, observed);
            out.belief.p[grid.cell(b, t)] *= l;
        }
    }
    const double z = out.belief.total();
    if (!(z >= kUnderflowMass)) {
        out.belief = init_belief(grid);
        out.reset = true;
        return out;
    }
    for (auto& x : out.belief.p) x /= z;
    return out;
}

inline double true_utility_gain(const CostTable& cost, std::size_t s, const HumanAction& suggestion, TrustForm form) {
    const auto& space = cost.space();
    const auto e = space.edge_index(s, suggestion);
    if (!e) throw ContractViolation("suggested action is not legal here");
    const auto next = space.edges(s)[*e].next;
    return perceived_utility(cost.q_row(next), form) - perceived_utility(cost.q_row(s), form);
}

inline BehaviorBelief advance_theta(const BehaviorBelief& belief, const BehaviorGrid& grid, const CostTable& cost,
                                    std::size_t s, const HumanAction& suggestion, const TrustModel& trust) {
    const double shift = trust.eta * true_utility_gain(cost, s, suggestion, trust.form);
    BehaviorBelief out{std::vector<double>(belief.p.size(), 0.0)};
    for (std::size_t b = 0; b < grid.beta_count(); ++b)
        for (std::size_t t = 0; t < grid.theta_count(); ++t) {
            const auto to = grid.nearest_theta(clamp_unit(grid.theta_bins()[t] + shift));
            out.p[grid.cell(b, to)] += belief.p[grid.cell(b, t)];
        }
    return out;
}

}  // namespace attnswitch
