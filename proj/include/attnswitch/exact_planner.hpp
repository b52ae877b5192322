#pragma once

// Exact cost-to-go over the unit-cost state graph, and the per-human noisy
// copies of it that simulated workers plan with.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attnswitch/error.hpp"
#include "attnswitch/rng.hpp"
#include "attnswitch/task_domain.hpp"

namespace attnswitch {

/// Optimal remaining human actions per state, and action costs
/// q(x, a) = 1 + v(transition(x, a)) aligned with StateSpace::edges.
/// Lower is better.
class CostTable {
public:
    CostTable(std::shared_ptr<const StateSpace> space, std::vector<int> v);

    const StateSpace& space() const noexcept { return *space_; }
    std::shared_ptr<const StateSpace> space_ptr() const noexcept { return space_; }
    int v(std::size_t s) const { return v_.at(s); }
    const std::vector<int>& values() const noexcept { return v_; }
    double q(std::size_t s, std::size_t edge) const {
        return 1.0 + v_[space_->edges(s)[edge].next];
    }
    /// Costs of every legal action in s, in edge order.
    std::vector<double> q_row(std::size_t s) const;
    /// First edge index attaining the minimum cost.
    std::size_t best_edge(std::size_t s) const;

private:
    std::shared_ptr<const StateSpace> space_;
    std::vector<int> v_;
};

/// Backward breadth-first search from the terminal states.
CostTable solve_cost_to_go(std::shared_ptr<const StateSpace> space);

/// q + frozen zero-mean Gaussian noise per (state, action).
class NoisyUtility {
public:
    NoisyUtility(std::vector<std::vector<double>> rows, double sigma, std::uint64_t seed)
        : rows_(std::move(rows)), sigma_(sigma), seed_(seed) {}

    std::span<const double> row(std::size_t s) const { return rows_.at(s); }
    double q(std::size_t s, std::size_t edge) const { return rows_.at(s).at(edge); }
    double sigma() const noexcept { return sigma_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::vector<std::vector<double>> rows_;
    double sigma_;
    std::uint64_t seed_;
};

NoisyUtility make_noisy_utility(const CostTable& cost, double sigma, std::uint64_t seed);

// Cost-table cache: magic, version, instance hash, state count, values.
inline constexpr char kCostCacheMagic[8] = {'A', 'S', 'C', 'O', 'S', 'T', '0', '1'};
inline constexpr std::uint32_t kCostCacheVersion = 1;

void write_cost_cache(const CostTable& cost, const std::filesystem::path& file);
/// Returns nullopt if the file is missing, malformed, or keyed to a different instance.
std::optional<CostTable> read_cost_cache(std::shared_ptr<const StateSpace> space,
                                         const std::filesystem::path& file);

// ===========================================================================

inline CostTable::CostTable(std::shared_ptr<const StateSpace> space, std::vector<int> v)
    : space_(std::move(space)), v_(std::move(v)) {
    if (v_.size() != space_->size()) throw ContractViolation("cost table size does not match state space");
}

inline std::vector<double> CostTable::q_row(std::size_t s) const {
    std::vector<double> out;
    for (std::size_t e = 0; e < space_->edges(s).size(); ++e) out.push_back(q(s, e));
    return out;
}

inline std::size_t CostTable::best_edge(std::size_t s) const {
    const auto edges = space_->edges(s);
    if (edges.empty()) throw ContractViolation("terminal state has no actions");
    std::size_t best = 0;
    for (std::size_t e = 1; e < edges.size(); ++e)
        if (v_[edges[e].next] < v_[edges[best].next]) best = e;
    return best;
}

inline CostTable solve_cost_to_go(std::shared_ptr<const StateSpace> space) {
    const std::size_t n = space->size();
    std::vector<std::vector<std::size_t>> preds(n);
    for (std::size_t s = 0; s < n; ++s)
        for (const auto& e : space->edges(s)) preds[e.next].push_back(s);

    constexpr int kUnset = -1;
    std::vector<int> v(n, kUnset);
    std::deque<std::size_t> frontier;
    for (std::size_t s = 0; s < n; ++s)
        if (space->terminal(s)) {
            v[s] = 0;
            frontier.push_back(s);
        }
    while (!frontier.empty()) {
        const auto s = frontier.front();
        frontier.pop_front();
        for (auto p : preds[s])
            if (v[p] == kUnset) {
                v[p] = v[s] + 1;
                frontier.push_back(p);
            }
    }
    for (std::size_t s = 0; s < n; ++s)
        if (v[s] == kUnset) throw SolverError("goal unreachable from state " + std::to_string(s));
    return CostTable(std::move(space), std::move(v));
}

inline NoisyUtility make_noisy_utility(const CostTable& cost, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ContractViolation("noise sigma must be >= 0");
    RngStream rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto& space = cost.space();
    std::vector<std::vector<double>> rows(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) {
        rows[s] = cost.q_row(s);
        for (auto& q : rows[s]) q += sigma * noise(rng);
    }
    return NoisyUtility(std::move(rows), sigma, seed);
}

namespace detail {

template <class T>
void put(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
bool get(std::istream& in, T& value) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace detail

inline void write_cost_cache(const CostTable& cost, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out.write(kCostCacheMagic, sizeof kCostCacheMagic);
    detail::put(out, kCostCacheVersion);
    detail::put(out, instance_hash(cost.space().instance()));
    detail::put(out, static_cast<std::uint64_t>(cost.values().size()));
    for (int v : cost.values()) detail::put(out, static_cast<std::int32_t>(v));
}

inline std::optional<CostTable> read_cost_cache(std::shared_ptr<const StateSpace> space,
                                                const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof kCostCacheMagic];
    std::uint32_t version = 0;
    std::uint64_t hash = 0, count = 0;
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCostCacheMagic, sizeof magic) != 0) return std::nullopt;
    if (!detail::get(in, version) || version != kCostCacheVersion) return std::nullopt;
    if (!detail::get(in, hash) || hash != instance_hash(space->instance())) return std::nullopt;
    if (!detail::get(in, count) || count != space->size()) return std::nullopt;
    std::vector<int> v(count);
    for (auto& x : v) {
        std::int32_t raw = 0;
        if (!detail::get(in, raw)) return std::nullopt;
        x = raw;
    }
    return CostTable(std::move(space), std::move(v));
}

}  // namespace attnswitch
