#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "attnswitch/error.hpp"

namespace attnswitch::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw ContractViolation("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1); 0 for a single observation.
inline double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// 100 * (base - value) / base.
inline double percent_reduction(double base, double value) { return 100.0 * (base - value) / base; }

/// P(X >= wins) for X ~ Binomial(n, 1/2).
inline double binomial_upper_tail(std::size_t wins, std::size_t n) {
    if (wins == 0) return 1.0;
    if (wins > n) return 0.0;
    // log-space terms keep large n finite
    double total = 0.0;
    for (std::size_t k = wins; k <= n; ++k)
        total += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                          static_cast<double>(n) * std::log(2.0));
    return std::min(total, 1.0);
}

struct SignTest {
    std::size_t positive = 0;  // pairs where a < b
    std::size_t negative = 0;  // pairs where a > b
    std::size_t ties = 0;
    double p_value = 1.0;      // one-sided, H1: a tends to be below b
};

/// One-sided paired sign test that `a` is smaller than `b`; ties are dropped.
inline SignTest sign_test_less(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractViolation("sign test needs paired samples");
    SignTest t;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) ++t.positive;
        else if (a[i] > b[i]) ++t.negative;
        else ++t.ties;
    }
    t.p_value = binomial_upper_tail(t.positive, t.positive + t.negative);
    return t;
}

/// Ranks starting at 1; tied values share their average rank.
inline std::vector<double> ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return xs[i] < xs[j]; });
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ContractViolation("spearman needs two paired samples of size >= 2");
    const auto ra = ranks(a), rb = ranks(b);
    return pearson(ra, rb);
}

}  // namespace attnswitch::stats
