// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace attnswitch;
namespace chrono = std::chrono;

namespace {

const std::filesystem::path kData = ATTNSWITCH_DATA_DIR;

// Tolerances and thresholds.
constexpr double kOptimum = 10;
constexpr double kSolveBudgetSeconds = 1.0;
constexpr double kNormTol = 1e-12;
constexpr double kResidualTol = 1e-9;
constexpr double kChainTol = 1e-9;
constexpr double kQTieTol = 1e-7;       // oracle Q values that close count as tied
constexpr double kJointRatio = 1e6;
constexpr double kActionMargin = 0.10;  // attention at least 10% below none
constexpr double kInterventionMargin = 0.10;
constexpr double kSignAlpha = 0.05;
constexpr double kSweepBudgetSeconds = 300.0;
constexpr double kTargetingRatio = 3.0;
constexpr double kReactiveRatioCap = 1.5;
// One-sided 5% critical value of Spearman's rho for n = 6.
constexpr double kSpearmanCritical6 = 0.829;

struct Line {
    bool pass = true;
    std::string detail;
    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <class... A>
std::string fmtn(const char* f, A... a) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double seconds_since(chrono::steady_clock::time_point t0) {
    return chrono::duration<double>(chrono::steady_clock::now() - t0).count();
}

Line criterion1() {
    Line l;
    const auto t0 = chrono::steady_clock::now();
    const auto inst = parse_instance(kCanonicalInstance);
    const auto space = std::make_shared<const StateSpace>(inst);
    const auto cost = solve_cost_to_go(space);
    const double elapsed = seconds_since(t0);
    const int v0 = cost.v(space->initial());
    l.check(v0 == kOptimum, fmtn("v(initial) = %d", v0));
    std::size_t mismatches = 0;
    for (std::size_t s = 0; s < space->size(); ++s)
        if (cost.v(s) != support::forward_distance(inst, space->state(s))) ++mismatches;
    l.check(mismatches == 0, fmtn("forward BFS disagrees on %zu of %zu states", mismatches, space->size()));
    l.check(elapsed < kSolveBudgetSeconds, fmt("solve took %.4f s", elapsed));
    return l;
}

Line criterion2(const Planner& planner, const std::vector<RunRow>& sweep_rows) {
    Line l;
    const auto& space = *planner.space;
    const auto& cost = *planner.cost;
    double worst_sum = 0.0, worst_half = 0.0;
    bool negative = false;
    auto note = [&](const std::vector<double>& p) {
        double z = 0.0;
        for (double x : p) {
            z += x;
            negative |= x < 0.0;
        }
        worst_sum = std::max(worst_sum, std::abs(z - 1.0));
    };

    RngStream rng(derive_seed({2, 0xacce}));
    std::size_t checked = 0;
    while (checked < 1000) {
        const auto s = static_cast<std::size_t>(uniform01(rng) * space.size());
        if (space.terminal(s)) continue;
        ++checked;
        const auto h = support::make_profile(cost, uniform_in(rng, 0.0, 5.0), 0.5, uniform_in(rng, 0.0, 1.0), checked);
        const auto edges = space.edges(s);
        const auto sug = edges[static_cast<std::size_t>(uniform01(rng) * edges.size())].action;
        const auto plain = action_distribution(h, space, s);
        const auto infl = influenced_distribution(h, space, s, sug);
        note(plain);
        note(infl);
        for (std::size_t i = 0; i < plain.size(); ++i) worst_half = std::max(worst_half, std::abs(plain[i] - infl[i]));
        auto h2 = h;
        h2.theta = uniform01(rng);
        note(influenced_distribution(h2, space, s, sug));
    }

    // Model transition rows and beliefs along a filtered run.
    const auto& m = *planner.model;
    for (std::size_t s = 0; s < m.state_count(); ++s)
        for (std::size_t a = 0; a < m.action_count(); ++a) {
            if (!m.available(s, a)) continue;
            std::vector<double> p;
            for (const auto& t : m.transitions(s, a)) p.push_back(t.prob);
            note(p);
        }
    auto belief = init_belief(m.grid());
    std::size_t s = space.initial();
    for (int step = 0; step < 500; ++step) {
        if (space.terminal(s)) s = space.initial();
        const auto edges = space.edges(s);
        const auto sug = edges[static_cast<std::size_t>(uniform01(rng) * edges.size())].action;
        belief = advance_theta(belief, m.grid(), cost, s, sug, m.trust());
        note(belief.p);
        const auto e = edges[static_cast<std::size_t>(uniform01(rng) * edges.size())];
        belief = update(belief, m.grid(), cost, s, sug, e.action).belief;
        note(belief.p);
        s = e.next;
    }

    l.check(worst_sum <= kNormTol && !negative, fmt("max |sum - 1| = %.2e", worst_sum));
    l.check(planner.policy->residual() < kResidualTol, fmt("QMDP residual %.2e", planner.policy->residual()));

    bool theta_ok = true;
    for (const auto& r : sweep_rows)
        for (const auto& w : r.record.workers) theta_ok &= w.final_theta >= 0.0 && w.final_theta <= 1.0;
    auto h = support::make_profile(cost, 1.0, 0.5, 1.0, 99, 0.9);
    for (int step = 0; step < 5000; ++step) {
        std::size_t x;
        do x = static_cast<std::size_t>(uniform01(rng) * space.size()); while (space.terminal(x));
        const auto edges = space.edges(x);
        h.theta = update_influence(h, space, x, edges[static_cast<std::size_t>(uniform01(rng) * edges.size())].action);
        theta_ok &= h.theta >= 0.0 && h.theta <= 1.0;
    }
    l.check(theta_ok, "theta within [0, 1]");
    l.check(worst_half <= kNormTol, fmt("theta = 0.5 vs plain over 1000 states: max diff %.2e", worst_half));
    return l;
}

Line criterion3(const Planner& planner) {
    Line l;
    const auto& p = *planner.policy;
    const auto& m = p.model();
    const auto& g = m.grid();
    const auto o = support::oracle_assist(support::canonical_instance(), g.beta_bins(), g.theta_bins(),
                                          m.rewards().step_cost, m.rewards().intervention_cost, m.trust().eta,
                                          m.discount(), 1e-9);
    std::size_t disagree = 0, total = 0;
    for (std::size_t e = 0; e < o.states.size(); ++e) {
        const auto x = m.space().index_of(o.states[e]);
        for (std::size_t c = 0; c < o.cells; ++c) {
            BehaviorBelief b{std::vector<double>(g.size(), 0.0)};
            b.p[c] = 1.0;
            const auto a = p.act(b, x);
            const auto& q = o.q[e * o.cells + c];
            const double best = *std::max_element(q.begin(), q.end());
            ++total;
            if (!(q[a] >= best - kQTieTol)) ++disagree;
        }
    }
    l.check(disagree == 0, fmtn("point-mass policy differs from exact value iteration on %zu of %zu states", disagree,
                                total));

    TabularMdp chain(2, 1, 0.95);
    chain.set(0, 0, -1.0, {{0, 0.5}, {1, 0.5}});
    chain.set(1, 0, 0.0, {{1, 1.0}});
    const double v = value_iteration(chain, 1e-12).values[0];
    const double closed = -1.0 / (1.0 - 0.95 / 2.0);
    l.check(std::abs(v - closed) < kChainTol, fmtn("chain V = %.10f vs %.10f", v, closed));
    return l;
}

Line criterion4(const Planner& planner) {
    Line l;
    const auto& m = *planner.model;
    const std::size_t env = m.space().size(), cells = m.grid().size();
    l.check(env == 108 && cells == 50, fmtn("|env| = %zu, |grid| = %zu", env, cells));
    bool linear = true;
    std::string counts;
    for (std::size_t k = 1; k <= 6; ++k) {
        // Each worker is served by the shared per-worker policy over m.state_count() states.
        const double solved = static_cast<double>(k * m.state_count());
        linear &= factored_state_count(m, k) == solved && solved == static_cast<double>(k * 108 * 50);
        counts += fmtn("%s%.0f", k == 1 ? "" : ",", factored_state_count(m, k));
    }
    l.check(linear, "factored counts K=1..6: " + counts);
    const double ratio = joint_state_count(m, 4) / factored_state_count(m, 4);
    l.check(ratio > kJointRatio, fmt("joint/factored at K=4 = %.3e", ratio));
    return l;
}

// Per-run totals keyed by (K, repetition, trial), one series per policy.
struct Paired {
    std::map<std::string, std::vector<double>> actions, interventions;
};

std::map<std::size_t, Paired> pair_by_k(const std::vector<RunRow>& rows) {
    std::map<std::size_t, Paired> out;
    for (const auto& r : rows) {
        auto& p = out[r.team_size];
        p.actions[to_string(r.policy)].push_back(static_cast<double>(r.record.total_human_actions()));
        p.interventions[to_string(r.policy)].push_back(static_cast<double>(r.record.total_interventions()));
    }
    return out;
}

// Margins apply to the means; the paired sign test checks the direction of each
// comparison. Most runs sit at or near the 10-action optimum, where a per-pair
// 10% margin is unattainable by construction.
Line criterion5(const std::vector<RunRow>& rows, double elapsed) {
    Line l;
    for (const auto& [k, p] : pair_by_k(rows)) {
        if (k > 4) continue;
        const auto& att = p.actions.at("attention");
        const auto& rea = p.actions.at("reactive");
        const auto& none = p.actions.at("none");
        const auto& iatt = p.interventions.at("attention");
        const auto& irea = p.interventions.at("reactive");
        const double ma = stats::mean(att), mr = stats::mean(rea), mn = stats::mean(none);
        const double ia = stats::mean(iatt), ir = stats::mean(irea);

        const auto t1 = stats::sign_test_less(att, none);
        l.check(ma <= (1.0 - kActionMargin) * mn && t1.p_value < kSignAlpha,
                fmtn("K=%zu actions attention %.2f vs none %.2f (%.1f%% lower, sign p=%.3g)", k, ma, mn,
                     stats::percent_reduction(mn, ma), t1.p_value));
        const auto t2 = stats::sign_test_less(att, rea);
        l.check(ma <= mr && t2.p_value < kSignAlpha,
                fmtn("K=%zu actions attention %.2f vs reactive %.2f (sign p=%.3g)", k, ma, mr, t2.p_value));
        const auto t3 = stats::sign_test_less(iatt, irea);
        l.check(ia <= (1.0 - kInterventionMargin) * ir && t3.p_value < kSignAlpha,
                fmtn("K=%zu interventions attention %.2f vs reactive %.2f (%.1f%% lower, sign p=%.3g)", k, ia, ir,
                     ir > 0 ? stats::percent_reduction(ir, ia) : 0.0, t3.p_value));
    }
    l.check(elapsed < kSweepBudgetSeconds, fmt("sweep took %.2f s", elapsed));
    return l;
}

Line criterion6() {
    Line l;
    const auto cfg = load_experiment(kData / "categories.json");
    const auto planner = make_planner(cfg);
    const auto rows = sweep(cfg, planner);
    const auto summary = aggregate(to_worker_rows(rows));
    auto band_mean = [&](const std::string& band, const std::string& policy) {
        for (const auto& c : summary.categories)
            if (c.category == band && c.policy == policy) return c.interventions_mean;
        throw std::logic_error("missing band " + band);
    };
    for (const std::string policy : {"attention", "reactive"}) {
        const double hi = band_mean("high_influence_low_expertise", policy);
        const double lo = band_mean("low_influence", policy);
        const double ratio = lo > 0.0 ? hi / lo : (hi > 0.0 ? INFINITY : 0.0);
        const bool ok = policy == "attention" ? ratio >= kTargetingRatio : ratio < kReactiveRatioCap;
        l.check(ok, fmtn("%s: high-influence/low-expertise %.2f vs low-influence %.2f, ratio %.2f", policy.c_str(), hi,
                         lo, ratio));
    }
    return l;
}

Line criterion7(const std::vector<RunRow>& rows) {
    Line l;
    std::vector<double> ks, gains;
    std::string series;
    for (const auto& [k, p] : pair_by_k(rows)) {
        const double g = stats::percent_reduction(stats::mean(p.actions.at("none")), stats::mean(p.actions.at("attention")));
        ks.push_back(static_cast<double>(k));
        gains.push_back(g);
        series += fmtn("%s%.1f", series.empty() ? "" : ",", g);
    }
    const double rho = stats::spearman(ks, gains);
    l.check(ks.size() == 6, fmtn("%zu team sizes", ks.size()));
    l.check(rho < kSpearmanCritical6,
            fmtn("improvement %% by K: %s; Spearman rho = %.3f (increasing trend needs >= %.3f)", series.c_str(), rho,
                 kSpearmanCritical6));
    return l;
}

Line criterion8(const ExperimentConfig& cfg, const Planner& planner) {
    Line l;
    std::ostringstream a, b;
    write_runs_csv(a, sweep(cfg, planner));
    // A freshly built planner rules out state carried between sweeps.
    const auto again = make_planner(cfg);
    write_runs_csv(b, sweep(cfg, again));
    l.check(a.str() == b.str() && !a.str().empty(), fmtn("%zu bytes, identical = %s", a.str().size(),
                                                         a.str() == b.str() ? "yes" : "no"));
    return l;
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int n, const char* name, const std::function<Line()>& run) {
        Line l;
        try {
            l = run();
        } catch (const std::exception& e) {
            l.pass = false;
            l.detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %d %-28s %s  %s\n", n, name, l.pass ? "PASS" : "FAIL", l.detail.c_str());
        std::fflush(stdout);
        if (!l.pass) ++failures;
    };

    const auto cfg = load_experiment(kData / "experiment.json");
    const auto t0 = chrono::steady_clock::now();
    const auto planner = make_planner(cfg);
    const auto rows = sweep(cfg, planner);
    const double sweep_seconds = seconds_since(t0);

    report(1, "optimal-plan oracle", criterion1);
    report(2, "bellman/normalization", [&] { return criterion2(planner, rows); });
    report(3, "oracle equivalence", [&] { return criterion3(planner); });
    report(4, "scaling", [&] { return criterion4(planner); });
    report(5, "team comparison", [&] { return criterion5(rows, sweep_seconds); });
    report(6, "behavior targeting", criterion6);
    report(7, "diminishing returns", [&] { return criterion7(rows); });
    report(8, "determinism", [&] { return criterion8(cfg, planner); });
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
