#pragma once

// Experiment configuration, matched-seed sweeps, CSV output and aggregation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnswitch/error.hpp"
#include "attnswitch/sim_harness.hpp"
#include "attnswitch/stats.hpp"

namespace attnswitch {

/// A named slice of the (expertise, influence) population. In category mode
/// every team contains one worker drawn uniformly from each band.
struct CategoryBand {
    std::string name;
    Range beta;
    Range theta;
};

struct SweepPlan {
    std::vector<std::size_t> team_sizes{1, 2, 3, 4, 5, 6};
    std::size_t trials = 5;
    std::size_t repetitions = 6;
};

struct ExperimentConfig {
    std::string instance_text = kCanonicalInstance;
    PoolConfig pool;
    std::size_t beta_bins = 5;
    Range beta_bin_range{0.1, 3.0};
    std::size_t theta_bins = 10;
    RewardConfig rewards;
    double discount = 0.95;
    double tol = 1e-9;
    Heuristic heuristic = Heuristic::QValue;
    std::uint64_t seed = 20240917;
    SweepPlan sweep;
    std::vector<PolicyKind> policies{PolicyKind::Attention, PolicyKind::Reactive, PolicyKind::None};
    std::size_t step_cap = kDefaultStepCap;
    std::vector<CategoryBand> categories;
    std::optional<std::filesystem::path> policy_cache;
    /// Robot's prior per worker: "uniform" over the grid, or "pool" (uniform
    /// over the cells inside the pool's sampling ranges).
    std::string prior = "uniform";

    BehaviorGrid grid() const {
        return BehaviorGrid::uniform(beta_bins, beta_bin_range.low, beta_bin_range.high, theta_bins);
    }
    TrustModel trust() const { return {pool.eta, pool.trust_form}; }
    BehaviorBelief initial_belief() const {
        return prior == "pool" ? init_belief(grid(), pool.beta, pool.theta) : init_belief(grid());
    }
};

/// Parses an experiment document. Relative instance paths resolve against `base_dir`.
ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& file);

/// Builds (or loads from the configured cache) the shared planner.
Planner make_planner(const ExperimentConfig& cfg);

struct RunRow {
    std::size_t run_id = 0;
    std::size_t team_size = 0;
    std::size_t repetition = 0;
    std::size_t trial = 0;
    PolicyKind policy = PolicyKind::None;
    std::uint64_t seed = 0;
    std::vector<std::size_t> worker_ids;  // pool index, or band index in category mode
    std::vector<HumanProfile> profiles;   // initial parameters
    RunRecord record;
};

/// Every (team size, repetition, trial, policy) episode, in that nesting order.
/// Policies of one trial share the trial seed and the same workers.
std::vector<RunRow> sweep(const ExperimentConfig& cfg, const Planner& planner);

inline constexpr const char* kRunsHeader =
    "run_id,K,policy,seed,worker_id,beta,theta0,sigma,human_actions,interventions,relocations,steps,completed,"
    "discounted_return";

void write_runs_csv(std::ostream& out, const std::vector<RunRow>& rows);

/// One CSV line per worker, as read back from a runs file.
struct WorkerRow {
    std::size_t run_id = 0;
    std::size_t team_size = 0;
    std::string policy;
    std::uint64_t seed = 0;
    std::size_t worker_id = 0;
    double beta = 0.0;
    double theta0 = 0.0;
    double sigma = 0.0;
    std::size_t human_actions = 0;
    std::size_t interventions = 0;
    std::size_t relocations = 0;
    std::size_t steps = 0;
    bool completed = false;
    double discounted_return = 0.0;
};

std::vector<WorkerRow> read_runs_csv(std::istream& in);
std::vector<WorkerRow> to_worker_rows(const std::vector<RunRow>& rows);

struct PolicySummary {
    std::size_t team_size = 0;
    std::string policy;
    std::size_t runs = 0;
    double actions_mean = 0.0, actions_std = 0.0;
    double interventions_mean = 0.0, interventions_std = 0.0;
    double relocations_mean = 0.0;
    double completion_rate = 0.0;
};

struct Reduction {
    std::size_t team_size = 0;  // 0 means pooled over all team sizes
    std::string metric;         // "human_actions" or "interventions"
    std::string baseline;
    std::string policy;
    double percent = 0.0;
};

/// Per-policy mean interventions received by workers in a behavior band.
struct CategoryMean {
    std::string category;
    std::string policy;
    std::size_t workers = 0;
    double interventions_mean = 0.0;
};

struct Summary {
    std::vector<PolicySummary> policies;
    std::vector<Reduction> reductions;
    std::vector<CategoryMean> categories;
};

/// Bands used for the per-category breakdown.
std::vector<CategoryBand> report_bands();

Summary aggregate(const std::vector<WorkerRow>& rows);
void write_summary_csv(std::ostream& out, const Summary& s);

// ===========================================================================

namespace detail {

inline Range read_range(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path + ": expected [low, high]");
    Range r{v[0].get<double>(), v[1].get<double>()};
    if (!(r.low <= r.high)) throw ConfigError(path + ": low > high");
    return r;
}

template <class T>
void read_opt(const nlohmann::json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + "/" + key + ": wrong type");
    }
}

inline TrustForm parse_trust_form(const std::string& s) {
    if (s == "repaired") return TrustForm::Repaired;
    if (s == "literal") return TrustForm::Literal;
    throw ConfigError("unknown trust_form '" + s + "' (expected repaired or literal)");
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
    ExperimentConfig cfg;
    if (doc.contains("instance")) {
        const auto& inst = doc["instance"];
        if (inst.is_string()) {
            std::filesystem::path p = inst.get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            std::ifstream in(p);
            if (!in) throw ConfigError("cannot open instance file " + p.string());
            std::stringstream ss;
            ss << in.rdbuf();
            cfg.instance_text = ss.str();
        } else if (inst.is_object()) {
            cfg.instance_text = inst.dump();
        } else {
            throw ConfigError("/instance: expected a path or an inline instance object");
        }
    }
    if (doc.contains("pool")) {
        const auto& p = doc["pool"];
        if (p.contains("beta")) cfg.pool.beta = detail::read_range(p["beta"], "/pool/beta");
        if (p.contains("theta")) cfg.pool.theta = detail::read_range(p["theta"], "/pool/theta");
        if (p.contains("sigma")) cfg.pool.sigma = detail::read_range(p["sigma"], "/pool/sigma");
        detail::read_opt(p, "eta", cfg.pool.eta, "/pool");
        detail::read_opt(p, "size", cfg.pool.pool_size, "/pool");
        if (p.contains("trust_form")) cfg.pool.trust_form = detail::parse_trust_form(p["trust_form"].get<std::string>());
    }
    validate(cfg.pool);
    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        detail::read_opt(g, "beta_bins", cfg.beta_bins, "/grid");
        detail::read_opt(g, "theta_bins", cfg.theta_bins, "/grid");
        if (g.contains("beta_range")) cfg.beta_bin_range = detail::read_range(g["beta_range"], "/grid/beta_range");
    }
    if (doc.contains("rewards")) {
        const auto& r = doc["rewards"];
        detail::read_opt(r, "step_cost", cfg.rewards.step_cost, "/rewards");
        detail::read_opt(r, "intervention_cost", cfg.rewards.intervention_cost, "/rewards");
        detail::read_opt(r, "move_cost", cfg.rewards.move_cost, "/rewards");
    }
    detail::read_opt(doc, "prior", cfg.prior, "");
    if (cfg.prior != "uniform" && cfg.prior != "pool") throw ConfigError("/prior: expected uniform or pool");
    detail::read_opt(doc, "discount", cfg.discount, "");
    detail::read_opt(doc, "tol", cfg.tol, "");
    if (doc.contains("heuristic")) cfg.heuristic = parse_heuristic(doc["heuristic"].get<std::string>());
    detail::read_opt(doc, "seed", cfg.seed, "");
    detail::read_opt(doc, "step_cap", cfg.step_cap, "");
    if (doc.contains("sweep")) {
        const auto& s = doc["sweep"];
        detail::read_opt(s, "K", cfg.sweep.team_sizes, "/sweep");
        detail::read_opt(s, "trials", cfg.sweep.trials, "/sweep");
        detail::read_opt(s, "repetitions", cfg.sweep.repetitions, "/sweep");
    }
    if (doc.contains("policies")) {
        cfg.policies.clear();
        for (const auto& p : doc["policies"]) cfg.policies.push_back(parse_policy_kind(p.get<std::string>()));
    }
    if (doc.contains("categories")) {
        for (const auto& c : doc["categories"]) {
            CategoryBand band;
            band.name = c.value("name", std::string("band") + std::to_string(cfg.categories.size()));
            band.beta = detail::read_range(c.at("beta"), "/categories/beta");
            band.theta = detail::read_range(c.at("theta"), "/categories/theta");
            if (band.theta.low < 0.0 || band.theta.high > 1.0 || band.beta.low < 0.0)
                throw ConfigError("/categories: band outside the legal parameter domain");
            cfg.categories.push_back(band);
        }
    }
    if (doc.contains("policy_cache")) {
        std::filesystem::path p = doc["policy_cache"].get<std::string>();
        cfg.policy_cache = p.is_relative() ? base_dir / p : p;
    }

    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) throw ConfigError("discount must lie in (0, 1)");
    if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
    if (cfg.step_cap == 0) throw ConfigError("step_cap must be positive");
    if (cfg.policies.empty()) throw ConfigError("at least one policy is required");
    if (cfg.sweep.trials == 0 || cfg.sweep.repetitions == 0) throw ConfigError("trials and repetitions must be positive");
    if (cfg.categories.empty()) {
        for (auto k : cfg.sweep.team_sizes) {
            if (k == 0) throw ConfigError("team size K must be >= 1");
            if (k > cfg.pool.pool_size)
                throw ConfigError("team size K=" + std::to_string(k) + " exceeds pool size " +
                                  std::to_string(cfg.pool.pool_size));
        }
    }
    return cfg;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return parse_experiment(doc, file.parent_path());
}

inline Planner make_planner(const ExperimentConfig& cfg) {
    const auto inst = parse_instance(cfg.instance_text);
    if (!cfg.policy_cache) return Planner::build(inst, cfg.grid(), cfg.rewards, cfg.trust(), cfg.discount, cfg.tol);
    Planner p;
    p.space = std::make_shared<const StateSpace>(inst);
    p.cost = std::make_shared<const CostTable>(solve_cost_to_go(p.space));
    p.model = std::make_shared<const AssistModel>(p.cost, cfg.grid(), cfg.rewards, cfg.trust(), cfg.discount);
    if (auto cached = read_policy_cache(p.model, cfg.tol, *cfg.policy_cache)) {
        p.policy = std::make_shared<const AssistPolicy>(std::move(*cached));
    } else {
        p.policy = std::make_shared<const AssistPolicy>(solve_qmdp(p.model, cfg.tol));
        write_policy_cache(*p.policy, cfg.tol, *cfg.policy_cache);
    }
    return p;
}

inline std::vector<RunRow> sweep(const ExperimentConfig& cfg, const Planner& planner) {
    const bool category_mode = !cfg.categories.empty();
    std::vector<HumanProfile> pool;
    if (!category_mode) pool = sample_pool(cfg.pool, *planner.cost, cfg.seed);
    std::vector<std::size_t> sizes = cfg.sweep.team_sizes;
    if (category_mode) sizes = {cfg.categories.size()};

    std::vector<RunRow> rows;
    std::size_t run_id = 0;
    for (auto team_size : sizes) {
        if (!category_mode && team_size > pool.size())
            throw ConfigError("team size exceeds pool size");
        for (std::size_t rep = 0; rep < cfg.sweep.repetitions; ++rep) {
            RngStream draw(derive_seed({cfg.seed, static_cast<std::uint64_t>(StreamPurpose::TeamDraw), team_size, rep}));
            std::vector<std::size_t> ids;
            std::vector<HumanProfile> team;
            if (category_mode) {
                for (std::size_t b = 0; b < cfg.categories.size(); ++b) {
                    const auto& band = cfg.categories[b];
                    ids.push_back(b);
                    team.push_back(sample_profile(
                        *planner.cost, band.beta, band.theta, cfg.pool.sigma, cfg.pool.eta, cfg.pool.trust_form, draw,
                        derive_seed({cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Noise), rep, b})));
                }
            } else {
                // Partial Fisher-Yates: the first team_size entries are a draw without replacement.
                std::vector<std::size_t> order(pool.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                for (std::size_t i = 0; i < team_size; ++i) {
                    const auto j = i + static_cast<std::size_t>(uniform01(draw) * static_cast<double>(order.size() - i));
                    std::swap(order[i], order[std::min(j, order.size() - 1)]);
                }
                for (std::size_t i = 0; i < team_size; ++i) {
                    ids.push_back(order[i]);
                    team.push_back(pool[order[i]]);
                }
            }
            for (std::size_t trial = 0; trial < cfg.sweep.trials; ++trial) {
                const auto trial_seed =
                    derive_seed({cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Trial), team_size, rep, trial});
                for (auto kind : cfg.policies) {
                    EpisodeConfig ep;
                    ep.planner = &planner;
                    ep.workers = team;
                    ep.policy = kind;
                    ep.heuristic = cfg.heuristic;
                    ep.seed = trial_seed;
                    ep.step_cap = cfg.step_cap;
                    ep.prior = cfg.initial_belief();
                    rows.push_back(RunRow{run_id++, team_size, rep, trial, kind, trial_seed, ids, team, run_episode(ep)});
                }
            }
        }
    }
    return rows;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

inline void write_runs_csv(std::ostream& out, const std::vector<RunRow>& rows) {
    out << kRunsHeader << '\n';
    for (const auto& r : rows)
        for (std::size_t k = 0; k < r.profiles.size(); ++k) {
            const auto& p = r.profiles[k];
            const auto& w = r.record.workers[k];
            out << r.run_id << ',' << r.team_size << ',' << to_string(r.policy) << ',' << r.seed << ','
                << r.worker_ids[k] << ',' << detail::fmt_double(p.beta) << ',' << detail::fmt_double(p.theta) << ','
                << detail::fmt_double(p.sigma()) << ',' << w.human_actions << ',' << w.interventions << ','
                << r.record.relocations << ',' << r.record.steps << ',' << (r.record.completed ? 1 : 0) << ','
                << detail::fmt_double(r.record.discounted_return) << '\n';
        }
}

inline std::vector<WorkerRow> read_runs_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("runs file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRunsHeader) throw ParseError("runs file: unexpected header");
    std::vector<WorkerRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 14) throw ParseError("runs file line " + std::to_string(line_no) + ": expected 14 fields");
        try {
            WorkerRow r;
            r.run_id = std::stoull(cells[0]);
            r.team_size = std::stoull(cells[1]);
            r.policy = cells[2];
            r.seed = std::stoull(cells[3]);
            r.worker_id = std::stoull(cells[4]);
            r.beta = std::stod(cells[5]);
            r.theta0 = std::stod(cells[6]);
            r.sigma = std::stod(cells[7]);
            r.human_actions = std::stoull(cells[8]);
            r.interventions = std::stoull(cells[9]);
            r.relocations = std::stoull(cells[10]);
            r.steps = std::stoull(cells[11]);
            r.completed = cells[12] == "1";
            r.discounted_return = std::stod(cells[13]);
            rows.push_back(r);
        } catch (const std::exception&) {
            throw ParseError("runs file line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return rows;
}

inline std::vector<WorkerRow> to_worker_rows(const std::vector<RunRow>& rows) {
    std::vector<WorkerRow> out;
    for (const auto& r : rows)
        for (std::size_t k = 0; k < r.profiles.size(); ++k) {
            const auto& w = r.record.workers[k];
            out.push_back(WorkerRow{r.run_id, r.team_size, to_string(r.policy), r.seed, r.worker_ids[k],
                                    r.profiles[k].beta, r.profiles[k].theta, r.profiles[k].sigma(), w.human_actions,
                                    w.interventions, r.record.relocations, r.record.steps, r.record.completed,
                                    r.record.discounted_return});
        }
    return out;
}

inline std::vector<CategoryBand> report_bands() {
    return {
        {"low_expertise", {0.1, 0.5}, {0.0, 1.0}},
        {"high_expertise", {2.0, 2.5}, {0.0, 1.0}},
        {"low_influence", {0.0, 1e300}, {0.5, 0.55}},
        {"high_influence", {0.0, 1e300}, {0.8, 0.9}},
        {"high_influence_low_expertise", {0.1, 0.5}, {0.8, 0.9}},
    };
}

inline Summary aggregate(const std::vector<WorkerRow>& rows) {
    if (rows.empty()) throw ContractViolation("aggregate needs at least one record");
    struct RunTotals {
        std::size_t team_size;
        std::string policy;
        double actions = 0, interventions = 0, relocations = 0;
        bool completed = false;
    };
    std::map<std::size_t, RunTotals> runs;
    for (const auto& r : rows) {
        auto [it, fresh] = runs.try_emplace(r.run_id, RunTotals{r.team_size, r.policy});
        it->second.actions += static_cast<double>(r.human_actions);
        it->second.interventions += static_cast<double>(r.interventions);
        it->second.relocations = static_cast<double>(r.relocations);
        it->second.completed = r.completed;
    }

    // Policies in first-seen order so output is stable.
    std::vector<std::string> policy_order;
    std::vector<std::size_t> sizes;
    for (const auto& [id, t] : runs) {
        if (std::find(policy_order.begin(), policy_order.end(), t.policy) == policy_order.end())
            policy_order.push_back(t.policy);
        if (std::find(sizes.begin(), sizes.end(), t.team_size) == sizes.end()) sizes.push_back(t.team_size);
    }
    std::sort(sizes.begin(), sizes.end());

    Summary s;
    std::map<std::pair<std::size_t, std::string>, PolicySummary> by_key;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pooled;
    for (auto k : sizes)
        for (const auto& pol : policy_order) {
            std::vector<double> acts, ints, relocs, done;
            for (const auto& [id, t] : runs)
                if (t.team_size == k && t.policy == pol) {
                    acts.push_back(t.actions);
                    ints.push_back(t.interventions);
                    relocs.push_back(t.relocations);
                    done.push_back(t.completed ? 1.0 : 0.0);
                }
            if (acts.empty()) continue;
            PolicySummary ps{k, pol, acts.size(), stats::mean(acts), stats::stddev(acts), stats::mean(ints),
                             stats::stddev(ints), stats::mean(relocs), stats::mean(done)};
            by_key[{k, pol}] = ps;
            s.policies.push_back(ps);
            auto& pool = pooled[pol];
            pool.first.insert(pool.first.end(), acts.begin(), acts.end());
            pool.second.insert(pool.second.end(), ints.begin(), ints.end());
        }

    auto add_reduction = [&](std::size_t k, const std::string& metric, const std::string& base, const std::string& pol,
                             double base_v, double pol_v) {
        if (base_v != 0.0) s.reductions.push_back({k, metric, base, pol, stats::percent_reduction(base_v, pol_v)});
    };
    const std::vector<std::pair<std::string, std::string>> comparisons{
        {"none", "attention"}, {"reactive", "attention"}, {"none", "reactive"}};
    for (const auto& [base, pol] : comparisons) {
        if (!pooled.count(base) || !pooled.count(pol)) continue;
        for (auto k : sizes) {
            auto b = by_key.find({k, base}), p = by_key.find({k, pol});
            if (b == by_key.end() || p == by_key.end()) continue;
            add_reduction(k, "human_actions", base, pol, b->second.actions_mean, p->second.actions_mean);
            if (base != "none")
                add_reduction(k, "interventions", base, pol, b->second.interventions_mean, p->second.interventions_mean);
        }
        add_reduction(0, "human_actions", base, pol, stats::mean(pooled[base].first), stats::mean(pooled[pol].first));
        if (base != "none")
            add_reduction(0, "interventions", base, pol, stats::mean(pooled[base].second),
                          stats::mean(pooled[pol].second));
    }

    for (const auto& band : report_bands())
        for (const auto& pol : policy_order) {
            std::vector<double> ints;
            for (const auto& r : rows)
                if (r.policy == pol && r.beta >= band.beta.low && r.beta <= band.beta.high &&
                    r.theta0 >= band.theta.low && r.theta0 <= band.theta.high)
                    ints.push_back(static_cast<double>(r.interventions));
            if (!ints.empty()) s.categories.push_back({band.name, pol, ints.size(), stats::mean(ints)});
        }
    return s;
}

inline void write_summary_csv(std::ostream& out, const Summary& s) {
    out << "K,policy,runs,human_actions_mean,human_actions_std,interventions_mean,interventions_std,"
           "relocations_mean,completion_rate\n";
    for (const auto& p : s.policies)
        out << p.team_size << ',' << p.policy << ',' << p.runs << ',' << detail::fmt_double(p.actions_mean) << ','
            << detail::fmt_double(p.actions_std) << ',' << detail::fmt_double(p.interventions_mean) << ','
            << detail::fmt_double(p.interventions_std) << ',' << detail::fmt_double(p.relocations_mean) << ','
            << detail::fmt_double(p.completion_rate) << '\n';
}

}  // namespace attnswitch
