// attnswitch: solve assistance policies, run episodes and sweeps, summarize results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "attnswitch/attnswitch.hpp"

namespace fs = std::filesystem;
using namespace attnswitch;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_solve(const std::string& instance_file, const std::string& out, const std::string& config_file,
              const std::string& cost_out) {
    ExperimentConfig cfg;
    if (!config_file.empty()) cfg = load_experiment(config_file);
    cfg.instance_text = read_file(instance_file);
    cfg.policy_cache.reset();
    const auto planner = make_planner(cfg);
    write_policy_cache(*planner.policy, cfg.tol, out);
    if (!cost_out.empty()) write_cost_cache(*planner.cost, cost_out);
    std::printf("env states          %zu\n", planner.space->size());
    std::printf("optimal plan length %d\n", planner.cost->v(planner.space->initial()));
    std::printf("model states        %zu\n", planner.model->state_count());
    std::printf("robot actions       %zu\n", planner.model->action_count());
    std::printf("iterations          %zu\n", planner.policy->iterations());
    std::printf("bellman residual    %.3e\n", planner.policy->residual());
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_run(const std::string& config_file, std::uint64_t seed, std::size_t team_size, const std::string& policy,
            const std::string& heuristic, const std::string& trace_file) {
    auto cfg = load_experiment(config_file);
    if (!heuristic.empty()) cfg.heuristic = parse_heuristic(heuristic);
    cfg.policies = {policy.empty() ? PolicyKind::Attention : parse_policy_kind(policy)};
    if (cfg.categories.empty()) {
        if (team_size == 0) team_size = cfg.sweep.team_sizes.empty() ? 1 : cfg.sweep.team_sizes.front();
        if (team_size > cfg.pool.pool_size) throw ConfigError("K exceeds pool size");
        cfg.sweep.team_sizes = {team_size};
    }
    cfg.sweep.repetitions = 1;
    cfg.sweep.trials = 1;
    const auto planner = make_planner(cfg);
    auto rows = sweep(cfg, planner);

    // Replay the single episode under the requested seed, optionally traced.
    auto& row = rows.front();
    std::ofstream trace;
    EpisodeConfig ep;
    ep.planner = &planner;
    ep.workers = row.profiles;
    ep.policy = row.policy;
    ep.heuristic = cfg.heuristic;
    ep.seed = seed;
    ep.step_cap = cfg.step_cap;
    if (!trace_file.empty()) {
        trace.open(trace_file);
        if (!trace) throw ConfigError("cannot open trace file " + trace_file);
        ep.trace = &trace;
    }
    row.seed = seed;
    row.record = run_episode(ep);
    write_runs_csv(std::cout, rows);
    return 0;
}

int cmd_sweep(const std::string& config_file, const std::string& out_dir, std::optional<std::uint64_t> seed) {
    auto cfg = load_experiment(config_file);
    if (seed) cfg.seed = *seed;
    const auto planner = make_planner(cfg);
    const auto rows = sweep(cfg, planner);
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "runs.csv");
        write_runs_csv(out, rows);
    }
    {
        std::ofstream out(fs::path(out_dir) / "summary.csv");
        write_summary_csv(out, aggregate(to_worker_rows(rows)));
    }
    std::printf("%zu runs written to %s\n", rows.size(), out_dir.c_str());
    return 0;
}

int cmd_report(const std::string& in_dir) {
    std::ifstream in(fs::path(in_dir) / "runs.csv");
    if (!in) throw ConfigError("cannot open " + (fs::path(in_dir) / "runs.csv").string());
    const auto summary = aggregate(read_runs_csv(in));
    {
        std::ofstream out(fs::path(in_dir) / "summary.csv");
        write_summary_csv(out, summary);
    }
    std::printf("%-3s %-10s %5s %14s %14s %14s %8s\n", "K", "policy", "runs", "actions", "interventions",
                "relocations", "done");
    for (const auto& p : summary.policies)
        std::printf("%-3zu %-10s %5zu %7.2f±%-6.2f %7.2f±%-6.2f %14.2f %8.2f\n", p.team_size, p.policy.c_str(), p.runs,
                    p.actions_mean, p.actions_std, p.interventions_mean, p.interventions_std, p.relocations_mean,
                    p.completion_rate);
    std::printf("\nreductions (%%)\n");
    for (const auto& r : summary.reductions) {
        const std::string k = r.team_size == 0 ? "all" : std::to_string(r.team_size);
        std::printf("  K=%-3s %-13s %-9s vs %-9s %7.2f\n", k.c_str(), r.metric.c_str(), r.policy.c_str(),
                    r.baseline.c_str(), r.percent);
    }
    std::printf("\nmean interventions per worker by behavior band\n");
    for (const auto& c : summary.categories)
        std::printf("  %-30s %-10s n=%-5zu %7.2f\n", c.category.c_str(), c.policy.c_str(), c.workers,
                    c.interventions_mean);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-switching robot assistance planner and simulator"};
    app.require_subcommand(1);

    std::string instance, out, config, cost_out, policy, heuristic, trace, in_dir;
    std::uint64_t seed = 0;
    std::size_t team_size = 0;

    auto* solve = app.add_subcommand("solve", "Solve the per-worker assistance model and write a policy cache");
    solve->add_option("--instance", instance, "Instance JSON file")->required()->check(CLI::ExistingFile);
    solve->add_option("--out", out, "Policy cache file to write")->required();
    solve->add_option("--config", config, "Experiment config supplying grid, rewards and discount")
        ->check(CLI::ExistingFile);
    solve->add_option("--cost-out", cost_out, "Also write the cost-to-go cache here");

    auto* run = app.add_subcommand("run", "Run one episode and print its CSV rows");
    run->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Episode seed")->required();
    run->add_option("--K", team_size, "Number of workers (drawn from the pool)");
    run->add_option("--policy", policy, "attention|reactive|none")
        ->check(CLI::IsMember({"attention", "reactive", "none"}));
    run->add_option("--heuristic", heuristic, "qvalue|one-step")->check(CLI::IsMember({"qvalue", "one-step"}));
    run->add_option("--trace", trace, "Write a JSON-lines step trace here");

    std::optional<std::uint64_t> sweep_seed;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the matched experiment sweep");
    sweep_cmd->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out", out, "Output directory")->required();
    sweep_cmd->add_option("--seed", sweep_seed, "Override the master seed");

    auto* report = app.add_subcommand("report", "Summarize a sweep directory");
    report->add_option("--in", in_dir, "Directory holding runs.csv")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*solve) return cmd_solve(instance, out, config, cost_out);
        if (*run) return cmd_run(config, seed, team_size, policy, heuristic, trace);
        if (*sweep_cmd) return cmd_sweep(config, out, sweep_seed);
        if (*report) return cmd_report(in_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "attnswitch: error: %s\n", e.what());
        return 1;
    }
    return 1;
}
