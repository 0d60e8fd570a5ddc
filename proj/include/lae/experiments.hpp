#pragma once

// Experiment drivers. Each writes a self-describing directory of CSV/SVG
// files; nothing in the output depends on wall-clock time unless
// ExperimentSpec::timings is set.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lae/config.hpp"
#include "lae/env.hpp"
#include "lae/ppo.hpp"
#include "lae/scenario.hpp"

namespace lae::harness {

struct RunReport {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> lines;  // human-readable summary
    bool diverged = false;           // some training method diverged
};

env::EnvConfig make_env(const ExperimentSpec& spec, const game::GameInstance& game);

/// Equilibrium with every invariant re-checked; throws ScenarioInfeasible
/// naming the offending UAVs or users.
game::Equilibrium checked_equilibrium(const Market& market);

RunReport run_equilibrium_snapshot(const ExperimentSpec& spec);

struct MethodRun {
    std::string name;
    std::vector<ppo::EpochMetrics> metrics;
    std::vector<ppo::PruneEvent> prune_events;
    bool diverged = false;
    std::string error;
};

struct Comparison {
    std::vector<MethodRun> methods;  // pruned_ppo, dense_ppo, greedy, random
    double optimum = 0;              // mean per-agent a * U^L at the equilibrium
};

/// Trains pruned and dense PPO and runs both baselines on the same seeds.
Comparison compare_methods(const env::EnvConfig& env_config, const ppo::TrainConfig& train, bool greedy_knows_channels);

/// Mean test reward over the last `window` epochs.
double final_reward(const std::vector<ppo::EpochMetrics>& metrics, int window = 20);

RunReport run_training(const ExperimentSpec& spec);

RunReport run_pruning_sweep(const ExperimentSpec& spec);

struct SweepPoint {
    int value = 0;          // users (user sweep) or UAVs (UAV sweep)
    int feasible = 0;       // seeds whose scenario had an equilibrium
    double mean_reward = 0; // per-UAV equilibrium reward, averaged over UAVs then seeds
    double std_reward = 0;
    double min_reward = 0;
    double max_reward = 0;
    std::optional<double> learned_reward;
};

/// Equilibrium reward per UAV across scenario seeds seed, seed+1, ...
std::vector<SweepPoint> scaling_sweep(const ExperimentSpec& spec, bool vary_users);

RunReport run_scaling_sweep(const ExperimentSpec& spec);

RunReport run_experiment(const ExperimentSpec& spec);

}  // namespace lae::harness
