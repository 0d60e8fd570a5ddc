#pragma once

// Repeated pricing game seen from each UAV: post a price, watch the aggregate
// demand of the associated users, collect a scaled leader utility.

#include <cstdint>
#include <random>
#include <vector>

#include "lae/game.hpp"

namespace lae::env {

struct Observation {
    struct Entry {
        double price = 0;
        double demand = 0;
    };
    std::vector<Entry> window;  // oldest first
};

struct EnvConfig {
    game::GameInstance game;
    int window_len = 5;
    double reward_scale = 1e-2;
    double price_floor = 0.1;
    double price_ceiling = 5.0;
    int episode_len = 200;
    double demand_noise_std = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StepResult {
    std::vector<Observation> observations;
    std::vector<double> rewards;
    std::vector<double> prices;   // clamped prices actually posted
    std::vector<double> demands;  // aggregate demand per UAV
    bool done = false;
};

struct Transition {
    int t;
    int agent;
    double price;
    double demand;
    double reward;
};

class PricingEnv {
public:
    explicit PricingEnv(EnvConfig config);

    std::vector<Observation> reset(std::uint64_t seed);
    StepResult step(const std::vector<double>& actions);

    int agents() const { return static_cast<int>(config_.game.leaders.size()); }
    int time() const { return t_; }
    const EnvConfig& config() const { return config_; }
    const std::vector<Observation>& observations() const { return obs_; }

    /// Per-step reward of the given UAV at a fixed price with noise off.
    double reward_at(int agent, double price) const;

    /// a * U^L at the solved equilibrium price, per agent (0 for idle UAVs).
    std::vector<double> equilibrium_rewards() const;

    void set_logging(bool on) { logging_ = on; }
    const std::vector<Transition>& log() const { return log_; }

private:
    EnvConfig config_;
    std::vector<std::vector<game::FollowerView>> served_;
    std::vector<Observation> obs_;
    std::mt19937_64 rng_;
    int t_ = 0;
    bool logging_ = false;
    std::vector<Transition> log_;
};

/// 2L values: (price / ceiling, demand / capacity) per entry, oldest first.
std::vector<double> flatten(const Observation& obs, double price_ceiling, double capacity);
Observation unflatten(const std::vector<double>& flat, double price_ceiling, double capacity);

}  // namespace lae::env
