#include "lae/env.hpp"

#include <algorithm>
#include <cmath>

#include "lae/error.hpp"

namespace lae::env {

void EnvConfig::validate() const {
    if (window_len < 1) throw Error(ErrorKind::InvalidArgument, "window_len must be >= 1");
    if (!(reward_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "reward_scale must be positive");
    if (!(price_floor >= 0.0) || !(price_floor < price_ceiling)) {
        throw Error(ErrorKind::InvalidArgument, "need 0 <= price_floor < price_ceiling");
    }
    if (episode_len < 1) throw Error(ErrorKind::InvalidArgument, "episode_len must be >= 1");
    if (!(demand_noise_std >= 0.0)) throw Error(ErrorKind::InvalidArgument, "demand_noise_std must be >= 0");
    if (game.leaders.empty()) throw Error(ErrorKind::InvalidArgument, "environment needs at least one UAV");
}

PricingEnv::PricingEnv(EnvConfig config) : config_(std::move(config)) {
    config_.validate();
    served_.resize(config_.game.leaders.size());
    for (std::size_t n = 0; n < served_.size(); ++n) {
        for (int i : config_.game.users_of(static_cast<int>(n))) {
            served_[n].push_back(config_.game.followers[static_cast<std::size_t>(i)]);
        }
    }
    reset(config_.seed);
}

std::vector<Observation> PricingEnv::reset(std::uint64_t seed) {
    rng_.seed(seed);
    t_ = 0;
    log_.clear();
    obs_.assign(served_.size(), Observation{std::vector<Observation::Entry>(static_cast<std::size_t>(config_.window_len))});
    return obs_;
}

double PricingEnv::reward_at(int agent, double price) const {
    const auto n = static_cast<std::size_t>(agent);
    const double p = std::clamp(price, config_.price_floor, config_.price_ceiling);
    if (served_[n].empty() || p <= 0.0) return 0.0;
    const auto r = game::respond(served_[n], config_.game.leaders[n].capacity, p);
    return config_.reward_scale * (p - config_.game.leaders[n].unit_cost) * r.total;
}

StepResult PricingEnv::step(const std::vector<double>& actions) {
    if (actions.size() != served_.size()) throw Error(ErrorKind::InvalidArgument, "one action per UAV required");
    StepResult out;
    out.rewards.resize(served_.size());
    out.prices.resize(served_.size());
    out.demands.resize(served_.size());
    for (std::size_t n = 0; n < served_.size(); ++n) {
        if (std::isnan(actions[n])) throw Error(ErrorKind::InvalidAction, "NaN price for UAV " + std::to_string(n));
        const double p = std::clamp(actions[n], config_.price_floor, config_.price_ceiling);
        const auto& leader = config_.game.leaders[n];
        double demand = 0.0;
        if (!served_[n].empty() && p > 0.0) demand = game::respond(served_[n], leader.capacity, p).total;
        if (config_.demand_noise_std > 0.0 && demand > 0.0) {
            const double s = config_.demand_noise_std;
            std::normal_distribution<double> z(0.0, 1.0);
            const double mult = std::exp(std::clamp(z(rng_), -3.0, 3.0) * s - 0.5 * s * s);
            demand = std::min(demand * mult, leader.capacity);
        }
        out.prices[n] = p;
        out.demands[n] = demand;
        out.rewards[n] = config_.reward_scale * (p - leader.unit_cost) * demand;

        auto& w = obs_[n].window;
        w.erase(w.begin());
        w.push_back({p, demand});
        if (logging_) log_.push_back({t_, static_cast<int>(n), p, demand, out.rewards[n]});
    }
    ++t_;
    out.done = t_ >= config_.episode_len;
    out.observations = obs_;
    return out;
}

std::vector<double> PricingEnv::equilibrium_rewards() const {
    const auto eq = game::solve_equilibrium(config_.game);
    std::vector<double> out(served_.size(), 0.0);
    for (std::size_t n = 0; n < served_.size(); ++n) out[n] = config_.reward_scale * eq.uavs[n].utility;
    return out;
}

std::vector<double> flatten(const Observation& obs, double price_ceiling, double capacity) {
    std::vector<double> v;
    v.reserve(obs.window.size() * 2);
    for (const auto& e : obs.window) {
        v.push_back(e.price / price_ceiling);
        v.push_back(e.demand / capacity);
    }
    return v;
}

Observation unflatten(const std::vector<double>& flat, double price_ceiling, double capacity) {
    if (flat.size() % 2 != 0) throw Error(ErrorKind::InvalidArgument, "flattened observation has odd length");
    Observation o;
    for (std::size_t i = 0; i < flat.size(); i += 2) o.window.push_back({flat[i] * price_ceiling, flat[i + 1] * capacity});
    return o;
}

}  // namespace lae::env
