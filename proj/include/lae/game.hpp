#pragma once

// Leader-follower bandwidth pricing. Each UAV (leader) posts a unit price;
// each associated user (follower) answers with the demand maximising
// urgency * ln(1 + kappa * H) - price * kappa. Bandwidth quantities in this
// module are in "bandwidth units" (MHz by default, see harness::ScenarioConfig).

#include <span>
#include <string>
#include <vector>

#include "lae/latency.hpp"

namespace lae::game {

enum class PriceCase { Interior, StabilityCapped, CapacityFloored, Idle };

const char* to_string(PriceCase c);

struct FollowerView {
    double urgency = 1.0;
    double spectral_eff = 1.0;  // log2(1 + SNR), bits/s/Hz
    double kappa_min = 0.0;
    int association = 0;
};

struct LeaderView {
    double unit_cost = 0.2;
    double capacity = 20.0;
};

struct GameInstance {
    std::vector<FollowerView> followers;
    std::vector<LeaderView> leaders;

    std::vector<int> users_of(int uav) const;
};

struct PriceBounds {
    double lower = 0;
    double upper = 0;
};

struct LeaderAggregates {
    double theta_sum = 0;
    double inv_eff_sum = 0;
    double unit_cost = 0;
    double capacity = 0;
    PriceBounds bounds;
};

struct PriceDecision {
    double price = 0;
    PriceCase label = PriceCase::Interior;
    double unconstrained = 0;
};

struct UavOutcome {
    int uav = 0;
    PriceDecision decision;
    LeaderAggregates aggregates;
    double total_demand = 0;
    double utility = 0;
};

struct Equilibrium {
    std::vector<UavOutcome> uavs;
    std::vector<double> demand;             // per user
    std::vector<double> follower_utility;   // per user

    /// Rechecks capacity, stability floors and price bounds; returns a list of
    /// violations (empty when all hold).
    std::vector<std::string> violations(const GameInstance& game, double tol = 1e-9) const;
};

/// Index of the UAV with the highest SNR for every user; ties go to the lowest index.
std::vector<int> associate(std::span<const latency::UserDevice> users, std::span<const latency::UavNode> uavs,
                           const latency::ChannelParams& params);

double follower_utility(double kappa, double urgency, double spectral_eff, double price);

/// Unconstrained optimum urgency/price - 1/H projected onto [kappa_min, remaining_cap].
double follower_best_response(double urgency, double spectral_eff, double price, double kappa_min,
                              double remaining_cap);

PriceBounds price_bounds(std::span<const FollowerView> followers, double capacity);

LeaderAggregates aggregate(std::span<const FollowerView> followers, const LeaderView& leader);

PriceDecision optimal_price(double unit_cost, double theta_sum, double inv_eff_sum, PriceBounds bounds);

double leader_utility(double price, double unit_cost, std::span<const double> demands);

/// Reduced leader objective (price - c)(Theta/price - H_n) valid on the
/// feasible price interval.
double reduced_leader_utility(double price, double unit_cost, double theta_sum, double inv_eff_sum);

struct Response {
    std::vector<double> demand;  // same order as the followers passed in
    double total = 0;
    bool shortfall = false;      // capacity ran out before some floor was met
};

/// Follower reactions to a posted price, served in index order against the
/// remaining capacity. Unlike follower_best_response, a user whose floor no
/// longer fits receives whatever capacity is left and `shortfall` is set.
Response respond(std::span<const FollowerView> followers, double capacity, double price);

Equilibrium solve_equilibrium(const GameInstance& game);

}  // namespace lae::game
