#include "lae/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lae/error.hpp"

namespace lae::game {

const char* to_string(PriceCase c) {
    switch (c) {
        case PriceCase::Interior: return "interior";
        case PriceCase::StabilityCapped: return "stability-capped";
        case PriceCase::CapacityFloored: return "capacity-floored";
        case PriceCase::Idle: return "idle";
    }
    return "?";
}

std::vector<int> GameInstance::users_of(int uav) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < followers.size(); ++i) {
        if (followers[i].association == uav) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::vector<int> associate(std::span<const latency::UserDevice> users, std::span<const latency::UavNode> uavs,
                           const latency::ChannelParams& params) {
    if (uavs.empty()) throw Error(ErrorKind::InvalidArgument, "association needs at least one UAV");
    std::vector<int> out(users.size(), 0);
    for (std::size_t i = 0; i < users.size(); ++i) {
        double best = -1.0;
        for (std::size_t n = 0; n < uavs.size(); ++n) {
            const double s = latency::snr(users[i], uavs[n], params);
            if (s > best) {
                best = s;
                out[i] = static_cast<int>(n);
            }
        }
    }
    return out;
}

double follower_utility(double kappa, double urgency, double spectral_eff, double price) {
    return urgency * std::log1p(kappa * spectral_eff) - price * kappa;
}

namespace {

// Slack for floors that sit exactly on the remaining capacity after the
// capacity-floored price has used it all up.
double fit_tolerance(double cap) { return 1e-12 * std::max(1.0, std::abs(cap)); }

}  // namespace

double follower_best_response(double urgency, double spectral_eff, double price, double kappa_min,
                              double remaining_cap) {
    if (!(price > 0.0) || !(spectral_eff > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "best response needs price > 0 and spectral efficiency > 0");
    }
    if (kappa_min > remaining_cap + fit_tolerance(remaining_cap)) {
        throw Error(ErrorKind::InfeasibleAllocation, "stability floor exceeds remaining capacity");
    }
    const double raw = urgency / price - 1.0 / spectral_eff;
    return std::clamp(raw, std::min(kappa_min, remaining_cap), remaining_cap);
}

PriceBounds price_bounds(std::span<const FollowerView> followers, double capacity) {
    if (followers.empty()) throw Error(ErrorKind::InvalidArgument, "price bounds need at least one follower");
    PriceBounds b;
    b.upper = std::numeric_limits<double>::infinity();
    double theta = 0.0;
    double inv_eff = 0.0;
    for (const auto& f : followers) {
        b.upper = std::min(b.upper, f.urgency / (f.kappa_min + 1.0 / f.spectral_eff));
        theta += f.urgency;
        inv_eff += 1.0 / f.spectral_eff;
    }
    b.lower = theta / (capacity + inv_eff);
    if (b.lower > b.upper) {
        std::ostringstream os;
        os << "lower price " << b.lower << " exceeds stability cap " << b.upper;
        throw Error(ErrorKind::EmptyFeasibleRegion, os.str());
    }
    return b;
}

LeaderAggregates aggregate(std::span<const FollowerView> followers, const LeaderView& leader) {
    LeaderAggregates a;
    a.unit_cost = leader.unit_cost;
    a.capacity = leader.capacity;
    for (const auto& f : followers) {
        a.theta_sum += f.urgency;
        a.inv_eff_sum += 1.0 / f.spectral_eff;
    }
    a.bounds = price_bounds(followers, leader.capacity);
    return a;
}

PriceDecision optimal_price(double unit_cost, double theta_sum, double inv_eff_sum, PriceBounds bounds) {
    if (!(theta_sum > 0.0) || !(inv_eff_sum > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "optimal price needs positive aggregates");
    }
    if (bounds.lower > bounds.upper) throw Error(ErrorKind::EmptyFeasibleRegion, "lower bound above upper bound");
    PriceDecision d;
    d.unconstrained = std::sqrt(unit_cost * theta_sum / inv_eff_sum);
    if (d.unconstrained < bounds.lower) {
        d.price = bounds.lower;
        d.label = PriceCase::CapacityFloored;
    } else if (d.unconstrained > bounds.upper) {
        d.price = bounds.upper;
        d.label = PriceCase::StabilityCapped;
    } else {
        d.price = d.unconstrained;
        d.label = PriceCase::Interior;
    }
    return d;
}

double leader_utility(double price, double unit_cost, std::span<const double> demands) {
    double total = 0.0;
    for (double k : demands) total += k;
    return (price - unit_cost) * total;
}

double reduced_leader_utility(double price, double unit_cost, double theta_sum, double inv_eff_sum) {
    return (price - unit_cost) * (theta_sum / price - inv_eff_sum);
}

Response respond(std::span<const FollowerView> followers, double capacity, double price) {
    Response r;
    r.demand.reserve(followers.size());
    for (const auto& f : followers) {
        const double remaining = std::max(0.0, capacity - r.total);
        double k = 0.0;
        if (f.kappa_min > remaining + fit_tolerance(remaining)) {
            k = remaining;
            r.shortfall = true;
        } else {
            k = follower_best_response(f.urgency, f.spectral_eff, price, f.kappa_min, remaining);
        }
        r.demand.push_back(k);
        r.total += k;
    }
    return r;
}

Equilibrium solve_equilibrium(const GameInstance& game) {
    const auto users = game.followers.size();
    Equilibrium eq;
    eq.demand.assign(users, 0.0);
    eq.follower_utility.assign(users, 0.0);
    eq.uavs.resize(game.leaders.size());

    std::vector<std::string> offending;
    for (std::size_t n = 0; n < game.leaders.size(); ++n) {
        auto& out = eq.uavs[n];
        out.uav = static_cast<int>(n);
        const auto idx = game.users_of(static_cast<int>(n));
        if (idx.empty()) {
            out.decision.label = PriceCase::Idle;
            out.aggregates.unit_cost = game.leaders[n].unit_cost;
            out.aggregates.capacity = game.leaders[n].capacity;
            continue;
        }
        std::vector<FollowerView> served;
        for (int i : idx) served.push_back(game.followers[static_cast<std::size_t>(i)]);
        try {
            out.aggregates = aggregate(served, game.leaders[n]);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyFeasibleRegion) throw;
            offending.push_back("uav " + std::to_string(n) + " (" + e.what() + ")");
            continue;
        }
        const auto& a = out.aggregates;
        out.decision = optimal_price(a.unit_cost, a.theta_sum, a.inv_eff_sum, a.bounds);

        double used = 0.0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& f = served[j];
            const double k = follower_best_response(f.urgency, f.spectral_eff, out.decision.price, f.kappa_min,
                                                    std::max(0.0, a.capacity - used));
            used += k;
            const auto i = static_cast<std::size_t>(idx[j]);
            eq.demand[i] = k;
            eq.follower_utility[i] = follower_utility(k, f.urgency, f.spectral_eff, out.decision.price);
        }
        out.total_demand = used;
        out.utility = (out.decision.price - a.unit_cost) * used;
    }
    if (!offending.empty()) {
        std::string msg = "empty feasible price region for";
        for (const auto& s : offending) msg += " " + s + ";";
        throw Error(ErrorKind::ScenarioInfeasible, msg);
    }
    return eq;
}

std::vector<std::string> Equilibrium::violations(const GameInstance& game, double tol) const {
    std::vector<std::string> out;
    for (const auto& u : uavs) {
        if (u.decision.label == PriceCase::Idle) continue;
        const double cap = game.leaders[static_cast<std::size_t>(u.uav)].capacity;
        if (u.total_demand > cap + tol) out.push_back("uav " + std::to_string(u.uav) + " over capacity");
        const auto& b = u.aggregates.bounds;
        if (u.decision.price < b.lower - tol || u.decision.price > b.upper + tol) {
            out.push_back("uav " + std::to_string(u.uav) + " price outside bounds");
        }
    }
    for (std::size_t i = 0; i < game.followers.size(); ++i) {
        if (demand[i] < game.followers[i].kappa_min - tol) {
            out.push_back("user " + std::to_string(i) + " below stability floor");
        }
    }
    return out;
}

}  // namespace lae::game
