#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lae/error.hpp"
#include "lae/game.hpp"
#include "lae/kernels.hpp"
#include "oracles.hpp"

using namespace lae;
using namespace lae::game;

namespace {

FollowerView follower(double urgency, double eff, double kappa_min = 0.0, int uav = 0) {
    return {urgency, eff, kappa_min, uav};
}

// Random feasible instance: a few UAVs, users spread over them.
GameInstance random_instance(std::mt19937_64& rng, int uavs, int users) {
    std::uniform_real_distribution<double> urg(1.0, 5.0), eff(1.0, 12.0), kmin(0.0, 1.5), cost(0.1, 0.4),
        cap(10.0, 30.0);
    std::uniform_int_distribution<int> pick(0, uavs - 1);
    GameInstance g;
    for (int n = 0; n < uavs; ++n) g.leaders.push_back({cost(rng), cap(rng)});
    for (int i = 0; i < users; ++i) g.followers.push_back(follower(urg(rng), eff(rng), kmin(rng), i < uavs ? i : pick(rng)));
    return g;
}

}  // namespace

TEST_SUITE("game") {

TEST_CASE("association") {
    latency::ChannelParams p;
    std::vector<latency::UserDevice> users(4);
    users[0].position = {0, 0, 0};
    users[1].position = {100, 0, 0};
    users[2].position = {50, 0, 0};   // equidistant
    users[3].position = {90, 10, 0};
    std::vector<latency::UavNode> one(1);
    one[0].position = {10, 10, 100};
    CHECK(associate(users, one, p) == std::vector<int>{0, 0, 0, 0});

    std::vector<latency::UavNode> two(2);
    two[0].position = {0, 0, 100};
    two[1].position = {100, 0, 100};
    CHECK(associate(users, two, p) == std::vector<int>{0, 1, 0, 1});
    CHECK_THROWS_AS(associate(users, std::span<const latency::UavNode>{}, p), Error);
}

TEST_CASE("association matches exhaustive comparison") {
    latency::ChannelParams p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(0, 1000), pw(0.05, 0.2);
    std::vector<latency::UserDevice> users(30);
    std::vector<latency::UavNode> uavs(5);
    for (auto& u : users) {
        u.position = {pos(rng), pos(rng), 0};
        u.tx_power = pw(rng);
    }
    for (auto& n : uavs) n.position = {pos(rng), pos(rng), 100};
    const auto a = associate(users, uavs, p);
    for (std::size_t i = 0; i < users.size(); ++i) {
        for (std::size_t n = 0; n < uavs.size(); ++n) {
            CHECK(latency::snr(users[i], uavs[static_cast<std::size_t>(a[i])], p) >= latency::snr(users[i], uavs[n], p));
        }
    }
}

TEST_CASE("follower utility") {
    CHECK(follower_utility(0, 3, 2, 1) == 0.0);
    CHECK(follower_utility(1, 1, std::numbers::e - 1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(follower_utility(2.5, 1.7, 4.0, 0.3) == doctest::Approx(1.7 * std::log(11.0) - 0.75).epsilon(1e-14));
}

TEST_CASE("follower best response") {
    CHECK(follower_best_response(2, 1, 1, 0, 100) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(follower_best_response(1, 1, 2, 0.3, 100) == 0.3);
    CHECK(follower_best_response(100, 1, 1, 0, 5) == 5.0);
    try {
        follower_best_response(2, 1, 1, 6, 5);
        FAIL("expected InfeasibleAllocation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InfeasibleAllocation);
    }
    CHECK_THROWS_AS(follower_best_response(2, 1, 0, 0, 5), Error);
    CHECK_THROWS_AS(follower_best_response(2, 0, 1, 0, 5), Error);
}

TEST_CASE("follower best response against a fine grid") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> urg(1.0, 5.0), eff(0.5, 12.0), price(0.1, 5.0), kmin(0.0, 2.0),
        cap(2.0, 20.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double t = urg(rng), h = eff(rng), p = price(rng), lo = kmin(rng), hi = cap(rng);
        const double k = follower_best_response(t, h, p, lo, hi);
        const auto f = [&](double x) { return follower_utility(x, t, h, p); };
        // Concave in kappa: a 1e-3 grid, then 1e-6 around its best node.
        const auto coarse = kernels::grid_argmax_serial(f, lo, hi, static_cast<std::size_t>((hi - lo) / 1e-3) + 1);
        const double a = std::max(lo, coarse.x - 2e-3), z = std::min(hi, coarse.x + 2e-3);
        const auto g = kernels::grid_argmax_serial(f, a, z, static_cast<std::size_t>((z - a) / 1e-6) + 1);
        CHECK(f(k) >= g.value - 1e-12);
        CHECK(std::abs(k - g.x) <= 2e-6);
    }
}

TEST_CASE("price bounds") {
    const std::vector<FollowerView> one{follower(2, 1, 1)};
    CHECK(price_bounds(one, 100).upper == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<FollowerView> pair{follower(2, 2), follower(2, 2)};
    CHECK(price_bounds(pair, 3).lower == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<FollowerView> mixed{follower(3, 2, 0.5), follower(1.5, 8, 0.2)};
    const auto b = price_bounds(mixed, 20);
    CHECK(b.upper == doctest::Approx(std::min(3 / (0.5 + 0.5), 1.5 / (0.2 + 0.125))).epsilon(1e-15));
    for (const auto& f : mixed) {
        CHECK(f.urgency / b.upper - 1 / f.spectral_eff >= f.kappa_min - 1e-12);
    }

    try {
        price_bounds(std::vector<FollowerView>{follower(1, 1, 5)}, 0.1);
        FAIL("expected EmptyFeasibleRegion");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyFeasibleRegion);
    }
    CHECK_THROWS_AS(price_bounds(std::span<const FollowerView>{}, 1), Error);
}

TEST_CASE("optimal price") {
    const auto d = optimal_price(1, 4, 1, {0.1, 10});
    CHECK(d.price == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(d.label == PriceCase::Interior);
    const auto capped = optimal_price(1, 4, 1, {0.1, 1.5});
    CHECK(capped.price == 1.5);
    CHECK(capped.label == PriceCase::StabilityCapped);
    const auto floored = optimal_price(1, 4, 1, {3, 5});
    CHECK(floored.price == 3);
    CHECK(floored.label == PriceCase::CapacityFloored);
    CHECK_THROWS_AS(optimal_price(1, 0, 1, {0.1, 1}), Error);
    CHECK_THROWS_AS(optimal_price(1, 1, 1, {2, 1}), Error);
}

TEST_CASE("optimal price against a grid") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(0.05, 1.0), theta(1.0, 20.0), inv(0.1, 3.0), lo(0.05, 1.0), w(0.01, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double cost = c(rng), th = theta(rng), h = inv(rng);
        PriceBounds b{lo(rng), 0};
        b.upper = b.lower + w(rng);
        const auto d = optimal_price(cost, th, h, b);
        const auto f = [&](double p) { return reduced_leader_utility(p, cost, th, h); };
        const auto points = static_cast<std::size_t>((b.upper - b.lower) / 1e-4) + 1;
        const auto g = kernels::grid_argmax(f, b.lower, b.upper, points);
        CHECK(f(d.price) >= g.value - 1e-12);
        CHECK(std::abs(d.price - g.x) <= 1e-4);
    }
}

TEST_CASE("leader utility") {
    const std::vector<double> demands{1, 2, 2};
    CHECK(leader_utility(0.3, 0.3, demands) == 0.0);
    CHECK(leader_utility(1.5, 0.5, demands) == 5.0);

    // Substituting the follower responses gives the reduced objective.
    const std::vector<FollowerView> fs{follower(3, 2), follower(2, 5), follower(4, 1.5)};
    const double price = 0.7;
    const auto r = respond(fs, 100, price);
    CHECK(leader_utility(price, 0.2, r.demand) ==
          doctest::Approx(reduced_leader_utility(price, 0.2, 9, 0.5 + 0.2 + 1 / 1.5)).epsilon(1e-13));
}

TEST_CASE("respond serves users in order") {
    const std::vector<FollowerView> fs{follower(4, 1, 0.5), follower(4, 1, 2.0)};
    const auto r = respond(fs, 3.5, 1.0);
    CHECK(r.demand[0] == 3.0);
    CHECK(r.demand[1] == 0.5);
    CHECK(r.shortfall);
    const auto ok = respond(fs, 100, 1.0);
    CHECK_FALSE(ok.shortfall);
    CHECK(ok.total == 6.0);
}

TEST_CASE("single pair equilibrium by hand") {
    // theta = 2, H = 1, c = 0.5, capacity 10, no floor:
    // price = sqrt(0.5 * 2 / 1) = 1, demand = 2/1 - 1 = 1, leader utility 0.5.
    GameInstance g;
    g.leaders = {{0.5, 10}};
    g.followers = {follower(2, 1)};
    const auto eq = solve_equilibrium(g);
    CHECK(eq.uavs[0].decision.price == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eq.uavs[0].decision.label == PriceCase::Interior);
    CHECK(eq.demand[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eq.uavs[0].utility == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eq.follower_utility[0] == doctest::Approx(2 * std::log(2.0) - 1).epsilon(1e-14));
    CHECK(eq.violations(g).empty());
}

TEST_CASE("capacity floored equilibrium uses the whole capacity") {
    GameInstance g;
    g.leaders = {{1.0, 0.5}};
    g.followers = {follower(1, 10, 0.01), follower(1.2, 8, 0.02), follower(0.9, 12, 0.0)};
    const auto eq = solve_equilibrium(g);
    CHECK(eq.uavs[0].decision.label == PriceCase::CapacityFloored);
    CHECK(eq.uavs[0].total_demand == doctest::Approx(0.5).epsilon(1e-12));
    const double lower = eq.uavs[0].aggregates.bounds.lower;
    double sum = 0;
    for (const auto& f : g.followers) sum += f.urgency / lower - 1 / f.spectral_eff;
    CHECK(std::abs(sum - 0.5) <= 1e-9 * 0.5);
    CHECK(eq.violations(g).empty());
}

TEST_CASE("idle and infeasible UAVs") {
    GameInstance g;
    g.leaders = {{0.2, 10}, {0.2, 10}};
    g.followers = {follower(2, 3)};
    const auto eq = solve_equilibrium(g);
    CHECK(eq.uavs[1].decision.label == PriceCase::Idle);
    CHECK(eq.uavs[1].utility == 0.0);

    g.followers.push_back(follower(1, 1, 50, 1));
    try {
        solve_equilibrium(g);
        FAIL("expected ScenarioInfeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ScenarioInfeasible);
        CHECK(std::string(e.what()).find("uav 1") != std::string::npos);
    }
}

TEST_CASE("random equilibria satisfy every constraint and admit no deviation") {
    std::mt19937_64 rng(6);
    int solved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto g = random_instance(rng, 3, 9);
        Equilibrium eq;
        try {
            eq = solve_equilibrium(g);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ScenarioInfeasible);
            continue;
        }
        ++solved;
        CHECK(eq.violations(g).empty());
        for (const auto& u : eq.uavs) {
            if (u.decision.label == PriceCase::Idle) continue;
            CHECK(u.decision.price > 0);
            const auto idx = g.users_of(u.uav);
            std::vector<FollowerView> served;
            for (int i : idx) served.push_back(g.followers[static_cast<std::size_t>(i)]);
            const auto& b = u.aggregates.bounds;
            const double cost = g.leaders[static_cast<std::size_t>(u.uav)].unit_cost;
            const double cap = g.leaders[static_cast<std::size_t>(u.uav)].capacity;

            // Leader: followers react to each candidate price.
            const auto leader = [&](double p) { return leader_utility(p, cost, respond(served, cap, p).demand); };
            CHECK(kernels::max_gain_serial(leader, u.utility, b.lower, b.upper, 1000) <= 1e-8);

            // Followers: hold the price and the others' demands fixed.
            double used = 0;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                const auto& f = served[j];
                const auto i = static_cast<std::size_t>(idx[j]);
                const double room = cap - used;
                const auto util = [&](double k) { return follower_utility(k, f.urgency, f.spectral_eff, u.decision.price); };
                CHECK(kernels::max_gain_serial(util, eq.follower_utility[i], f.kappa_min, room, 1000) <= 1e-8);
                CHECK(eq.demand[i] >= f.kappa_min);
                used += eq.demand[i];
            }
        }
    }
    CHECK(solved >= 30);
}

TEST_CASE("scaling urgency and cost scales the price only") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = random_instance(rng, 2, 6);
        for (auto& f : g.followers) f.kappa_min = 0;
        for (auto& l : g.leaders) l.capacity = 1e6;
        const auto base = solve_equilibrium(g);
        const double s = 0.5 + 3.0 * trial / 20;
        for (auto& f : g.followers) f.urgency *= s;
        for (auto& l : g.leaders) l.unit_cost *= s;
        const auto scaled = solve_equilibrium(g);
        for (std::size_t n = 0; n < base.uavs.size(); ++n) {
            if (base.uavs[n].decision.label == PriceCase::Idle) continue;
            CHECK(scaled.uavs[n].decision.unconstrained ==
                  doctest::Approx(s * base.uavs[n].decision.unconstrained).epsilon(1e-10));
        }
        for (std::size_t i = 0; i < base.demand.size(); ++i) {
            CHECK(std::abs(scaled.demand[i] - base.demand[i]) <= 1e-10 * std::max(1.0, base.demand[i]));
        }
    }
}

TEST_CASE("violations catches tampering") {
    GameInstance g;
    g.leaders = {{0.5, 10}};
    g.followers = {follower(2, 1, 0.5)};
    auto eq = solve_equilibrium(g);
    CHECK(eq.violations(g).empty());
    eq.demand[0] = 0.1;
    CHECK(eq.violations(g).size() == 1);
    eq.uavs[0].total_demand = 11;
    eq.uavs[0].decision.price = 100;
    CHECK(eq.violations(g).size() == 3);
}

}  // TEST_SUITE
