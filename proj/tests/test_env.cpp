#include <doctest.h>

#include <cmath>

#include "lae/env.hpp"
#include "lae/error.hpp"
#include "lae/kernels.hpp"

using namespace lae;
using namespace lae::env;

namespace {

EnvConfig config() {
    EnvConfig c;
    c.game.leaders = {{0.2, 20.0}, {0.3, 15.0}, {0.25, 10.0}};
    c.game.followers = {{2.0, 6.0, 0.1, 0}, {3.5, 4.0, 0.2, 0}, {1.5, 9.0, 0.05, 1}, {4.0, 3.0, 0.3, 1}};
    c.window_len = 3;
    c.episode_len = 4;
    return c;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset pads with zeros regardless of seed") {
    PricingEnv e(config());
    const auto a = e.reset(1);
    REQUIRE(a.size() == 3);
    for (const auto& o : a) {
        REQUIRE(o.window.size() == 3);
        for (const auto& x : o.window) CHECK((x.price == 0.0 && x.demand == 0.0));
    }
    e.step({1, 1, 1});
    const auto b = e.reset(99);
    CHECK(e.time() == 0);
    for (const auto& o : b) {
        for (const auto& x : o.window) CHECK((x.price == 0.0 && x.demand == 0.0));
    }
}

TEST_CASE("zero margin gives zero reward") {
    auto c = config();
    c.reward_scale = 1.0;
    PricingEnv e(c);
    const auto r = e.step({0.2, 0.3, 0.25});
    for (double x : r.rewards) CHECK(x == 0.0);
    CHECK(r.demands[0] > 0.0);
    CHECK(r.demands[2] == 0.0);  // idle UAV
}

TEST_CASE("prices are clamped before the followers react") {
    PricingEnv e(config());
    const auto r = e.step({12.0, -3.0, 2.0});
    CHECK(r.prices[0] == 5.0);
    CHECK(r.prices[1] == 0.1);
    CHECK(r.rewards[0] == doctest::Approx(e.reward_at(0, 5.0)).epsilon(1e-15));
    CHECK(e.observations()[0].window.back().price == 5.0);
}

TEST_CASE("NaN action is rejected") {
    PricingEnv e(config());
    try {
        e.step({1.0, NAN, 1.0});
        FAIL("expected InvalidAction");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::InvalidAction);
    }
    CHECK_THROWS_AS(e.step({1.0}), Error);
}

TEST_CASE("window is a pure shift") {
    PricingEnv e(config());
    std::vector<Observation> prev = e.observations();
    const std::vector<std::vector<double>> actions{{1, 2, 3}, {1.5, 0.5, 2}, {0.7, 0.9, 1.1}, {2, 2, 2}};
    for (std::size_t t = 0; t < actions.size(); ++t) {
        const auto r = e.step(actions[t]);
        for (std::size_t n = 0; n < 3; ++n) {
            const auto& w = r.observations[n].window;
            for (std::size_t k = 0; k + 1 < w.size(); ++k) {
                CHECK(w[k].price == prev[n].window[k + 1].price);
                CHECK(w[k].demand == prev[n].window[k + 1].demand);
            }
            CHECK(w.back().price == r.prices[n]);
            CHECK(w.back().demand == r.demands[n]);
        }
        CHECK(r.done == (t + 1 == actions.size()));
        prev = r.observations;
    }
}

TEST_CASE("identical runs give identical rewards") {
    for (double noise : {0.0, 0.1}) {
        auto c = config();
        c.demand_noise_std = noise;
        PricingEnv a(c), b(c);
        a.reset(5);
        b.reset(5);
        for (int t = 0; t < 4; ++t) {
            const std::vector<double> act{0.5 + t, 1.0 + 0.3 * t, 2.0};
            const auto ra = a.step(act);
            const auto rb = b.step(act);
            for (int n = 0; n < 3; ++n) CHECK(ra.rewards[n] == rb.rewards[n]);
        }
    }
}

TEST_CASE("demand noise stays within capacity") {
    auto c = config();
    c.demand_noise_std = 0.5;
    c.episode_len = 500;
    PricingEnv e(c);
    for (int t = 0; t < 500; ++t) {
        const auto r = e.step({0.11, 0.11, 1.0});
        CHECK(r.demands[0] <= 20.0);
        CHECK(r.demands[1] <= 15.0);
        CHECK(r.demands[0] >= 0.0);
    }
}

TEST_CASE("equilibrium price earns the best per-step reward") {
    PricingEnv e(config());
    const auto eq = game::solve_equilibrium(config().game);
    const auto best = e.equilibrium_rewards();
    for (int n = 0; n < 2; ++n) {
        const double p = eq.uavs[static_cast<std::size_t>(n)].decision.price;
        CHECK(e.reward_at(n, p) == doctest::Approx(best[static_cast<std::size_t>(n)]).epsilon(1e-12));
        const auto g = kernels::grid_argmax([&](double x) { return e.reward_at(n, x); }, 0.1, 5.0, 20001);
        CHECK(g.value <= best[static_cast<std::size_t>(n)] + 1e-12);
        CHECK(g.value >= best[static_cast<std::size_t>(n)] - 1e-6);
    }
    CHECK(best[2] == 0.0);
}

TEST_CASE("transition log") {
    PricingEnv e(config());
    e.set_logging(true);
    e.step({1, 1, 1});
    e.step({2, 2, 2});
    REQUIRE(e.log().size() == 6);
    CHECK(e.log()[3].t == 1);
    CHECK(e.log()[3].agent == 0);
    CHECK(e.log()[3].price == 2.0);
    e.reset(0);
    CHECK(e.log().empty());
}

TEST_CASE("flatten") {
    Observation o{std::vector<Observation::Entry>(4)};
    for (double x : flatten(o, 5, 20)) CHECK(x == 0.0);
    o.window.back() = {2.5, 10};
    const auto f = flatten(o, 5, 20);
    REQUIRE(f.size() == 8);
    for (std::size_t i = 0; i < 6; ++i) CHECK(f[i] == 0.0);
    CHECK(f[6] == 0.5);
    CHECK(f[7] == 0.5);

    o.window = {{0.3, 1.7}, {4.1, 12.25}, {1.0, 0.0}, {2.5, 10}};
    const auto back = unflatten(flatten(o, 5, 20), 5, 20);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(back.window[k].price == doctest::Approx(o.window[k].price).epsilon(1e-15));
        CHECK(back.window[k].demand == doctest::Approx(o.window[k].demand).epsilon(1e-15));
    }
    CHECK_THROWS_AS(unflatten({1, 2, 3}, 5, 20), Error);
}

TEST_CASE("config validation") {
    auto c = config();
    c.price_floor = 6;
    CHECK_THROWS_AS(PricingEnv{c}, Error);
    c = config();
    c.episode_len = 0;
    CHECK_THROWS_AS(PricingEnv{c}, Error);
    c = config();
    c.window_len = 0;
    CHECK_THROWS_AS(PricingEnv{c}, Error);
}

}  // TEST_SUITE
