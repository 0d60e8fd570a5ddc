#include <doctest.h>

#include <cmath>
#include <random>

#include "lae/control.hpp"
#include "lae/error.hpp"
#include "oracles.hpp"

using namespace lae;
using namespace lae::control;

namespace {

double max_abs(const Mat& A) { return A.cwiseAbs().maxCoeff(); }

SystemModel stable_model(double latency = 0.2) { return stabilize(double_integrator(0.5, 0.95), latency); }

AugmentedState random_state(std::mt19937_64& rng, double scale = 1.0) {
    return {oracle::random_vec(6, rng, scale), oracle::random_vec(3, rng, scale)};
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("matrix exponential special cases") {
    CHECK(max_abs(matrix_exponential(Mat::Zero(4, 4), 1.0) - Mat::Identity(4, 4)) == 0.0);

    const auto di = double_integrator(0.5, 0.95);
    for (double t : {0.0, 0.1, 0.37, 2.5}) {
        CHECK(max_abs(matrix_exponential(di.A, t) - oracle::double_integrator_exp(t)) <= 1e-14);
    }

    Mat d = -Mat::Identity(3, 3);
    CHECK(max_abs(matrix_exponential(d, std::log(2.0)) - 0.5 * Mat::Identity(3, 3)) <= 1e-15);

    Mat rnd = Mat::Random(5, 5);
    CHECK(max_abs(matrix_exponential(rnd, 0.0) - Mat::Identity(5, 5)) == 0.0);
}

TEST_CASE("matrix exponential rejects bad input") {
    CHECK_THROWS_AS(matrix_exponential(Mat::Zero(2, 3), 1.0), Error);
    Mat bad = Mat::Zero(2, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(matrix_exponential(bad, 1.0), Error);
    CHECK_THROWS_AS(matrix_exponential(Mat::Zero(2, 2), -1.0), Error);
}

TEST_CASE("discretize with A = 0 integrates a constant") {
    SystemModel m = double_integrator(0.5, 0.95);
    m.A.setZero();
    const auto d = discretize(m, 0.2);  // exec window 0.3
    CHECK(d.exec_window == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(max_abs(d.psi - Mat::Identity(6, 6)) == 0.0);
    CHECK(max_abs(d.phi0 - 0.3 * m.B) <= 1e-15);
    CHECK(max_abs(d.phi1 - 0.2 * m.B) <= 1e-15);
}

TEST_CASE("discretize at latency = sampling period has an empty execution window") {
    const auto m = double_integrator(0.5, 0.95);
    const auto d = discretize(m, 0.5);
    CHECK(d.exec_window == 0.0);
    CHECK(max_abs(d.phi0) == 0.0);
    CHECK_THROWS_AS(discretize(m, 0.5000001), Error);
    try {
        discretize(m, 0.6);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InfeasibleLatency);
    }
}

TEST_CASE("ZOH integrals agree with Simpson quadrature") {
    const auto m = double_integrator(0.5, 0.95);
    const auto integrand = [&](double t) -> Mat { return oracle::double_integrator_exp(t) * m.B; };
    for (double ebar : {0.0, 0.1, 0.25, 0.4, 0.5}) {
        const auto d = discretize(m, 0.5 - ebar);
        const Mat phi0 = ebar > 0 ? oracle::simpson(integrand, 0.0, ebar, 10000) : Mat(Mat::Zero(6, 3));
        const Mat phi1 = ebar < 0.5 ? oracle::simpson(integrand, ebar, 0.5, 10000) : Mat(Mat::Zero(6, 3));
        const Mat hold = oracle::simpson(integrand, 0.0, 0.5, 10000);
        CHECK(max_abs(d.phi0 - phi0) <= 1e-8);
        CHECK(max_abs(d.phi1 - phi1) <= 1e-8);
        CHECK(max_abs(d.phi_hold - hold) <= 1e-8);
        CHECK(max_abs(d.phi0 + d.phi1 - hold) <= 1e-8);
    }
}

TEST_CASE("augmented blocks have the exact structure") {
    const auto m = stable_model();
    const auto d = discretize(m, 0.2);
    CHECK(max_abs(d.psi_d.topLeftCorner(6, 6) - d.psi) == 0.0);
    CHECK(max_abs(d.psi_d.topRightCorner(6, 3) - d.phi1) == 0.0);
    CHECK(max_abs(d.psi_d.bottomRows(3)) == 0.0);
    CHECK(max_abs(d.phi_d.topRows(6) - d.phi0) == 0.0);
    CHECK(max_abs(d.phi_d.bottomRows(3) - Mat::Identity(3, 3)) == 0.0);
    CHECK(max_abs(d.psi_h.topRightCorner(6, 3) - d.phi_hold) == 0.0);
    CHECK(max_abs(d.psi_h.bottomLeftCorner(3, 6)) == 0.0);
    CHECK(max_abs(d.psi_h.bottomRightCorner(3, 3) - Mat::Identity(3, 3)) == 0.0);
    CHECK(max_abs(d.psi_cl - (d.psi_d + d.phi_d * m.K)) == 0.0);
    CHECK(max_abs(d.psi_op - d.psi_h) == 0.0);
}

TEST_CASE("step branches") {
    const auto m = stable_model();
    const auto d = discretize(m, 0.2);
    std::mt19937_64 rng(3);
    const Vec zero6 = Vec::Zero(6);

    const AugmentedState zero{Vec::Zero(6), Vec::Zero(3)};
    for (bool delivered : {true, false}) CHECK(step(zero, d, m.K, delivered, zero6).stacked().norm() == 0.0);

    const auto s = random_state(rng);
    const auto open = step(s, d, m.K, false, zero6);
    CHECK(max_abs(open.u_prev - s.u_prev) == 0.0);

    const auto closed = step(s, d, m.K, true, zero6);
    const Vec expect = d.psi_cl * s.stacked();
    CHECK(max_abs(closed.stacked() - expect) <= 1e-12);
    CHECK(max_abs(closed.u_prev - m.K * s.stacked()) <= 1e-12);

    const Vec w = oracle::random_vec(6, rng);
    const auto noisy = step(s, d, m.K, true, w);
    CHECK(max_abs(noisy.x - closed.x - w) <= 1e-12);
    CHECK(max_abs(noisy.u_prev - closed.u_prev) == 0.0);
}

TEST_CASE("step is linear in the state") {
    const auto m = stable_model();
    const auto d = discretize(m, 0.2);
    std::mt19937_64 rng(4);
    const Vec zero6 = Vec::Zero(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s1 = random_state(rng);
        const auto s2 = random_state(rng);
        const double a = 1.7, b = -0.4;
        const auto mix = AugmentedState::from_stacked(a * s1.stacked() + b * s2.stacked(), 6);
        for (bool delivered : {true, false}) {
            const Vec lhs = step(mix, d, m.K, delivered, zero6).stacked();
            const Vec rhs = a * step(s1, d, m.K, delivered, zero6).stacked() + b * step(s2, d, m.K, delivered, zero6).stacked();
            CHECK(max_abs(lhs - rhs) <= 1e-12);
        }
    }
}

TEST_CASE("lyapunov value") {
    std::mt19937_64 rng(5);
    const Mat P = oracle::random_spd(9, rng);
    CHECK(lyapunov_value(Vec(Vec::Zero(9)), P) == 0.0);
    Vec e = Vec::Zero(9);
    e[4] = 1.0;
    CHECK(lyapunov_value(e, Mat::Identity(9, 9)) == 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec z = oracle::random_vec(9, rng);
        double sum = 0.0;
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) sum += z[i] * P(i, j) * z[j];
        CHECK(lyapunov_value(z, P) == doctest::Approx(sum).epsilon(1e-12));
        CHECK(lyapunov_value(z, P) > 0.0);
    }
}

TEST_CASE("success threshold") {
    const auto m = stable_model();
    const auto d = discretize(m, 0.2);

    const auto zero = success_threshold({Vec::Zero(6), Vec::Zero(3)}, d, m);
    CHECK(zero.degenerate);
    CHECK(zero.gamma == 0.0);

    std::mt19937_64 rng(6);
    int interior = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_state(rng, 0.05);
        const auto th = success_threshold(s, d, m);
        REQUIRE_FALSE(th.degenerate);
        CHECK(th.gamma >= 0.0);
        CHECK(th.gamma <= 1.0 - kGammaCeilingGap);
        const auto bv = branch_values(s.stacked(), d, m);
        // Bisection on the two-branch inequality, which is linear in p.
        const auto excess = [&](double p) {
            return p * bv.v_close + (1 - p) * bv.v_open - (m.decay_rate * bv.v_current + bv.trace_pq);
        };
        if (excess(0.0) > 0.0 && excess(1.0) < 0.0) {
            ++interior;
            const double root = oracle::bisect([&](double p) { return -excess(p); }, 0.0, 1.0);
            CHECK(th.gamma == doctest::Approx(root).epsilon(1e-9));
            CHECK(descent_holds(s, d, m, th.gamma));
            CHECK(std::abs(excess(th.gamma)) <= 1e-9 * std::max(1.0, bv.v_open));
        }
    }
    CHECK(interior > 20);
}

TEST_CASE("success threshold is zero when the numerator vanishes") {
    auto m = stable_model();
    const auto d = discretize(m, 0.2);
    std::mt19937_64 rng(11);
    const auto s = random_state(rng);
    const auto bv = branch_values(s.stacked(), d, m);
    // Choose the noise so that V_open = rho V + Tr(PQ).
    const double target = (bv.v_open - m.decay_rate * bv.v_current) / bv.trace_pq;
    m.Q *= target;
    const auto th = success_threshold(s, d, m);
    CHECK(std::abs(th.raw) <= 1e-9);
    CHECK(th.gamma <= 1e-9);
}

TEST_CASE("success threshold is invariant to scaling P") {
    auto m = stable_model();
    const auto d = discretize(m, 0.2);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_state(rng, 0.05);
        const auto base = success_threshold(s, d, m);
        auto scaled = m;
        scaled.P *= 37.5;
        CHECK(std::abs(success_threshold(s, d, scaled).gamma - base.gamma) <= 1e-10);
    }
}

TEST_CASE("descent condition") {
    const auto m = stable_model();
    const auto d = discretize(m, 0.2);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_state(rng);
        CHECK(descent_holds(s, d, m, 1.0));
    }

    // Expansive open loop, no noise: losing every packet cannot contract.
    auto grow = m;
    grow.Q.setZero();
    auto dg = d;
    dg.psi_op = 1.5 * Mat::Identity(9, 9);
    const auto s = random_state(rng);
    CHECK_FALSE(descent_holds(s, dg, grow, 0.0));
}

TEST_CASE("designed gain stabilises") {
    // Three integrators with full actuation.
    SystemModel m;
    m.A = Mat::Zero(3, 3);
    m.B = Mat::Identity(3, 3);
    m.Q = 1e-4 * Mat::Identity(3, 3);
    m.sampling_period = 0.5;
    m.decay_rate = 0.95;
    const auto d = discretize(m, 0.1);
    const Mat K = design_gain(m, d);
    Discretization dk = d;
    attach_gain(dk, K);
    CHECK(oracle::gelfand_radius(dk.psi_cl) < 1.0);
    CHECK(spectral_radius(dk.psi_cl) == doctest::Approx(oracle::spectral_radius(dk.psi_cl)).epsilon(1e-12));

    for (double latency : {0.0, 0.1, 0.2, 0.3, 0.45}) {
        const auto dm = stable_model(latency);
        const auto dd = discretize(dm, latency);
        CHECK(oracle::spectral_radius(dd.psi_cl) < 1.0);
        CHECK(oracle::gelfand_radius(dd.psi_cl) < 1.0);
        Eigen::LLT<Mat> llt(dm.P);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("zero input matrix is unstabilizable") {
    auto m = double_integrator(0.5, 0.95);
    m.B.setZero();
    const auto d = discretize(m, 0.2);
    try {
        design_gain(m, d);
        FAIL("expected Unstabilizable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Unstabilizable);
    }
}

TEST_CASE("lyapunov weight solves its equation") {
    const auto m = stable_model();
    const auto d = discretize(m, 0.2);
    const Mat residual = d.psi_cl.transpose() * m.P * d.psi_cl - m.decay_rate * m.P + Mat::Identity(9, 9);
    CHECK(max_abs(residual) <= 1e-8 * max_abs(m.P));
    CHECK(max_abs(m.P - m.P.transpose()) == 0.0);
}

TEST_CASE("model validation") {
    auto m = stable_model();
    CHECK_NOTHROW(m.validate());
    auto bad = m;
    bad.decay_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.Q(0, 0) = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.P = -bad.P;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.sampling_period = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
