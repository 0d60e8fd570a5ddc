#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// None of these call into the code they check.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <random>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Composite Simpson over [lo, hi] with `n` (even) intervals, written out
// directly rather than through the kernels library.
inline Mat simpson(const std::function<Mat(double)>& f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    Mat acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return acc * (h / 3.0);
}

// e^{At} for the double integrator [[0, I], [0, 0]] (series stops after two terms).
inline Mat double_integrator_exp(double t, int half = 3) {
    Mat E = Mat::Identity(2 * half, 2 * half);
    E.topRightCorner(half, half) = t * Mat::Identity(half, half);
    return E;
}

// Advantages as the explicit double sum over future TD errors.
inline std::vector<double> gae_brute(const std::vector<double>& r, const std::vector<double>& v,
                                     std::span<const bool> dones, double bootstrap, double gamma, double lambda) {
    const std::size_t T = r.size();
    std::vector<double> delta(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double next = dones[t] ? 0.0 : (t + 1 < T ? v[t + 1] : bootstrap);
        delta[t] = r[t] + gamma * next - v[t];
    }
    // Sum forward from t, stopping after the step that ends the episode.
    std::vector<double> adv(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t l = 0; t + l < T; ++l) {
            adv[t] += std::pow(gamma * lambda, static_cast<double>(l)) * delta[t + l];
            if (dones[t + l]) break;
        }
    }
    return adv;
}

// Bisection for the root of an increasing function on [lo, hi].
inline double bisect(const std::function<double(double)>& g, double lo, double hi, int iterations = 200) {
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Largest eigenvalue magnitude from a full eigen-decomposition.
inline double spectral_radius(const Mat& M) {
    Eigen::EigenSolver<Mat> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Power iteration in Gelfand form, ||M^k||^(1/k). Slow, but needs no
// eigen-decomposition and works for non-normal M.
inline double gelfand_radius(const Mat& M, int k = 2000) {
    Mat P = Mat::Identity(M.rows(), M.cols());
    double log_scale = 0.0;
    for (int i = 0; i < k; ++i) {
        P = P * M;
        const double n = P.norm();
        if (n == 0.0) return 0.0;
        P /= n;
        log_scale += std::log(n);
    }
    return std::exp(log_scale / k);
}

inline Mat random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = z(rng);
    return A * A.transpose() + n * Mat::Identity(n, n);
}

inline Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = z(rng);
    return v;
}

// Max of f over `points` evenly spaced nodes.
struct GridBest {
    double x;
    double value;
};
inline GridBest grid_max(const std::function<double(double)>& f, double lo, double hi, std::size_t points) {
    GridBest best{lo, f(lo)};
    for (std::size_t i = 1; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        const double v = f(x);
        if (v > best.value) best = {x, v};
    }
    return best;
}

}  // namespace oracle
