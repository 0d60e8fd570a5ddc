#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference
// (`*_serial`) that tests compare against and an OpenMP version that the
// library uses. The parallel versions partition independent outputs; grid
// searches match the reference exactly, the floating-point kernels match to
// rounding (blocked products, blocked sums). Callables must be thread-safe.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>

namespace lae::kernels {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Activation { Tanh, Identity };

/// out = act(W * X + b) .* mask, column per sample. An empty mask means all ones.
void dense_forward_serial(const Mat& W, const Vec& b, const Vec& mask, Activation act, const Mat& X, Mat& out);
void dense_forward(const Mat& W, const Vec& b, const Vec& mask, Activation act, const Mat& X, Mat& out);

struct GridArgmax {
    std::size_t index = 0;
    double x = 0;
    double value = 0;
};

/// Maximises f over `points` evenly spaced nodes of [lo, hi] (lowest index wins ties).
GridArgmax grid_argmax_serial(const std::function<double(double)>& f, double lo, double hi, std::size_t points);
GridArgmax grid_argmax(const std::function<double(double)>& f, double lo, double hi, std::size_t points);

/// Max over the grid of (f(x) - reference); used for unilateral-deviation checks.
double max_gain_serial(const std::function<double(double)>& f, double reference, double lo, double hi,
                       std::size_t points);
double max_gain(const std::function<double(double)>& f, double reference, double lo, double hi,
                std::size_t points);

/// Composite Simpson rule for vector-valued integrands, `intervals` even.
Mat simpson_serial(const std::function<Mat(double)>& f, double lo, double hi, std::size_t intervals);
Mat simpson(const std::function<Mat(double)>& f, double lo, double hi, std::size_t intervals);

int max_threads();

}  // namespace lae::kernels
