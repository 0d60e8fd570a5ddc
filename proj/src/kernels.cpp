#include "lae/kernels.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lae/error.hpp"

namespace lae::kernels {

namespace {

inline double activate(Activation act, double z) { return act == Activation::Tanh ? std::tanh(z) : z; }

void check_dense(const Mat& W, const Vec& b, const Vec& mask, const Mat& X) {
    if (W.rows() != b.size() || W.cols() != X.rows() || (mask.size() != 0 && mask.size() != W.rows())) {
        throw Error(ErrorKind::InvalidArgument, "dense layer dimension mismatch");
    }
}

double grid_node(double lo, double hi, std::size_t i, std::size_t points) {
    if (points == 1) return lo;
    if (i + 1 == points) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void dense_forward_serial(const Mat& W, const Vec& b, const Vec& mask, Activation act, const Mat& X, Mat& out) {
    check_dense(W, b, mask, X);
    out.resize(W.rows(), X.cols());
    for (Eigen::Index s = 0; s < X.cols(); ++s) {
        for (Eigen::Index j = 0; j < W.rows(); ++j) {
            double z = b[j];
            for (Eigen::Index k = 0; k < W.cols(); ++k) z += W(j, k) * X(k, s);
            const double m = mask.size() ? mask[j] : 1.0;
            out(j, s) = activate(act, z) * m;
        }
    }
}

void dense_forward(const Mat& W, const Vec& b, const Vec& mask, Activation act, const Mat& X, Mat& out) {
    check_dense(W, b, mask, X);
    out.resize(W.rows(), X.cols());
    const Eigen::Index samples = X.cols();
    const Eigen::Index block = 16;
    const Eigen::Index blocks = (samples + block - 1) / block;

#pragma omp parallel for schedule(static) if (blocks > 1 && W.size() * samples > 65536)
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
        const Eigen::Index s0 = blk * block;
        const Eigen::Index len = std::min(block, samples - s0);
        auto z = out.middleCols(s0, len);
        z.noalias() = W * X.middleCols(s0, len);
        z.colwise() += b;
        if (act == Activation::Tanh) z = z.array().tanh().matrix();
        if (mask.size()) z.array().colwise() *= mask.array();
    }
}

GridArgmax grid_argmax_serial(const std::function<double(double)>& f, double lo, double hi, std::size_t points) {
    if (points == 0) throw Error(ErrorKind::InvalidArgument, "grid needs at least one point");
    GridArgmax best{0, grid_node(lo, hi, 0, points), f(grid_node(lo, hi, 0, points))};
    for (std::size_t i = 1; i < points; ++i) {
        const double x = grid_node(lo, hi, i, points);
        const double v = f(x);
        if (v > best.value) best = {i, x, v};
    }
    return best;
}

GridArgmax grid_argmax(const std::function<double(double)>& f, double lo, double hi, std::size_t points) {
    if (points == 0) throw Error(ErrorKind::InvalidArgument, "grid needs at least one point");
    const int threads = max_threads();
    std::vector<GridArgmax> local(static_cast<std::size_t>(threads), GridArgmax{points, 0.0, -INFINITY});

#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
#else
        const std::size_t t = 0;
#endif
        auto& mine = local[t];
        // Static schedule: thread t sees a contiguous ascending index range.
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(points); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const double x = grid_node(lo, hi, i, points);
            const double v = f(x);
            if (mine.index == points || v > mine.value) mine = {i, x, v};
        }
    }
    GridArgmax best{points, 0.0, -INFINITY};
    for (const auto& l : local) {
        if (l.index == points) continue;
        if (best.index == points || l.value > best.value || (l.value == best.value && l.index < best.index)) {
            best = l;
        }
    }
    return best;
}

double max_gain_serial(const std::function<double(double)>& f, double reference, double lo, double hi,
                       std::size_t points) {
    return grid_argmax_serial(f, lo, hi, points).value - reference;
}

double max_gain(const std::function<double(double)>& f, double reference, double lo, double hi,
                std::size_t points) {
    return grid_argmax(f, lo, hi, points).value - reference;
}

Mat simpson_serial(const std::function<Mat(double)>& f, double lo, double hi, std::size_t intervals) {
    if (intervals == 0 || intervals % 2 != 0) throw Error(ErrorKind::InvalidArgument, "Simpson needs an even interval count");
    const double h = (hi - lo) / static_cast<double>(intervals);
    Mat acc = f(lo) + f(hi);
    for (std::size_t i = 1; i < intervals; ++i) {
        acc += (i % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
    }
    return acc * (h / 3.0);
}

Mat simpson(const std::function<Mat(double)>& f, double lo, double hi, std::size_t intervals) {
    if (intervals == 0 || intervals % 2 != 0) throw Error(ErrorKind::InvalidArgument, "Simpson needs an even interval count");
    const double h = (hi - lo) / static_cast<double>(intervals);
    const Mat first = f(lo);
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (intervals - 1 + kChunk - 1) / kChunk;
    std::vector<Mat> partial(chunks, Mat::Zero(first.rows(), first.cols()));

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
        const std::size_t begin = 1 + static_cast<std::size_t>(c) * kChunk;
        const std::size_t end = std::min(intervals, begin + kChunk);
        Mat& acc = partial[static_cast<std::size_t>(c)];
        for (std::size_t i = begin; i < end; ++i) {
            acc += (i % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
        }
    }
    Mat acc = first + f(hi);
    for (const auto& p : partial) acc += p;
    return acc * (h / 3.0);
}

}  // namespace lae::kernels
