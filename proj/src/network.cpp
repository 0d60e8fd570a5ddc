#include "lae/network.hpp"

#include <cmath>

#include "lae/error.hpp"

namespace lae::nn {

MaskedNetwork::MaskedNetwork(int inputs, const std::vector<int>& hidden, int outputs, std::mt19937_64& rng,
                             double head_gain) {
    int fan_in = inputs;
    auto make = [&](int fan_out, Activation act, double gain) {
        Layer l;
        const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        l.W.resize(fan_out, fan_in);
        for (Eigen::Index j = 0; j < l.W.rows(); ++j)
            for (Eigen::Index k = 0; k < l.W.cols(); ++k) l.W(j, k) = u(rng);
        l.b = Vec::Zero(fan_out);
        l.act = act;
        fan_in = fan_out;
        return l;
    };
    for (int width : hidden) {
        auto l = make(width, Activation::Tanh, 1.0);
        l.mask = Vec::Ones(width);
        layers_.push_back(std::move(l));
    }
    layers_.push_back(make(outputs, Activation::Identity, head_gain));
}

Mat MaskedNetwork::forward(const Mat& X) const {
    Mat cur = X;
    Mat next;
    for (const auto& l : layers_) {
        kernels::dense_forward(l.W, l.b, l.mask, l.act, cur, next);
        cur.swap(next);
    }
    return cur;
}

Mat MaskedNetwork::forward(const Mat& X, Cache& cache) const {
    if (X.rows() != inputs()) throw Error(ErrorKind::InvalidArgument, "network input dimension mismatch");
    cache.activations.resize(layers_.size() + 1);
    cache.activations[0] = X;
    for (std::size_t h = 0; h < layers_.size(); ++h) {
        const auto& l = layers_[h];
        kernels::dense_forward(l.W, l.b, l.mask, l.act, cache.activations[h], cache.activations[h + 1]);
    }
    return cache.activations.back();
}

void MaskedNetwork::Gradient::set_zero_like(const MaskedNetwork& net) {
    dW.clear();
    db.clear();
    for (const auto& l : net.layers()) {
        dW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
        db.push_back(Vec::Zero(l.b.size()));
    }
}

MaskedNetwork::Gradient& MaskedNetwork::Gradient::operator+=(const Gradient& other) {
    for (std::size_t h = 0; h < dW.size(); ++h) {
        dW[h] += other.dW[h];
        db[h] += other.db[h];
    }
    return *this;
}

MaskedNetwork::Gradient MaskedNetwork::backward(const Cache& cache, const Mat& d_output) const {
    Gradient g;
    g.dW.resize(layers_.size());
    g.db.resize(layers_.size());
    Mat delta = d_output;  // dL/d(layer output), out x batch
    for (std::size_t hh = layers_.size(); hh-- > 0;) {
        const auto& l = layers_[hh];
        const Mat& y = cache.activations[hh + 1];
        // y = act(z) .* m; masked units have y = 0 and receive no gradient.
        Mat dz = delta;
        if (l.mask.size()) dz.array().colwise() *= l.mask.array();
        if (l.act == Activation::Tanh) dz.array() *= (1.0 - y.array().square());
        g.dW[hh].noalias() = dz * cache.activations[hh].transpose();
        g.db[hh] = dz.rowwise().sum();
        if (hh > 0) delta.noalias() = l.W.transpose() * dz;
    }
    return g;
}

void MaskedNetwork::apply_masks() {
    for (std::size_t h = 0; h + 1 < layers_.size(); ++h) {
        auto& l = layers_[h];
        auto& next = layers_[h + 1];
        for (Eigen::Index j = 0; j < l.mask.size(); ++j) {
            if (l.mask[j] == 0.0) {
                l.W.row(j).setZero();
                l.b[j] = 0.0;
                next.W.col(j).setZero();
            }
        }
    }
}

std::size_t MaskedNetwork::active_neurons() const {
    std::size_t n = 0;
    for (std::size_t h = 0; h + 1 < layers_.size(); ++h) {
        const auto& l = layers_[h];
        n += static_cast<std::size_t>(l.mask.size() ? l.mask.sum() : static_cast<double>(l.outputs()));
    }
    return n;
}

std::size_t MaskedNetwork::hidden_neurons() const {
    std::size_t n = 0;
    for (std::size_t h = 0; h + 1 < layers_.size(); ++h) n += static_cast<std::size_t>(layers_[h].outputs());
    return n;
}

double MaskedNetwork::density() const {
    const auto total = hidden_neurons();
    return total ? static_cast<double>(active_neurons()) / static_cast<double>(total) : 1.0;
}

MaskedNetwork MaskedNetwork::shrink() const {
    MaskedNetwork out;
    std::vector<Eigen::Index> prev_keep;
    for (Eigen::Index k = 0; k < layers_.front().W.cols(); ++k) prev_keep.push_back(k);
    for (const auto& l : layers_) {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < l.W.rows(); ++j) {
            if (!l.mask.size() || l.mask[j] != 0.0) keep.push_back(j);
        }
        Layer s;
        s.act = l.act;
        s.W.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(prev_keep.size()));
        s.b.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t r = 0; r < keep.size(); ++r) {
            s.b[static_cast<Eigen::Index>(r)] = l.b[keep[r]];
            for (std::size_t c = 0; c < prev_keep.size(); ++c) {
                s.W(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = l.W(keep[r], prev_keep[c]);
            }
        }
        out.layers_.push_back(std::move(s));
        prev_keep = std::move(keep);
    }
    return out;
}

std::size_t MaskedNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

}  // namespace lae::nn
