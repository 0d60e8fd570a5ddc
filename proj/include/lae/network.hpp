#pragma once

// Fully connected networks whose hidden neurons can be switched off by binary
// masks. A masked neuron contributes exactly zero downstream, so the network
// behaves like a physically smaller one (see `shrink`).

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "lae/kernels.hpp"

namespace lae::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using kernels::Activation;

struct Layer {
    Mat W;  // out x in
    Vec b;
    Activation act = Activation::Tanh;
    Vec mask;  // out entries in {0,1}; empty for the output head

    Eigen::Index outputs() const { return W.rows(); }
    Eigen::Index inputs() const { return W.cols(); }
};

class MaskedNetwork {
public:
    MaskedNetwork() = default;
    /// Tanh hidden layers of the given widths and a linear head. Weights use
    /// scaled-uniform (Glorot) initialisation; the head is scaled by `head_gain`.
    MaskedNetwork(int inputs, const std::vector<int>& hidden, int outputs, std::mt19937_64& rng,
                  double head_gain = 1.0);

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t hidden_count() const { return layers_.empty() ? 0 : layers_.size() - 1; }

    int inputs() const { return static_cast<int>(layers_.front().inputs()); }
    int outputs() const { return static_cast<int>(layers_.back().outputs()); }

    /// Column per sample.
    Mat forward(const Mat& X) const;

    struct Cache {
        std::vector<Mat> activations;  // activations[0] = input, activations[h+1] = output of layer h
    };
    Mat forward(const Mat& X, Cache& cache) const;

    struct Gradient {
        std::vector<Mat> dW;
        std::vector<Vec> db;

        void set_zero_like(const MaskedNetwork& net);
        Gradient& operator+=(const Gradient& other);
    };

    /// Back-propagates dL/d(output) through the cached pass.
    Gradient backward(const Cache& cache, const Mat& d_output) const;

    /// Zeroes every parameter attached to a masked neuron: its incoming row,
    /// its bias and its outgoing column in the next layer.
    void apply_masks();

    /// Fraction of hidden neurons still active.
    double density() const;
    std::size_t active_neurons() const;
    std::size_t hidden_neurons() const;

    /// Copy with pruned neurons removed and all masks dropped.
    MaskedNetwork shrink() const;

    std::size_t parameter_count() const;

private:
    std::vector<Layer> layers_;
};

}  // namespace lae::nn
