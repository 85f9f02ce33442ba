#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nomafl/rng.hpp"

namespace nomafl::fl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Labelled samples; row i of `features` belongs to `labels[i]`.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int classes = 0;

    std::size_t size() const { return labels.size(); }
    int dim() const { return static_cast<int>(features.cols()); }
    bool empty() const { return labels.empty(); }

    Dataset subset(std::span<const std::size_t> rows) const;
    /// Concatenation of several datasets with the same dimension and classes.
    static Dataset concat(std::span<const Dataset> parts);
};

/// One-hidden-layer tanh perceptron with softmax output. hidden == 0 gives
/// multinomial logistic regression.
///
/// Flat parameter layout: W1 (hidden x inputs, row-major), b1, W2
/// (classes x hidden, row-major), b2. Without a hidden layer: W, b.
struct ModelShape {
    int inputs = 0;
    int hidden = 0;
    int classes = 0;

    std::size_t parameter_count() const;
    void validate() const;
};

using Params = std::vector<double>;

Params init_params(const ModelShape& shape, RngStream& rng);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Mean cross-entropy over `batch` and its exact gradient.
LossGradient loss_and_gradient(const ModelShape& shape, std::span<const double> params,
                               const Dataset& batch);

/// Class scores (pre-softmax) for every sample.
Matrix logits(const ModelShape& shape, std::span<const double> params, const Matrix& features);

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t local_batch = 0;  // 0 => full batch
    int local_epochs = 1;

    void validate() const;
};

/// Runs the device's local steps from `params` and returns the effective
/// gradient g with w_local = params - lr * g. With the defaults this is a
/// single full-batch gradient.
std::vector<double> local_update(const ModelShape& shape, std::span<const double> params,
                                 const Dataset& data, const TrainConfig& cfg);

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

Evaluation evaluate(const ModelShape& shape, std::span<const double> params, const Dataset& data);

}  // namespace nomafl::fl
