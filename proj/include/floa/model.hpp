#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "floa/rng.hpp"

namespace floa {

using Vec = std::vector<double>;

// Fully-connected net: input -> hidden (ReLU) -> output (softmax).
struct ModelArch {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t output_dim = 0;

    std::size_t param_count() const {
        return input_dim * hidden_dim + hidden_dim + hidden_dim * output_dim + output_dim;
    }
    bool operator==(const ModelArch&) const = default;
};

// Flat parameter vector, layout [W1 | b1 | W2 | b2] with W1 row-major by
// hidden unit and W2 row-major by output unit.
struct ModelParams {
    ModelArch arch;
    Vec values;
};

struct Sample {
    Vec features;
    std::size_t label = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

// Glorot-uniform weights, zero biases, drawn from the init stream.
ModelParams init_params(const ModelArch& arch, const RngStreams& streams);

// Mean cross-entropy over the batch.
double forward_loss(const ModelParams& w, std::span<const Sample> batch);

// Analytic gradient of the per-sample cross-entropy (ReLU subgradient at 0 is 0).
Vec local_gradient(const ModelParams& w, const Sample& sample);

// Compensated mean of per-sample gradients.
Vec minibatch_gradient(const ModelParams& w, std::span<const Sample> batch);

// w - alpha * g. Throws on non-finite gradient entries.
ModelParams model_update(const ModelParams& w, const Vec& g, double alpha);

// Central-difference oracle for local_gradient.
Vec finite_diff_gradient(const ModelParams& w, const Sample& sample, double step);

// Top-1 accuracy and mean loss over a test set.
EvalResult evaluate(const ModelParams& w, std::span<const Sample> testset);

void check_sample(const ModelArch& arch, const Sample& sample);

} // namespace floa
