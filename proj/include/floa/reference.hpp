#pragma once

#include <span>
#include <utility>

#include "floa/aggregation.hpp"
#include "floa/channel.hpp"
#include "floa/model.hpp"

// Serial reference implementations, written independently of the main
// kernels (scalar loops, naive summation, no shared helpers). They are the
// comparison baseline for the unit tests and the benchmark.
namespace floa::ref {

// Neuron-by-neuron forward pass and mean cross-entropy.
double forward_loss(const ModelParams& w, std::span<const Sample> batch);

// Naive two-pass mean/population-variance.
std::pair<double, double> local_stats(const Vec& g);

// Coordinate-major double loop over transmissions.
Vec superpose(std::span<const Transmission> transmissions, const ChannelRound& channel);

// Serial top-1 accuracy and mean loss.
EvalResult evaluate(const ModelParams& w, std::span<const Sample> testset);

} // namespace floa::ref
