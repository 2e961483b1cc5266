#include "floa/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace floa::ref {

namespace {

// probability of each class for one sample, neuron by neuron
Vec class_probs(const ModelParams& w, const Vec& x) {
    const std::size_t in = w.arch.input_dim;
    const std::size_t hid = w.arch.hidden_dim;
    const std::size_t out = w.arch.output_dim;
    const std::size_t w1_off = 0;
    const std::size_t b1_off = in * hid;
    const std::size_t w2_off = b1_off + hid;
    const std::size_t b2_off = w2_off + hid * out;

    Vec hidden(hid);
    for (std::size_t h = 0; h < hid; ++h) {
        double acc = w.values[b1_off + h];
        for (std::size_t k = 0; k < in; ++k) acc += w.values[w1_off + h * in + k] * x[k];
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }
    Vec logits(out);
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < out; ++o) {
        double acc = w.values[b2_off + o];
        for (std::size_t h = 0; h < hid; ++h) acc += w.values[w2_off + o * hid + h] * hidden[h];
        logits[o] = acc;
        if (acc > zmax) zmax = acc;
    }
    double denom = 0.0;
    for (std::size_t o = 0; o < out; ++o) denom += std::exp(logits[o] - zmax);
    Vec probs(out);
    for (std::size_t o = 0; o < out; ++o) probs[o] = std::exp(logits[o] - zmax) / denom;
    return probs;
}

} // namespace

double forward_loss(const ModelParams& w, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("ref::forward_loss: empty batch");
    double total = 0.0;
    for (const auto& s : batch) {
        const Vec probs = class_probs(w, s.features);
        total += -std::log(probs[s.label]);
    }
    return total / static_cast<double>(batch.size());
}

std::pair<double, double> local_stats(const Vec& g) {
    double mean = 0.0;
    for (double x : g) mean += x;
    mean /= static_cast<double>(g.size());
    double var = 0.0;
    for (double x : g) var += (x - mean) * (x - mean);
    var /= static_cast<double>(g.size());
    return {mean, var};
}

Vec superpose(std::span<const Transmission> transmissions, const ChannelRound& channel) {
    Vec y = channel.noise;
    for (std::size_t d = 0; d < y.size(); ++d)
        for (const auto& tx : transmissions)
            y[d] += tx.amplitude * channel.magnitudes[tx.worker] * tx.payload[d];
    return y;
}

EvalResult evaluate(const ModelParams& w, std::span<const Sample> testset) {
    if (testset.empty()) throw std::invalid_argument("ref::evaluate: empty test set");
    double total = 0.0;
    std::size_t hits = 0;
    for (const auto& s : testset) {
        const Vec probs = class_probs(w, s.features);
        total += -std::log(probs[s.label]);
        std::size_t top = 0;
        for (std::size_t o = 1; o < probs.size(); ++o)
            if (probs[o] > probs[top]) top = o;
        if (top == s.label) ++hits;
    }
    EvalResult r;
    r.accuracy = static_cast<double>(hits) / static_cast<double>(testset.size());
    r.loss = total / static_cast<double>(testset.size());
    return r;
}

} // namespace floa::ref
