#include "floa/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "floa/kahan.hpp"

namespace floa {

namespace {

struct ParamView {
    const double* w1; // hidden x input
    const double* b1; // hidden
    const double* w2; // output x hidden
    const double* b2; // output
};

ParamView view(const ModelParams& w) {
    const auto& a = w.arch;
    const double* p = w.values.data();
    ParamView v{};
    v.w1 = p;
    v.b1 = p + a.input_dim * a.hidden_dim;
    v.w2 = v.b1 + a.hidden_dim;
    v.b2 = v.w2 + a.hidden_dim * a.output_dim;
    return v;
}

void check_params(const ModelParams& w) {
    if (w.values.size() != w.arch.param_count())
        throw std::invalid_argument("model parameter vector has wrong length");
}

// z1, a1, logits for one sample
void forward_raw(const ModelParams& w, const Vec& x, Vec& z1, Vec& a1, Vec& logits) {
    const auto& a = w.arch;
    const ParamView v = view(w);
    z1.resize(a.hidden_dim);
    a1.resize(a.hidden_dim);
    logits.resize(a.output_dim);
    for (std::size_t h = 0; h < a.hidden_dim; ++h) {
        double s = v.b1[h];
        const double* row = v.w1 + h * a.input_dim;
        for (std::size_t k = 0; k < a.input_dim; ++k) s += row[k] * x[k];
        z1[h] = s;
        a1[h] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t o = 0; o < a.output_dim; ++o) {
        double s = v.b2[o];
        const double* row = v.w2 + o * a.hidden_dim;
        for (std::size_t h = 0; h < a.hidden_dim; ++h) s += row[h] * a1[h];
        logits[o] = s;
    }
}

// stable -log softmax(logits)[label]; optionally emits the probabilities
double cross_entropy(const Vec& logits, std::size_t label, Vec* probs) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double lse = zmax + std::log(sum);
    if (probs) {
        probs->resize(logits.size());
        for (std::size_t o = 0; o < logits.size(); ++o)
            (*probs)[o] = std::exp(logits[o] - lse);
    }
    return lse - logits[label];
}

} // namespace

void check_sample(const ModelArch& arch, const Sample& sample) {
    if (sample.features.size() != arch.input_dim)
        throw std::invalid_argument("sample feature dimension does not match model input");
    if (sample.label >= arch.output_dim)
        throw std::invalid_argument("sample label out of range");
}

ModelParams init_params(const ModelArch& arch, const RngStreams& streams) {
    ModelParams w{arch, Vec(arch.param_count(), 0.0)};
    auto rng = streams.stream(Stream::init);
    auto glorot = [&](double* dst, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < count; ++i)
            dst[i] = bound * (2.0 * rng.uniform() - 1.0);
    };
    double* p = w.values.data();
    glorot(p, arch.input_dim * arch.hidden_dim, arch.input_dim, arch.hidden_dim);
    p += arch.input_dim * arch.hidden_dim + arch.hidden_dim; // biases stay zero
    glorot(p, arch.hidden_dim * arch.output_dim, arch.hidden_dim, arch.output_dim);
    return w;
}

double forward_loss(const ModelParams& w, std::span<const Sample> batch) {
    check_params(w);
    if (batch.empty()) throw std::invalid_argument("forward_loss: empty batch");
    for (const auto& s : batch) check_sample(w.arch, s); // throw before the parallel region
    Vec losses(batch.size());
#pragma omp parallel
    {
        Vec z1, a1, logits;
#pragma omp for schedule(static)
        for (long i = 0; i < static_cast<long>(batch.size()); ++i) {
            forward_raw(w, batch[i].features, z1, a1, logits);
            losses[i] = cross_entropy(logits, batch[i].label, nullptr);
        }
    }
    return kahan_total(losses) / static_cast<double>(batch.size());
}

Vec local_gradient(const ModelParams& w, const Sample& sample) {
    check_params(w);
    check_sample(w.arch, sample);
    const auto& a = w.arch;
    const ParamView v = view(w);

    Vec z1, a1, logits, probs;
    forward_raw(w, sample.features, z1, a1, logits);
    cross_entropy(logits, sample.label, &probs);

    Vec grad(w.values.size(), 0.0);
    double* gw1 = grad.data();
    double* gb1 = gw1 + a.input_dim * a.hidden_dim;
    double* gw2 = gb1 + a.hidden_dim;
    double* gb2 = gw2 + a.hidden_dim * a.output_dim;

    // dL/dlogits = p - onehot(y)
    Vec dz2 = probs;
    dz2[sample.label] -= 1.0;

    for (std::size_t o = 0; o < a.output_dim; ++o) {
        double* row = gw2 + o * a.hidden_dim;
        for (std::size_t h = 0; h < a.hidden_dim; ++h) row[h] = dz2[o] * a1[h];
        gb2[o] = dz2[o];
    }
    for (std::size_t h = 0; h < a.hidden_dim; ++h) {
        double s = 0.0;
        for (std::size_t o = 0; o < a.output_dim; ++o) s += v.w2[o * a.hidden_dim + h] * dz2[o];
        const double dz1 = z1[h] > 0.0 ? s : 0.0;
        double* row = gw1 + h * a.input_dim;
        for (std::size_t k = 0; k < a.input_dim; ++k) row[k] = dz1 * sample.features[k];
        gb1[h] = dz1;
    }
    return grad;
}

Vec minibatch_gradient(const ModelParams& w, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("minibatch_gradient: empty batch");
    if (batch.size() == 1) return local_gradient(w, batch[0]);
    check_params(w);
    for (const auto& s : batch) check_sample(w.arch, s);

    // fixed-size chunks keep the reduction grouping independent of the
    // thread count, so the result is reproducible under any parallelism
    constexpr std::size_t chunk = 8;
    const std::size_t nchunks = (batch.size() + chunk - 1) / chunk;
    std::vector<Vec> partial(nchunks);
#pragma omp parallel for schedule(static)
    for (long c = 0; c < static_cast<long>(nchunks); ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * chunk;
        const std::size_t hi = std::min(lo + chunk, batch.size());
        KahanVectorSum acc(w.values.size());
        for (std::size_t i = lo; i < hi; ++i) acc.add(local_gradient(w, batch[i]));
        partial[c] = acc.take();
    }
    KahanVectorSum acc(w.values.size());
    for (const auto& g : partial) acc.add(g);
    Vec mean = acc.take();
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& x : mean) x *= inv;
    return mean;
}

ModelParams model_update(const ModelParams& w, const Vec& g, double alpha) {
    check_params(w);
    if (g.size() != w.values.size())
        throw std::invalid_argument("model_update: gradient length mismatch");
    if (!(alpha > 0.0)) throw std::invalid_argument("model_update: alpha must be positive");
    ModelParams out{w.arch, Vec(w.values.size())};
    for (std::size_t d = 0; d < g.size(); ++d) {
        if (!std::isfinite(g[d]))
            throw std::runtime_error("model_update: non-finite gradient entry");
        out.values[d] = w.values[d] - alpha * g[d];
    }
    return out;
}

Vec finite_diff_gradient(const ModelParams& w, const Sample& sample, double step) {
    check_params(w);
    check_sample(w.arch, sample);
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradient: step must be positive");
    const std::size_t dim = w.values.size();
    Vec grad(dim);
    const Sample* one = &sample;
#pragma omp parallel
    {
        ModelParams probe = w;
        Vec z1, a1, logits;
#pragma omp for schedule(static)
        for (long d = 0; d < static_cast<long>(dim); ++d) {
            const double orig = probe.values[d];
            probe.values[d] = orig + step;
            forward_raw(probe, one->features, z1, a1, logits);
            const double lp = cross_entropy(logits, one->label, nullptr);
            probe.values[d] = orig - step;
            forward_raw(probe, one->features, z1, a1, logits);
            const double lm = cross_entropy(logits, one->label, nullptr);
            probe.values[d] = orig;
            grad[d] = (lp - lm) / (2.0 * step);
        }
    }
    return grad;
}

EvalResult evaluate(const ModelParams& w, std::span<const Sample> testset) {
    check_params(w);
    if (testset.empty()) throw std::invalid_argument("evaluate: empty test set");
    for (const auto& s : testset) check_sample(w.arch, s);
    Vec losses(testset.size());
    std::vector<unsigned char> correct(testset.size(), 0);
#pragma omp parallel
    {
        Vec z1, a1, logits;
#pragma omp for schedule(static)
        for (long i = 0; i < static_cast<long>(testset.size()); ++i) {
            forward_raw(w, testset[i].features, z1, a1, logits);
            losses[i] = cross_entropy(logits, testset[i].label, nullptr);
            const auto top = std::max_element(logits.begin(), logits.end()) - logits.begin();
            correct[i] = static_cast<std::size_t>(top) == testset[i].label ? 1 : 0;
        }
    }
    std::size_t hits = 0;
    for (unsigned char c : correct) hits += c;
    EvalResult r;
    r.accuracy = static_cast<double>(hits) / static_cast<double>(testset.size());
    r.loss = kahan_total(losses) / static_cast<double>(testset.size());
    return r;
}

} // namespace floa
