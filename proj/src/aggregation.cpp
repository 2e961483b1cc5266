#include "floa/aggregation.hpp"

#include <cmath>
#include <stdexcept>

#include "floa/kahan.hpp"

namespace floa {

std::pair<double, double> local_stats(const Vec& g) {
    if (g.empty()) throw std::invalid_argument("local_stats: empty gradient");
    const double inv_d = 1.0 / static_cast<double>(g.size());
    KahanSum sum;
    for (double x : g) sum.add(x);
    const double mean = sum.value() * inv_d;
    KahanSum sq;
    for (double x : g) sq.add((x - mean) * (x - mean));
    return {mean, sq.value() * inv_d};
}

StandardizationFactors global_stats(std::span<const std::pair<double, double>> locals) {
    if (locals.empty()) throw std::invalid_argument("global_stats: no workers");
    KahanSum means, vars;
    for (const auto& [m, v] : locals) {
        means.add(m);
        vars.add(v);
    }
    const double inv_u = 1.0 / static_cast<double>(locals.size());
    return {means.value() * inv_u, vars.value() * inv_u};
}

Vec standardize(const Vec& g, const StandardizationFactors& factors) {
    const double eps = std::sqrt(factors.variance);
    if (!(eps > k_eps_min))
        throw std::runtime_error("standardize: degenerate standardization scale");
    Vec out(g.size());
    const double inv_eps = 1.0 / eps;
    for (std::size_t d = 0; d < g.size(); ++d)
        out[d] = (g[d] - factors.mean) * inv_eps;
    return out;
}

Vec superpose(std::span<const Transmission> transmissions, const ChannelRound& channel) {
    const std::size_t dim = channel.noise.size();
    KahanVectorSum acc(dim);
    for (const auto& tx : transmissions) {
        if (tx.payload.size() != dim)
            throw std::invalid_argument("superpose: payload length mismatch");
        if (tx.worker >= channel.magnitudes.size())
            throw std::invalid_argument("superpose: worker index out of range");
        acc.add_scaled(tx.payload, tx.amplitude * channel.magnitudes[tx.worker]);
    }
    acc.add(channel.noise);
    return acc.take();
}

Vec destandardize(const Vec& received, double nominal_amplitude_sum,
                  const StandardizationFactors& factors) {
    const double eps = std::sqrt(factors.variance);
    const double add_back = nominal_amplitude_sum * factors.mean;
    Vec out(received.size());
    for (std::size_t d = 0; d < received.size(); ++d)
        out[d] = eps * received[d] + add_back;
    return out;
}

Vec error_free_aggregate(std::span<const Vec> gradients) {
    if (gradients.empty()) throw std::invalid_argument("error_free_aggregate: no gradients");
    KahanVectorSum acc(gradients[0].size());
    for (const auto& g : gradients) acc.add(g);
    Vec mean = acc.take();
    const double inv = 1.0 / static_cast<double>(gradients.size());
    for (double& x : mean) x *= inv;
    return mean;
}

} // namespace floa
