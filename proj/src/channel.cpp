#include "floa/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace floa {

void validate(const ChannelProfile& profile) {
    if (profile.sigmas.empty())
        throw std::invalid_argument("channel: at least one worker required");
    for (double s : profile.sigmas)
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("channel: sigma must be positive and finite");
    if (!(profile.noise_std >= 0.0) || !std::isfinite(profile.noise_std))
        throw std::invalid_argument("channel: noise std must be non-negative and finite");
}

ChannelRound draw_channels(const ChannelProfile& profile, std::size_t round,
                           std::size_t dim, const RngStreams& streams) {
    ChannelRound out;
    out.magnitudes.resize(profile.num_workers());
    for (std::size_t i = 0; i < profile.num_workers(); ++i) {
        auto rng = streams.stream(Stream::channel, i, round);
        const auto quad = rng.normal_pair(); // in-phase and quadrature parts
        const double a = profile.sigmas[i] * quad[0];
        const double b = profile.sigmas[i] * quad[1];
        out.magnitudes[i] = std::sqrt(a * a + b * b);
    }
    out.noise.assign(dim, 0.0);
    if (profile.noise_std > 0.0) {
        auto rng = streams.stream(Stream::noise, 0, round);
        for (std::size_t d = 0; d < dim; ++d)
            out.noise[d] = profile.noise_std * rng.normal();
    }
    return out;
}

double expected_min_gain(const ChannelProfile& profile) {
    validate(profile);
    double rate_sum = 0.0;
    for (double s : profile.sigmas) rate_sum += 1.0 / (2.0 * s * s);
    return 1.0 / rate_sum;
}

double snr_to_noise_std(double p_max, std::size_t dim, double snr_db) {
    if (!(p_max > 0.0)) throw std::invalid_argument("snr_to_noise_std: p_max must be positive");
    if (dim == 0) throw std::invalid_argument("snr_to_noise_std: dim must be >= 1");
    const double snr_linear = std::pow(10.0, snr_db / 10.0);
    return std::sqrt(p_max / (static_cast<double>(dim) * snr_linear));
}

} // namespace floa
