#pragma once

#include <cstddef>
#include <vector>

#include "floa/model.hpp"
#include "floa/rng.hpp"

namespace floa {

// Per-worker Rayleigh scales and receiver noise level. sigma is the standard
// deviation of each quadrature component, so E|h| = sigma*sqrt(pi/2) and
// E|h|^2 = 2*sigma^2.
struct ChannelProfile {
    Vec sigmas;             // one per worker, > 0
    double noise_std = 0.0; // z >= 0

    std::size_t num_workers() const { return sigmas.size(); }
};

struct ChannelRound {
    Vec magnitudes; // |h_i|, one per worker
    Vec noise;      // AWGN, length D
};

void validate(const ChannelProfile& profile);

// Block fading: fresh magnitudes and noise each round, from counter-based
// streams so draws are identical regardless of evaluation order.
ChannelRound draw_channels(const ChannelProfile& profile, std::size_t round,
                           std::size_t dim, const RngStreams& streams);

// lambda = 1 / sum_i lambda_i with lambda_i = 1/(2 sigma_i^2); the mean of
// min_i |h_i|^2 since each |h_i|^2 is exponential.
double expected_min_gain(const ChannelProfile& profile);

// z such that p_max / (D z^2) equals the requested receive SNR.
double snr_to_noise_std(double p_max, std::size_t dim, double snr_db);

} // namespace floa
