#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "floa/channel.hpp"
#include "floa/power.hpp"

namespace floa {

// Smallest standardization scale the receiver accepts; below this the round
// aborts (a gradient that is constant across all coordinates).
inline constexpr double k_eps_min = 1e-12;

struct Transmission {
    std::size_t worker = 0;
    double amplitude = 0.0; // actual transmit amplitude
    Vec payload;            // standardized symbols, or raw attacker symbols
};

// Sample mean and population variance (divide by D) of the gradient entries.
std::pair<double, double> local_stats(const Vec& g);

// Arithmetic means of the per-worker means and variances.
StandardizationFactors global_stats(std::span<const std::pair<double, double>> locals);

// (g - mean)/eps entrywise. Throws when eps_t <= k_eps_min.
Vec standardize(const Vec& g, const StandardizationFactors& factors);

// y = sum_i p_i |h_i| payload_i + z, reduced in worker-index order with
// compensated summation.
Vec superpose(std::span<const Transmission> transmissions, const ChannelRound& channel);

// g_est = eps_t * y + nominal_amplitude_sum * gbar_t * 1, where the scalar is
// the policy-prescribed sum over all U workers (attackers included at their
// nominal power -- that residual is exactly the attacker's bias term).
Vec destandardize(const Vec& received, double nominal_amplitude_sum,
                  const StandardizationFactors& factors);

// Error-free benchmark: plain mean of the local gradients.
Vec error_free_aggregate(std::span<const Vec> gradients);

} // namespace floa
