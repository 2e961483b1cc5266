#pragma once

#include <cstddef>
#include <optional>

#include "floa/channel.hpp"

namespace floa {

enum class PolicyKind {
    error_free,        // ideal aggregation benchmark (h=1, z=0)
    channel_inversion, // p = b0 / |h|
    best_effort_voting // p = sqrt(p_max / D)
};

struct PowerPolicy {
    PolicyKind kind = PolicyKind::best_effort_voting;
    bool ci_truncate = false; // clip channel-inversion power to the per-round cap
};

// Global and per-round standardization factors (mean and variance of the
// gradient entries, averaged over workers).
struct StandardizationFactors {
    double mean = 0.0;     // gbar_t
    double variance = 0.0; // eps_t^2
};

// Static channel-inversion amplitude target:
// b0 = sqrt( min_i(p_i_max / D) * lambda ).
double ci_b0(const ChannelProfile& profile, const Vec& p_max, std::size_t dim);

// b0 / |h|; clipped to sqrt(p_max/D) when truncate is set. Returns nullopt
// for a degenerate zero channel (the round drops that worker).
std::optional<double> ci_power(double b0, double magnitude, double p_max, std::size_t dim,
                               bool truncate);

// sqrt(p_max / D), channel independent.
double bev_power(double p_max, std::size_t dim);

// Power of the strongest attack: the largest amplitude whose expected
// transmit energy meets the Byzantine budget with equality,
// sqrt( p_max / ((gbar^2 + eps^2) * D) ).
double attack_power(double p_max, std::size_t dim, const StandardizationFactors& factors);

} // namespace floa
