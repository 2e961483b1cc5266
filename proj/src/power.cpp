#include "floa/power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace floa {

double ci_b0(const ChannelProfile& profile, const Vec& p_max, std::size_t dim) {
    validate(profile);
    if (p_max.size() != profile.num_workers())
        throw std::invalid_argument("ci_b0: p_max length mismatch");
    double p0 = std::numeric_limits<double>::infinity();
    for (double p : p_max) {
        if (!(p > 0.0)) throw std::invalid_argument("ci_b0: p_max must be positive");
        p0 = std::min(p0, p / static_cast<double>(dim));
    }
    return std::sqrt(p0 * expected_min_gain(profile));
}

std::optional<double> ci_power(double b0, double magnitude, double p_max, std::size_t dim,
                               bool truncate) {
    if (!(b0 > 0.0)) throw std::invalid_argument("ci_power: b0 must be positive");
    if (magnitude <= 0.0) return std::nullopt; // degenerate fade, worker drops out
    double p = b0 / magnitude;
    if (truncate) p = std::min(p, std::sqrt(p_max / static_cast<double>(dim)));
    return p;
}

double bev_power(double p_max, std::size_t dim) {
    if (!(p_max > 0.0)) throw std::invalid_argument("bev_power: p_max must be positive");
    return std::sqrt(p_max / static_cast<double>(dim));
}

double attack_power(double p_max, std::size_t dim, const StandardizationFactors& factors) {
    if (!(p_max > 0.0)) throw std::invalid_argument("attack_power: p_max must be positive");
    const double second_moment = factors.mean * factors.mean + factors.variance;
    if (!(second_moment > 0.0))
        throw std::invalid_argument("attack_power: degenerate gradient statistics");
    return std::sqrt(p_max / (second_moment * static_cast<double>(dim)));
}

} // namespace floa
