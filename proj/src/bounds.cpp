#include "floa/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "floa/channel.hpp"

namespace floa {

namespace {

const char* policy_name(PolicyKind policy) {
    switch (policy) {
    case PolicyKind::error_free: return "ef";
    case PolicyKind::channel_inversion: return "ci";
    case PolicyKind::best_effort_voting: return "bev";
    }
    return "?";
}

} // namespace

void BoundParams::validate() const {
    if (sigmas.size() != total() || p_max.size() != total())
        throw std::invalid_argument("bounds: sigma/p_max vectors must have length M+N");
    if (total() == 0) throw std::invalid_argument("bounds: no workers");
    if (dim == 0) throw std::invalid_argument("bounds: dim must be >= 1");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("bounds: L must be positive");
}

BoundParams BoundParams::isomorphic(std::size_t u, std::size_t n, double sigma, double p_max,
                                    std::size_t dim) {
    if (n > u) throw std::invalid_argument("bounds: N exceeds U");
    BoundParams p;
    p.sigmas.assign(u, sigma);
    p.p_max.assign(u, p_max);
    p.honest = u - n;
    p.byzantine = n;
    p.dim = dim;
    ChannelProfile profile{p.sigmas, 0.0};
    p.b0 = ci_b0(profile, p.p_max, dim);
    return p;
}

double omega_ci(const BoundParams& p) {
    p.validate();
    if (!(p.b0 > 0.0)) throw std::invalid_argument("omega_ci: b0 not set");
    double attackers = 0.0;
    for (std::size_t n = p.honest; n < p.total(); ++n)
        attackers += std::sqrt(std::numbers::pi * p.sigmas[n] * p.sigmas[n] * p.p_max[n] /
                               (2.0 * static_cast<double>(p.dim)));
    return static_cast<double>(p.honest) * p.b0 - attackers;
}

double omega_big_ci(const BoundParams& p) {
    p.validate();
    const double u = static_cast<double>(p.total());
    double attackers = 0.0;
    for (std::size_t n = p.honest; n < p.total(); ++n)
        attackers += 2.0 * p.sigmas[n] * p.sigmas[n] * p.p_max[n] / static_cast<double>(p.dim);
    return (u + static_cast<double>(p.byzantine)) * (u * p.b0 * p.b0 + attackers);
}

double omega_bev(const BoundParams& p) {
    p.validate();
    auto term = [&](std::size_t i) {
        return std::sqrt(p.p_max[i] * std::numbers::pi / (2.0 * static_cast<double>(p.dim))) *
               p.sigmas[i];
    };
    double honest = 0.0, attackers = 0.0;
    for (std::size_t m = 0; m < p.honest; ++m) honest += term(m);
    for (std::size_t n = p.honest; n < p.total(); ++n) attackers += term(n);
    return honest - attackers;
}

double omega_big_bev(const BoundParams& p) {
    p.validate();
    double all = 0.0;
    for (std::size_t i = 0; i < p.total(); ++i)
        all += 2.0 * p.sigmas[i] * p.sigmas[i] * p.p_max[i] / static_cast<double>(p.dim);
    return (static_cast<double>(p.total()) + static_cast<double>(p.byzantine)) * all;
}

double omega(PolicyKind policy, const BoundParams& p) {
    switch (policy) {
    case PolicyKind::channel_inversion: return omega_ci(p);
    case PolicyKind::best_effort_voting: return omega_bev(p);
    default: throw std::invalid_argument("omega: no constants for the error-free benchmark");
    }
}

double omega_big(PolicyKind policy, const BoundParams& p) {
    switch (policy) {
    case PolicyKind::channel_inversion: return omega_big_ci(p);
    case PolicyKind::best_effort_voting: return omega_big_bev(p);
    default: throw std::invalid_argument("omega_big: no constants for the error-free benchmark");
    }
}

double rate_rhs(PolicyKind policy, const BoundParams& p, std::size_t rounds, double alpha_bar,
                double f0_minus_fstar) {
    const double sqrt_t = std::sqrt(static_cast<double>(rounds));
    if (!(alpha_bar > 0.0) || !(alpha_bar < 2.0 * sqrt_t))
        throw std::invalid_argument("rate_rhs: need 0 < alpha_bar < 2 sqrt(T)");
    const double w = omega(policy, p);
    if (!(w > 0.0)) throw std::runtime_error("rate_rhs: omega <= 0, no convergence guarantee");
    const double big = omega_big(policy, p);
    const double head = 2.0 * p.lipschitz * big / (w * w * alpha_bar) * f0_minus_fstar;
    const double tail =
        alpha_bar * (p.delta * p.delta +
                     p.eps * p.eps * p.noise_std * p.noise_std / big);
    return (head + tail) / sqrt_t;
}

double lr_from_scaled(double alpha_bar, double lipschitz, double omega_val, double omega_big_val,
                      std::size_t rounds) {
    if (!(omega_val > 0.0)) throw std::runtime_error("lr_from_scaled: omega <= 0");
    return alpha_bar * omega_val /
           (lipschitz * omega_big_val * std::sqrt(static_cast<double>(rounds)));
}

double lr_from_adjusted(double alpha_hat, double omega_val, double omega_big_val) {
    if (!(omega_val > 0.0)) throw std::runtime_error("lr_from_adjusted: omega <= 0");
    return alpha_hat * omega_val / omega_big_val;
}

bool converges(double alpha, double lipschitz, double omega_val, double omega_big_val) {
    if (!(alpha > 0.0)) throw std::invalid_argument("converges: alpha must be positive");
    return alpha * alpha * lipschitz * omega_big_val / 2.0 - alpha * omega_val < 0.0;
}

std::size_t max_tolerable_n(PolicyKind policy, const BoundParams& p) {
    p.validate();
    const std::size_t u = p.total();
    // pessimistic conversion order: strongest sigma*sqrt(p_max) first
    std::vector<std::size_t> order(u);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p.sigmas[a] * std::sqrt(p.p_max[a]) > p.sigmas[b] * std::sqrt(p.p_max[b]);
    });

    std::size_t best = 0;
    for (std::size_t n = 0; n <= u; ++n) {
        BoundParams q = p;
        q.honest = u - n;
        q.byzantine = n;
        // attackers last: place the n converted workers at the tail
        q.sigmas.clear();
        q.p_max.clear();
        for (std::size_t i = n; i < u; ++i) {
            q.sigmas.push_back(p.sigmas[order[i]]);
            q.p_max.push_back(p.p_max[order[i]]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            q.sigmas.push_back(p.sigmas[order[i]]);
            q.p_max.push_back(p.p_max[order[i]]);
        }
        if (omega(policy, q) > 0.0) best = n;
    }
    return best;
}

double estimate_lipschitz(const std::function<Vec(const ModelParams&)>& grad_fn,
                          std::span<const ModelParams> probes) {
    if (probes.size() < 2) throw std::invalid_argument("estimate_lipschitz: need >= 2 probes");
    std::vector<Vec> grads(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) grads[i] = grad_fn(probes[i]);

    double best = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        for (std::size_t j = i + 1; j < probes.size(); ++j) {
            double dw = 0.0, dg = 0.0;
            for (std::size_t d = 0; d < grads[i].size(); ++d) {
                const double a = probes[i].values[d] - probes[j].values[d];
                const double b = grads[i][d] - grads[j][d];
                dw += a * a;
                dg += b * b;
            }
            if (dw <= 0.0) continue; // coincident probes
            best = std::max(best, std::sqrt(dg / dw));
        }
    }
    return best;
}

DispersionEstimate estimate_delta_eps(std::span<const std::pair<double, double>> rounds) {
    if (rounds.empty()) throw std::invalid_argument("estimate_delta_eps: empty trajectory");
    DispersionEstimate est;
    for (const auto& [rms_dev, eps_t] : rounds) {
        est.delta = std::max(est.delta, rms_dev);
        est.eps = std::max(est.eps, eps_t);
    }
    return est;
}

void write_rate_curve_csv(const std::string& path, std::span<const RatePoint> points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "T,policy,N,rhs,omega,omega_big,alpha\n";
    char line[256];
    for (const auto& pt : points) {
        std::snprintf(line, sizeof(line), "%zu,%s,%zu,%.17g,%.17g,%.17g,%.17g\n", pt.rounds,
                      policy_name(pt.policy), pt.byzantine, pt.rhs, pt.omega, pt.omega_big,
                      pt.alpha);
        out << line;
    }
}

} // namespace floa
