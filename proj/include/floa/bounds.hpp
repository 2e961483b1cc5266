#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "floa/model.hpp"
#include "floa/power.hpp"

namespace floa {

// Constant set feeding the convergence-rate calculators. Workers are split
// into M honest and N Byzantine with M + N = U; per-worker vectors list the
// honest workers first and the attackers last.
struct BoundParams {
    double lipschitz = 1.0;     // L
    double delta = 0.0;         // gradient dispersion bound
    double eps = 0.0;           // standardization scale bound
    double noise_std = 0.0;     // z
    Vec sigmas;                 // length U
    Vec p_max;                  // length U
    std::size_t honest = 0;     // M
    std::size_t byzantine = 0;  // N
    std::size_t dim = 1;        // D
    double b0 = 0.0;            // channel-inversion amplitude target

    std::size_t total() const { return honest + byzantine; }
    void validate() const;

    // Isomorphic workers, attacker count n, channel-inversion b0 included.
    static BoundParams isomorphic(std::size_t u, std::size_t n, double sigma, double p_max,
                                  std::size_t dim);
};

// Signal constants (linear terms of the expected one-step improvement).
double omega_ci(const BoundParams& p);
double omega_bev(const BoundParams& p);

// Energy constants (quadratic terms).
double omega_big_ci(const BoundParams& p);
double omega_big_bev(const BoundParams& p);

double omega(PolicyKind policy, const BoundParams& p);
double omega_big(PolicyKind policy, const BoundParams& p);

// Bound on the running mean of squared gradient norms after T rounds at
// scaled learning rate alpha_bar:
//   (1/sqrt(T)) * ( 2 L Omega / (omega^2 alpha_bar) * (F0 - F*)
//                   + alpha_bar * (delta^2 + eps^2 z^2 / Omega) ).
// Requires omega > 0 and 0 < alpha_bar < 2 sqrt(T).
double rate_rhs(PolicyKind policy, const BoundParams& p, std::size_t rounds, double alpha_bar,
                double f0_minus_fstar);

// alpha = alpha_bar * omega / (L * Omega * sqrt(T)).
double lr_from_scaled(double alpha_bar, double lipschitz, double omega_val, double omega_big_val,
                      std::size_t rounds);

// alpha = alpha_hat * omega / Omega (the adjusted-step parameterization).
double lr_from_adjusted(double alpha_hat, double omega_val, double omega_big_val);

// alpha^2 L Omega / 2 - alpha omega < 0, i.e. alpha < 2 omega / (L Omega).
bool converges(double alpha, double lipschitz, double omega_val, double omega_big_val);

// Largest N with omega(policy, N) > 0, found by direct sign scan over
// N = 0..U. Heterogeneous profiles convert the strongest sigma*sqrt(p_max)
// workers first (the pessimistic order).
std::size_t max_tolerable_n(PolicyKind policy, const BoundParams& p);

// Largest ratio ||grad(w1) - grad(w2)|| / ||w1 - w2|| over probe pairs; a
// lower estimate of the smoothness constant.
double estimate_lipschitz(const std::function<Vec(const ModelParams&)>& grad_fn,
                          std::span<const ModelParams> probes);

struct DispersionEstimate {
    double delta = 0.0; // max over rounds of the RMS deviation from the mean gradient
    double eps = 0.0;   // max over rounds of eps_t
};

// Per-round inputs are (rms deviation, eps_t) pairs logged by the harness.
DispersionEstimate estimate_delta_eps(std::span<const std::pair<double, double>> rounds);

struct RatePoint {
    std::size_t rounds = 0;
    PolicyKind policy = PolicyKind::channel_inversion;
    std::size_t byzantine = 0;
    double rhs = 0.0;
    double omega = 0.0;
    double omega_big = 0.0;
    double alpha = 0.0;
};

// CSV export, columns: T,policy,N,rhs,omega,omega_big,alpha
void write_rate_curve_csv(const std::string& path, std::span<const RatePoint> points);

} // namespace floa
