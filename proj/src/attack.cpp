#include "floa/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace floa {

bool AttackerSet::contains(std::size_t worker) const {
    return std::binary_search(indices.begin(), indices.end(), worker);
}

Vec strongest_attack_payload(const Vec& local_grad) {
    Vec out(local_grad.size());
    for (std::size_t d = 0; d < local_grad.size(); ++d) out[d] = -local_grad[d];
    return out;
}

AttackerSet select_attackers(const ChannelProfile& profile, std::size_t n,
                             AttackerSelection selection, const RngStreams& streams) {
    const std::size_t u = profile.num_workers();
    if (n > u) throw std::invalid_argument("select_attackers: n exceeds worker count");
    AttackerSet set;
    if (n == 0 || selection == AttackerSelection::none) return set;

    std::vector<std::size_t> order(u);
    std::iota(order.begin(), order.end(), std::size_t{0});
    switch (selection) {
    case AttackerSelection::weakest_channel:
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return profile.sigmas[a] < profile.sigmas[b];
        });
        set.indices.assign(order.begin(), order.begin() + n);
        break;
    case AttackerSelection::strongest_channel:
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return profile.sigmas[a] > profile.sigmas[b];
        });
        set.indices.assign(order.begin(), order.begin() + n);
        break;
    case AttackerSelection::random_n: {
        auto rng = streams.stream(Stream::attacker_select);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + rng.uniform_below(u - i);
            std::swap(order[i], order[j]);
        }
        set.indices.assign(order.begin(), order.begin() + n);
        break;
    }
    case AttackerSelection::none:
        break;
    }
    std::sort(set.indices.begin(), set.indices.end());
    return set;
}

std::pair<Vec, double> attack_transmission(AttackStrategy strategy, const Vec& local_grad,
                                           const StandardizationFactors& factors,
                                           double p_max, std::size_t dim, Xoshiro256& rng) {
    switch (strategy) {
    case AttackStrategy::strongest:
        return {strongest_attack_payload(local_grad), attack_power(p_max, dim, factors)};
    case AttackStrategy::gaussian_noise: {
        // unit-variance symbols, so amplitude sqrt(p_max/D) meets the budget
        Vec payload(dim);
        for (double& x : payload) x = rng.normal();
        return {std::move(payload), std::sqrt(p_max / static_cast<double>(dim))};
    }
    case AttackStrategy::constant_vector: {
        Vec payload(dim, 1.0);
        return {std::move(payload), std::sqrt(p_max / static_cast<double>(dim))};
    }
    }
    throw std::logic_error("attack_transmission: unknown strategy");
}

Vec attack_effect_samples(const AttackOracleScenario& sc, const CandidateAttack& candidate) {
    const std::size_t u = sc.profile.num_workers();
    if (sc.worker_data.size() != u || sc.p_max.size() != u)
        throw std::invalid_argument("attack oracle: per-worker data or p_max length mismatch");
    if (sc.attacker >= u) throw std::invalid_argument("attack oracle: attacker index out of range");
    const std::size_t dim = sc.w.values.size();
    const RngStreams streams{sc.seed};
    const double f_before = forward_loss(sc.w, sc.eval_set);
    const double b0 = sc.policy.kind == PolicyKind::channel_inversion
                          ? ci_b0(sc.profile, sc.p_max, dim)
                          : 0.0;

    Vec deltas(sc.rounds);
    bool failed = false; // exceptions may not cross the parallel region
#pragma omp parallel for schedule(static)
    for (long t = 0; t < static_cast<long>(sc.rounds); ++t) {
        const auto round = static_cast<std::size_t>(t);
        try {
            // honest local gradients at the shared w
            std::vector<Vec> grads(u);
            std::vector<std::pair<double, double>> stats(u);
            for (std::size_t i = 0; i < u; ++i) {
                auto data_rng = streams.stream(Stream::worker_data, i, round);
                const auto& shard = sc.worker_data[i];
                const auto& sample = shard[data_rng.uniform_below(shard.size())];
                grads[i] = local_gradient(sc.w, sample);
                stats[i] = local_stats(grads[i]);
            }
            const StandardizationFactors factors = global_stats(stats);
            const ChannelRound channel = draw_channels(sc.profile, round, dim, streams);

            auto nominal_power = [&](std::size_t i) -> double {
                if (sc.policy.kind == PolicyKind::channel_inversion) {
                    auto p = ci_power(b0, channel.magnitudes[i], sc.p_max[i], dim,
                                      sc.policy.ci_truncate);
                    return p.value_or(0.0);
                }
                return bev_power(sc.p_max[i], dim);
            };

            std::vector<Transmission> txs;
            txs.reserve(u);
            double nominal_sum = 0.0;
            for (std::size_t i = 0; i < u; ++i) {
                const double p_nom = nominal_power(i);
                nominal_sum += p_nom * channel.magnitudes[i];
                if (i == sc.attacker) {
                    auto [payload, amplitude] = candidate(grads[i], factors);
                    txs.push_back({i, amplitude, std::move(payload)});
                } else {
                    txs.push_back({i, p_nom, standardize(grads[i], factors)});
                }
            }
            const Vec received = superpose(txs, channel);
            const Vec estimate = destandardize(received, nominal_sum, factors);
            const ModelParams w_after = model_update(sc.w, estimate, sc.alpha);
            deltas[round] = forward_loss(w_after, sc.eval_set) - f_before;
        } catch (const std::exception&) {
#pragma omp atomic write
            failed = true;
        }
    }
    if (failed) throw std::runtime_error("attack oracle: a round failed (degenerate inputs)");
    return deltas;
}

MeanStderr mean_stderr(const Vec& samples) {
    if (samples.empty()) throw std::invalid_argument("mean_stderr: no samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= std::max(1.0, n - 1.0);
    return {mean, std::sqrt(var / n)};
}

} // namespace floa
