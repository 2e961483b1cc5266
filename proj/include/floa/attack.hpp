#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "floa/aggregation.hpp"
#include "floa/channel.hpp"
#include "floa/data.hpp"
#include "floa/model.hpp"
#include "floa/power.hpp"
#include "floa/rng.hpp"

namespace floa {

enum class AttackerSelection { none, weakest_channel, strongest_channel, random_n };

struct AttackerSet {
    std::vector<std::size_t> indices; // sorted, distinct

    bool contains(std::size_t worker) const;
    std::size_t count() const { return indices.size(); }
};

enum class AttackStrategy { strongest, gaussian_noise, constant_vector };

// The strongest attack payload: the negated honestly-computed local gradient,
// transmitted unstandardized at attack_power amplitude.
Vec strongest_attack_payload(const Vec& local_grad);

// weakest/strongest pick the n smallest/largest sigma (ties by lowest index);
// random_n draws without replacement from the attacker-selection stream.
AttackerSet select_attackers(const ChannelProfile& profile, std::size_t n,
                             AttackerSelection selection, const RngStreams& streams);

// Payload and amplitude of one attacker given its honest local gradient and
// the round's standardization factors. Alternative strategies are scaled so
// their expected transmit energy matches the Byzantine budget.
std::pair<Vec, double> attack_transmission(AttackStrategy strategy, const Vec& local_grad,
                                           const StandardizationFactors& factors,
                                           double p_max, std::size_t dim, Xoshiro256& rng);

// --- Monte Carlo verification oracle for the strongest-attack claim ---

// One-step scenario, held fixed while candidate attacks vary. Channels, data
// draws and noise are keyed by (seed, round), so different candidates face
// identical randomness and their effects compare pairwise.
struct AttackOracleScenario {
    ModelParams w;
    std::vector<std::vector<Sample>> worker_data; // one shard per worker
    ChannelProfile profile;
    Vec p_max;
    PowerPolicy policy;
    std::size_t attacker = 0;
    std::vector<Sample> eval_set;
    std::size_t rounds = 1000;
    std::uint64_t seed = 1;
    double alpha = 0.05;
};

// Maps the attacker's honest local gradient and the round factors to the
// transmitted (payload, amplitude).
using CandidateAttack =
    std::function<std::pair<Vec, double>(const Vec& local_grad, const StandardizationFactors&)>;

// Per-round one-step loss changes F(w_after) - F(w) under the candidate.
Vec attack_effect_samples(const AttackOracleScenario& scenario, const CandidateAttack& candidate);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr mean_stderr(const Vec& samples);

} // namespace floa
