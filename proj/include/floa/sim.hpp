#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floa/attack.hpp"
#include "floa/bounds.hpp"
#include "floa/config.hpp"
#include "floa/data.hpp"
#include "floa/model.hpp"

namespace floa {

struct RoundRecord {
    std::size_t t = 0;
    double train_loss = 0.0;   // mean per-worker minibatch loss at w_{t-1}
    double test_acc = 0.0;     // refreshed every eval_stride rounds
    double grad_norm_sq = 0.0; // squared norm of the mean local gradient
    double eps_t = 0.0;
    double gbar_t = 0.0;
    bool aborted = false;
    double rms_dev = 0.0; // RMS deviation of local gradients from their mean
};

struct SeedResult {
    std::uint64_t seed = 0;
    std::vector<RoundRecord> records;
    double alpha = 0.0;
    double initial_loss = 0.0;
    double final_accuracy = 0.0;
    double final_loss = 0.0;
    double best_accuracy = 0.0;
    double min_train_loss = 0.0;
    bool aborted = false;
    std::size_t abort_round = 0;
    std::string abort_reason;
    DispersionEstimate dispersion;
};

// Everything a round needs, resolved once per seed.
struct SimContext {
    const SimConfig* config = nullptr;
    const Dataset* data = nullptr;
    RngStreams streams;
    ChannelProfile profile;
    AttackerSet attackers;
    std::vector<std::vector<std::size_t>> shards; // indices into data->train
    double b0 = 0.0;                              // channel-inversion target
    double alpha = 0.0;
    std::size_t dim = 0;
};

struct SimState {
    ModelParams w;
    std::size_t t = 0; // completed rounds
};

SimContext make_context(const SimConfig& config, const Dataset& data, std::uint64_t seed);

// Learning rate after applying the configured mapping; adjusted/scaled forms
// use the policy's benign constants unless use_attacked_constants is set.
double resolve_alpha(const SimConfig& config, const AttackerSet& attackers);

// Bound constants matching the configured channel profile, with the selected
// attackers listed last.
BoundParams bound_params_for(const SimConfig& config, const AttackerSet& attackers,
                             std::size_t attacker_count);

// Executes one communication round and advances the state. A degenerate
// standardization scale or a non-finite update marks the record aborted and
// leaves the model untouched.
RoundRecord run_round(SimState& state, const SimContext& ctx);

SeedResult run_seed(const SimConfig& config, const Dataset& data, std::uint64_t seed);

std::vector<SeedResult> run_experiment(const SimConfig& config, const Dataset& data);

Dataset load_dataset(const SimConfig& config);

// CSV with fixed columns seed,t,policy,N,train_loss,test_acc,grad_norm_sq,
// eps_t,gbar_t,aborted.
void write_round_csv(const std::string& path, const SimConfig& config, const SeedResult& result);

// Aggregate summary (per-seed metrics, seed mean/std, convergence verdict).
std::string summary_json(const SimConfig& config, const std::vector<SeedResult>& results);

} // namespace floa
