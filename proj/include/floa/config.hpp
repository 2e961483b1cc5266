#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floa/attack.hpp"
#include "floa/data.hpp"
#include "floa/model.hpp"
#include "floa/power.hpp"

namespace floa {

enum class AlphaKind {
    raw,      // alpha used directly
    adjusted, // alpha = value * omega / Omega
    scaled    // alpha = value * omega / (L * Omega * sqrt(T))
};

struct AlphaSpec {
    AlphaKind kind = AlphaKind::adjusted;
    double value = 0.1;
    // Constants for the adjusted/scaled mappings: the defender sets its rate
    // from the benign (N = 0) constants of its own policy; the attacked
    // variant plugs in the configured attacker set instead.
    bool use_attacked_constants = false;
    double lipschitz = 1.0; // only read by the scaled mapping
};

struct DatasetSpec {
    bool synthetic = false;
    std::string mnist_dir; // empty -> FLOA_DATA_DIR or data/mnist
    SyntheticSpec synth;
};

struct SimConfig {
    ModelArch arch{784, 64, 10};
    DatasetSpec dataset;
    std::size_t workers = 10;       // U
    std::size_t attacker_count = 0; // N
    AttackerSelection selection = AttackerSelection::none;
    AttackStrategy strategy = AttackStrategy::strongest;
    PowerPolicy policy;
    Vec sigmas;                        // length U (scalar configs are expanded)
    Vec p_max;                         // length U; default p_i^max = D
    std::optional<double> snr_db;      // exactly one of snr_db / noise_std
    std::optional<double> noise_std;
    std::size_t rounds = 500;          // T
    AlphaSpec alpha;
    std::size_t batch_size = 1;        // K_b
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t shard_size = 3000;
    bool shared_shard = false;
    std::size_t eval_stride = 1;

    void validate() const;
    std::string dataset_dir() const; // resolved MNIST directory
};

// Strict parser: unknown keys and schema violations are errors that name the
// offending field path.
SimConfig load_config(const std::string& path);
SimConfig parse_config_json(const std::string& text);
std::string serialize_config(const SimConfig& config);

// The four built-in experiment families, reproduced at desk scale.
//   no-attack         U=10 iid channels, N=0
//   weak-attacker     one Byzantine worker behind the weakest channel
//   strong-attacker   one Byzantine worker behind the strongest channel
//   n-sweep           random attacker sets of growing size
SimConfig scenario_config(const std::string& name);
std::vector<std::string> scenario_names();

const char* to_string(PolicyKind policy);
const char* to_string(AttackerSelection selection);
const char* to_string(AttackStrategy strategy);
const char* to_string(AlphaKind kind);

} // namespace floa
