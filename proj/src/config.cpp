#include "floa/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <type_traits>

#include <json.hpp>

namespace floa {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("config: " + path + ": " + what);
}

void expect_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) fail(path + "." + key, "unknown key");
}

template <typename T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    const json& node = obj.at(key);
    if constexpr (std::is_unsigned_v<T>) {
        // reject negatives instead of letting them wrap through the cast
        if (node.is_number_integer() && node.get<long long>() < 0)
            fail(path + "." + key, "must be non-negative");
    }
    try {
        return node.get<T>();
    } catch (const json::exception& e) {
        fail(path + "." + key, e.what());
    }
}

Vec vector_or_scalar(const json& node, const std::string& path, std::size_t count) {
    Vec out;
    if (node.is_number()) {
        out.assign(count, node.get<double>());
    } else if (node.is_array()) {
        out = node.get<Vec>();
        if (out.size() != count)
            fail(path, "expected " + std::to_string(count) + " entries, got " +
                           std::to_string(out.size()));
    } else {
        fail(path, "expected a number or an array");
    }
    return out;
}

PolicyKind parse_policy(const std::string& s, const std::string& path) {
    if (s == "ef") return PolicyKind::error_free;
    if (s == "ci") return PolicyKind::channel_inversion;
    if (s == "bev") return PolicyKind::best_effort_voting;
    fail(path, "policy must be one of ef|ci|bev");
}

AttackerSelection parse_selection(const std::string& s, const std::string& path) {
    if (s == "none") return AttackerSelection::none;
    if (s == "weakest_channel") return AttackerSelection::weakest_channel;
    if (s == "strongest_channel") return AttackerSelection::strongest_channel;
    if (s == "random_n") return AttackerSelection::random_n;
    fail(path, "selection must be none|weakest_channel|strongest_channel|random_n");
}

AttackStrategy parse_strategy(const std::string& s, const std::string& path) {
    if (s == "strongest") return AttackStrategy::strongest;
    if (s == "gaussian_noise") return AttackStrategy::gaussian_noise;
    if (s == "constant_vector") return AttackStrategy::constant_vector;
    fail(path, "strategy must be strongest|gaussian_noise|constant_vector");
}

AlphaKind parse_alpha_kind(const std::string& s, const std::string& path) {
    if (s == "raw") return AlphaKind::raw;
    if (s == "adjusted") return AlphaKind::adjusted;
    if (s == "scaled") return AlphaKind::scaled;
    fail(path, "alpha.kind must be raw|adjusted|scaled");
}

} // namespace

const char* to_string(PolicyKind policy) {
    switch (policy) {
    case PolicyKind::error_free: return "ef";
    case PolicyKind::channel_inversion: return "ci";
    case PolicyKind::best_effort_voting: return "bev";
    }
    return "?";
}

const char* to_string(AttackerSelection selection) {
    switch (selection) {
    case AttackerSelection::none: return "none";
    case AttackerSelection::weakest_channel: return "weakest_channel";
    case AttackerSelection::strongest_channel: return "strongest_channel";
    case AttackerSelection::random_n: return "random_n";
    }
    return "?";
}

const char* to_string(AttackStrategy strategy) {
    switch (strategy) {
    case AttackStrategy::strongest: return "strongest";
    case AttackStrategy::gaussian_noise: return "gaussian_noise";
    case AttackStrategy::constant_vector: return "constant_vector";
    }
    return "?";
}

const char* to_string(AlphaKind kind) {
    switch (kind) {
    case AlphaKind::raw: return "raw";
    case AlphaKind::adjusted: return "adjusted";
    case AlphaKind::scaled: return "scaled";
    }
    return "?";
}

void SimConfig::validate() const {
    if (workers == 0) throw std::runtime_error("config: workers must be >= 1");
    if (attacker_count > workers)
        throw std::runtime_error("config: attackers.count (" + std::to_string(attacker_count) +
                                 ") exceeds workers (" + std::to_string(workers) + ")");
    if (rounds == 0) throw std::runtime_error("config: rounds must be >= 1");
    if (batch_size == 0) throw std::runtime_error("config: batch_size must be >= 1");
    if (seeds.empty()) throw std::runtime_error("config: at least one seed required");
    if (sigmas.size() != workers) throw std::runtime_error("config: sigmas length != workers");
    if (p_max.size() != workers) throw std::runtime_error("config: p_max length != workers");
    if (snr_db.has_value() == noise_std.has_value())
        throw std::runtime_error("config: exactly one of channel.snr_db / channel.noise_std");
    if (attacker_count > 0 && selection == AttackerSelection::none)
        throw std::runtime_error("config: attackers.count > 0 requires a selection rule");
    if (eval_stride == 0) throw std::runtime_error("config: eval_stride must be >= 1");
    if (arch.input_dim == 0 || arch.hidden_dim == 0 || arch.output_dim == 0)
        throw std::runtime_error("config: arch dims must be >= 1");
}

std::string SimConfig::dataset_dir() const {
    if (!dataset.mnist_dir.empty()) return dataset.mnist_dir;
    if (const char* env = std::getenv("FLOA_DATA_DIR")) return env;
    return "data/mnist";
}

SimConfig parse_config_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::runtime_error("config: top level must be an object");

    expect_keys(root, "$",
                {"arch", "dataset", "workers", "attackers", "policy", "channel", "p_max", "rounds",
                 "alpha", "batch_size", "seeds", "shard_size", "shared_shard", "eval_stride"});

    SimConfig cfg;
    if (root.contains("arch")) {
        const auto& a = root["arch"];
        expect_keys(a, "$.arch", {"input_dim", "hidden_dim", "output_dim"});
        cfg.arch.input_dim = get_or<std::size_t>(a, "$.arch", "input_dim", 784);
        cfg.arch.hidden_dim = get_or<std::size_t>(a, "$.arch", "hidden_dim", 64);
        cfg.arch.output_dim = get_or<std::size_t>(a, "$.arch", "output_dim", 10);
    }
    cfg.workers = get_or<std::size_t>(root, "$", "workers", 10);

    if (root.contains("dataset")) {
        const auto& d = root["dataset"];
        const std::string kind = get_or<std::string>(d, "$.dataset", "kind", "mnist");
        if (kind == "mnist") {
            expect_keys(d, "$.dataset", {"kind", "path"});
            cfg.dataset.synthetic = false;
            cfg.dataset.mnist_dir = get_or<std::string>(d, "$.dataset", "path", "");
        } else if (kind == "synthetic") {
            expect_keys(d, "$.dataset",
                        {"kind", "train_count", "test_count", "separation", "noise_std", "seed"});
            cfg.dataset.synthetic = true;
            auto& s = cfg.dataset.synth;
            s.input_dim = cfg.arch.input_dim;
            s.num_classes = cfg.arch.output_dim;
            s.train_count = get_or<std::size_t>(d, "$.dataset", "train_count", 512);
            s.test_count = get_or<std::size_t>(d, "$.dataset", "test_count", 128);
            s.separation = get_or<double>(d, "$.dataset", "separation", 3.0);
            s.noise_std = get_or<double>(d, "$.dataset", "noise_std", 1.0);
            s.seed = get_or<std::uint64_t>(d, "$.dataset", "seed", 1);
        } else {
            fail("$.dataset.kind", "must be mnist|synthetic");
        }
    }

    if (root.contains("attackers")) {
        const auto& a = root["attackers"];
        expect_keys(a, "$.attackers", {"count", "selection", "strategy"});
        cfg.attacker_count = get_or<std::size_t>(a, "$.attackers", "count", 0);
        cfg.selection =
            parse_selection(get_or<std::string>(a, "$.attackers", "selection",
                                                cfg.attacker_count > 0 ? "random_n" : "none"),
                            "$.attackers.selection");
        cfg.strategy = parse_strategy(
            get_or<std::string>(a, "$.attackers", "strategy", "strongest"), "$.attackers.strategy");
    }

    if (root.contains("policy")) {
        const auto& p = root["policy"];
        expect_keys(p, "$.policy", {"kind", "ci_truncate"});
        cfg.policy.kind =
            parse_policy(get_or<std::string>(p, "$.policy", "kind", "bev"), "$.policy.kind");
        cfg.policy.ci_truncate = get_or<bool>(p, "$.policy", "ci_truncate", false);
    }

    const double dim = static_cast<double>(cfg.arch.param_count());
    cfg.sigmas.assign(cfg.workers, 1.0);
    cfg.p_max.assign(cfg.workers, dim);
    cfg.snr_db = 10.0;
    if (root.contains("channel")) {
        const auto& c = root["channel"];
        expect_keys(c, "$.channel", {"sigmas", "snr_db", "noise_std"});
        if (c.contains("sigmas"))
            cfg.sigmas = vector_or_scalar(c["sigmas"], "$.channel.sigmas", cfg.workers);
        if (c.contains("noise_std")) {
            cfg.noise_std = c["noise_std"].get<double>();
            cfg.snr_db.reset();
        }
        if (c.contains("snr_db")) {
            if (cfg.noise_std)
                fail("$.channel", "snr_db and noise_std are mutually exclusive");
            cfg.snr_db = c["snr_db"].get<double>();
        }
    }
    if (root.contains("p_max")) cfg.p_max = vector_or_scalar(root["p_max"], "$.p_max", cfg.workers);

    cfg.rounds = get_or<std::size_t>(root, "$", "rounds", 500);
    if (root.contains("alpha")) {
        const auto& a = root["alpha"];
        expect_keys(a, "$.alpha", {"kind", "value", "use_attacked_constants", "lipschitz"});
        cfg.alpha.kind = parse_alpha_kind(get_or<std::string>(a, "$.alpha", "kind", "adjusted"),
                                          "$.alpha.kind");
        cfg.alpha.value = get_or<double>(a, "$.alpha", "value", 0.1);
        cfg.alpha.use_attacked_constants =
            get_or<bool>(a, "$.alpha", "use_attacked_constants", false);
        cfg.alpha.lipschitz = get_or<double>(a, "$.alpha", "lipschitz", 1.0);
        if (!(cfg.alpha.value > 0.0)) fail("$.alpha.value", "must be positive");
    }
    cfg.batch_size = get_or<std::size_t>(root, "$", "batch_size", 1);
    if (root.contains("seeds")) cfg.seeds = root["seeds"].get<std::vector<std::uint64_t>>();
    cfg.shard_size = get_or<std::size_t>(root, "$", "shard_size", 3000);
    cfg.shared_shard = get_or<bool>(root, "$", "shared_shard", false);
    cfg.eval_stride = get_or<std::size_t>(root, "$", "eval_stride", 1);

    cfg.validate();
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

std::string serialize_config(const SimConfig& cfg) {
    json root;
    root["arch"] = {{"input_dim", cfg.arch.input_dim},
                    {"hidden_dim", cfg.arch.hidden_dim},
                    {"output_dim", cfg.arch.output_dim}};
    if (cfg.dataset.synthetic) {
        root["dataset"] = {{"kind", "synthetic"},
                           {"train_count", cfg.dataset.synth.train_count},
                           {"test_count", cfg.dataset.synth.test_count},
                           {"separation", cfg.dataset.synth.separation},
                           {"noise_std", cfg.dataset.synth.noise_std},
                           {"seed", cfg.dataset.synth.seed}};
    } else {
        root["dataset"] = {{"kind", "mnist"}, {"path", cfg.dataset.mnist_dir}};
    }
    root["workers"] = cfg.workers;
    root["attackers"] = {{"count", cfg.attacker_count},
                         {"selection", to_string(cfg.selection)},
                         {"strategy", to_string(cfg.strategy)}};
    root["policy"] = {{"kind", to_string(cfg.policy.kind)},
                      {"ci_truncate", cfg.policy.ci_truncate}};
    json channel;
    channel["sigmas"] = cfg.sigmas;
    if (cfg.snr_db) channel["snr_db"] = *cfg.snr_db;
    if (cfg.noise_std) channel["noise_std"] = *cfg.noise_std;
    root["channel"] = channel;
    root["p_max"] = cfg.p_max;
    root["rounds"] = cfg.rounds;
    root["alpha"] = {{"kind", to_string(cfg.alpha.kind)},
                     {"value", cfg.alpha.value},
                     {"use_attacked_constants", cfg.alpha.use_attacked_constants},
                     {"lipschitz", cfg.alpha.lipschitz}};
    root["batch_size"] = cfg.batch_size;
    root["seeds"] = cfg.seeds;
    root["shard_size"] = cfg.shard_size;
    root["shared_shard"] = cfg.shared_shard;
    root["eval_stride"] = cfg.eval_stride;
    return root.dump(2);
}

SimConfig scenario_config(const std::string& name) {
    SimConfig cfg; // defaults already match the common setup: U=10, SNR 10 dB
    cfg.sigmas.assign(cfg.workers, 1.0);
    cfg.p_max.assign(cfg.workers, static_cast<double>(cfg.arch.param_count()));
    cfg.snr_db = 10.0;
    cfg.policy.kind = PolicyKind::best_effort_voting;

    if (name == "no-attack") {
        cfg.alpha = {AlphaKind::adjusted, 0.1, false, 1.0};
    } else if (name == "weak-attacker") {
        // path-loss tiers among the honest workers (near / mid / far), the
        // attacker behind the weakest channel of all
        cfg.sigmas = {0.3, 5.0, 5.0, 5.0, 0.8, 0.8, 0.8, 0.5, 0.5, 0.5};
        cfg.attacker_count = 1;
        cfg.selection = AttackerSelection::weakest_channel;
        cfg.alpha = {AlphaKind::adjusted, 1.0, false, 1.0};
        cfg.batch_size = 8;
    } else if (name == "strong-attacker") {
        cfg.sigmas[cfg.workers - 1] = 4.0;
        cfg.attacker_count = 1;
        cfg.selection = AttackerSelection::strongest_channel;
        cfg.alpha = {AlphaKind::adjusted, 1.0, false, 1.0};
        cfg.batch_size = 8;
    } else if (name == "n-sweep") {
        cfg.attacker_count = 2;
        cfg.selection = AttackerSelection::random_n;
        cfg.alpha = {AlphaKind::adjusted, 0.5, false, 1.0};
        cfg.batch_size = 8;
    } else {
        throw std::runtime_error("unknown scenario: " + name +
                                 " (expected no-attack|weak-attacker|strong-attacker|n-sweep)");
    }
    cfg.validate();
    return cfg;
}

std::vector<std::string> scenario_names() {
    return {"no-attack", "weak-attacker", "strong-attacker", "n-sweep"};
}

} // namespace floa
