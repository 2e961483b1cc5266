#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace floa {

// Counter-based stream derivation: every consumer derives its own generator
// from (global_seed, stream tag, worker index, round index), so results never
// depend on evaluation order or thread count.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ seeded via splitmix64, as recommended by its authors.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in (0, 1]: never returns 0 so log() is always safe
    double uniform_pos() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // unbiased integer in [0, bound) via rejection
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Box-Muller pair of independent N(0, 1) draws
    std::array<double, 2> normal_pair() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto pair = normal_pair();
        spare_ = pair[1];
        have_spare_ = true;
        return pair[0];
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Named substreams of the simulation. Tags are part of the derivation hash,
// so adding a stream never perturbs existing ones.
enum class Stream : std::uint64_t {
    init = 1,             // weight initialization
    shard = 2,            // per-worker local dataset assignment
    worker_data = 3,      // per-worker per-round sample selection
    channel = 4,          // per-worker per-round fading magnitudes
    noise = 5,            // per-round receiver AWGN
    attacker_select = 6,  // random attacker-set selection
    attack_payload = 7,   // randomized attacker payloads (gaussian strategy)
    test = 8,             // scratch streams for tests and oracles
};

struct RngStreams {
    std::uint64_t global_seed = 0;

    // Pure function of (seed, tag, a, b); typically a = worker, b = round.
    Xoshiro256 stream(Stream tag, std::uint64_t a = 0, std::uint64_t b = 0) const {
        std::uint64_t h = global_seed;
        splitmix64(h);
        h ^= 0x632be59bd9b4e019ULL * (static_cast<std::uint64_t>(tag) + 1);
        splitmix64(h);
        h ^= 0x9e3779b97f4a7c15ULL * (a + 1);
        splitmix64(h);
        h ^= 0xd1b54a32d192ed03ULL * (b + 1);
        return Xoshiro256(splitmix64(h));
    }
};

} // namespace floa
