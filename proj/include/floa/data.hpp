#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floa/model.hpp"
#include "floa/rng.hpp"

namespace floa {

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
};

// IDX files (magic 0x00000803 images / 0x00000801 labels, big-endian header,
// raw u8 pixels scaled to [0,1]).
std::vector<Sample> load_idx(const std::string& images_path, const std::string& labels_path);

// Loads <dir>/train-images-idx3-ubyte etc.
Dataset load_mnist(const std::string& dir);

struct SyntheticSpec {
    std::size_t input_dim = 8;
    std::size_t num_classes = 3;
    std::size_t train_count = 512;
    std::size_t test_count = 128;
    double separation = 3.0; // distance scale between class means
    double noise_std = 1.0;
    std::uint64_t seed = 1;
};

// Gaussian class blobs; fully determined by its parameters (independent of the
// experiment RNG streams).
Dataset make_synthetic(const SyntheticSpec& spec);

// Local dataset of one worker: shard_size indices into the training pool,
// drawn without replacement from the shard stream. With shared_shard all
// workers receive the worker-0 shard.
std::vector<std::size_t> assign_shard(std::size_t pool_size, std::size_t shard_size,
                                      std::size_t worker, bool shared_shard,
                                      const RngStreams& streams);

} // namespace floa
