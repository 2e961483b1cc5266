#include "floa/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace floa {

namespace {

std::uint32_t read_u32_be(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace

std::vector<Sample> load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);

    if (read_u32_be(img) != 0x803u)
        throw std::runtime_error("idx: bad image magic in " + images_path);
    const std::uint32_t n_img = read_u32_be(img);
    const std::uint32_t rows = read_u32_be(img);
    const std::uint32_t cols = read_u32_be(img);

    if (read_u32_be(lab) != 0x801u)
        throw std::runtime_error("idx: bad label magic in " + labels_path);
    const std::uint32_t n_lab = read_u32_be(lab);
    if (n_img != n_lab) throw std::runtime_error("idx: image/label count mismatch");

    const std::size_t dim = std::size_t(rows) * cols;
    std::vector<Sample> out(n_img);
    std::vector<unsigned char> pixels(dim);
    for (std::uint32_t i = 0; i < n_img; ++i) {
        img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(dim));
        int label = lab.get();
        if (!img || label == EOF) throw std::runtime_error("idx: truncated data");
        out[i].features.resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            out[i].features[d] = pixels[d] / 255.0;
        out[i].label = static_cast<std::size_t>(label);
    }
    return out;
}

Dataset load_mnist(const std::string& dir) {
    Dataset ds;
    ds.train = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
    ds.test = load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
    if (ds.train.empty() || ds.test.empty()) throw std::runtime_error("mnist: empty dataset");
    ds.input_dim = ds.train[0].features.size();
    std::size_t max_label = 0;
    for (const auto& s : ds.train) max_label = std::max(max_label, s.label);
    ds.num_classes = max_label + 1;
    return ds;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    RngStreams streams{spec.seed};
    auto mean_rng = streams.stream(Stream::test, 0);
    std::vector<Vec> means(spec.num_classes, Vec(spec.input_dim));
    for (auto& mu : means)
        for (double& x : mu) x = spec.separation * mean_rng.normal();

    auto draw = [&](std::size_t count, std::uint64_t tag) {
        auto rng = streams.stream(Stream::test, 1, tag);
        std::vector<Sample> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t c = i % spec.num_classes; // balanced classes
            out[i].label = c;
            out[i].features.resize(spec.input_dim);
            for (std::size_t d = 0; d < spec.input_dim; ++d)
                out[i].features[d] = means[c][d] + spec.noise_std * rng.normal();
        }
        return out;
    };

    Dataset ds;
    ds.train = draw(spec.train_count, 0);
    ds.test = draw(spec.test_count, 1);
    ds.input_dim = spec.input_dim;
    ds.num_classes = spec.num_classes;
    return ds;
}

std::vector<std::size_t> assign_shard(std::size_t pool_size, std::size_t shard_size,
                                      std::size_t worker, bool shared_shard,
                                      const RngStreams& streams) {
    if (shard_size > pool_size)
        throw std::invalid_argument("assign_shard: shard larger than training pool");
    auto rng = streams.stream(Stream::shard, shared_shard ? 0 : worker);
    std::vector<std::size_t> pool(pool_size);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // partial Fisher-Yates: first shard_size entries are a uniform draw
    // without replacement
    for (std::size_t i = 0; i < shard_size; ++i) {
        const std::size_t j = i + rng.uniform_below(pool_size - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(shard_size);
    return pool;
}

} // namespace floa
