#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "floa/data.hpp"
#include "floa/model.hpp"
#include "floa/reference.hpp"

using namespace floa;

namespace {

Dataset toy_data(std::size_t input_dim, std::size_t classes, std::size_t count,
                 std::uint64_t seed = 1) {
    SyntheticSpec spec;
    spec.input_dim = input_dim;
    spec.num_classes = classes;
    spec.train_count = count;
    spec.test_count = count;
    spec.seed = seed;
    return make_synthetic(spec);
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1e-3, std::fabs(a), std::fabs(b)});
}

} // namespace

TEST_CASE("uniform softmax gives ln(num_classes) loss") {
    ModelArch arch{6, 5, 10};
    RngStreams streams{0};
    ModelParams w = init_params(arch, streams);
    // zero the output layer: logits vanish for every input
    const std::size_t w2_off = arch.input_dim * arch.hidden_dim + arch.hidden_dim;
    for (std::size_t i = w2_off; i < w.values.size(); ++i) w.values[i] = 0.0;
    const Dataset data = toy_data(6, 10, 30);
    CHECK(forward_loss(w, data.train) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("certain correct prediction gives zero loss") {
    ModelArch arch{4, 3, 2};
    ModelParams w{arch, Vec(arch.param_count(), 0.0)};
    Sample s{{0.5, -0.25, 1.0, 0.0}, 1};
    // push the true-class bias far up
    w.values[arch.param_count() - 1] = 60.0;
    const Sample batch[] = {s};
    CHECK(forward_loss(w, batch) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(forward_loss(w, batch) >= 0.0);
}

TEST_CASE("vectorized loss matches the scalar reference implementation") {
    ModelArch arch{4, 3, 2};
    RngStreams streams{0};
    const ModelParams w = init_params(arch, streams);
    const Dataset data = toy_data(4, 2, 4);
    const double fast = forward_loss(w, data.train);
    const double slow = ref::forward_loss(w, data.train);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
}

TEST_CASE("loss is monotone in the true-class logit") {
    ModelArch arch{4, 3, 2};
    RngStreams streams{3};
    ModelParams w = init_params(arch, streams);
    const Dataset data = toy_data(4, 2, 1);
    const Sample batch[] = {data.train[0]};
    double prev = std::numeric_limits<double>::infinity();
    for (double bias = -4.0; bias <= 4.0; bias += 0.5) {
        const std::size_t b2_true = arch.param_count() - arch.output_dim + batch[0].label;
        w.values[b2_true] = bias;
        const double loss = forward_loss(w, batch);
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("gradient at a perfectly predicted sample is negligible") {
    ModelArch arch{4, 3, 2};
    ModelParams w{arch, Vec(arch.param_count(), 0.0)};
    w.values[arch.param_count() - 1] = 60.0; // true class fully certain
    Sample s{{0.5, -0.25, 1.0, 0.0}, 1};
    const Vec g = local_gradient(w, s);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    CHECK(std::sqrt(norm) <= 1e-6);
}

TEST_CASE("analytic gradient matches central differences") {
    const Dataset data = toy_data(4, 2, 6, 9);
    for (std::uint64_t trial = 0; trial < 6; ++trial) {
        RngStreams streams{trial};
        const ModelParams w = init_params(ModelArch{4, 3, 2}, streams);
        const Sample& s = data.train[trial];
        const Vec g = local_gradient(w, s);
        const Vec fd = finite_diff_gradient(w, s, 1e-5);
        for (std::size_t d = 0; d < g.size(); ++d) CHECK(rel_err(g[d], fd[d]) <= 1e-5);
    }
}

TEST_CASE("analytic gradient matches central differences on the full-size net") {
    ModelArch arch{784, 64, 10};
    RngStreams streams{0};
    const ModelParams w = init_params(arch, streams);
    const Dataset data = toy_data(784, 10, 1, 4);
    const Vec g = local_gradient(w, data.train[0]);
    const Vec fd = finite_diff_gradient(w, data.train[0], 1e-5);
    double worst = 0.0;
    for (std::size_t d = 0; d < g.size(); ++d) worst = std::max(worst, rel_err(g[d], fd[d]));
    CHECK(worst <= 1e-4);
}

TEST_CASE("finite differences have second-order accuracy") {
    // quadratic hook: f(w) = 0.5 ||w||^2 has exact gradient w
    auto quad_grad = [](const Vec& w, double step) {
        Vec g(w.size());
        for (std::size_t d = 0; d < w.size(); ++d) {
            Vec wp = w, wm = w;
            wp[d] += step;
            wm[d] -= step;
            auto f = [](const Vec& v) {
                double s = 0.0;
                for (double x : v) s += 0.5 * x * x;
                return s;
            };
            g[d] = (f(wp) - f(wm)) / (2.0 * step);
        }
        return g;
    };
    const Vec w{0.4, -1.1, 2.5};
    const Vec g = quad_grad(w, 1e-4);
    for (std::size_t d = 0; d < w.size(); ++d)
        CHECK(g[d] == doctest::Approx(w[d]).epsilon(1e-8));

    // halving the step shrinks the truncation error about 4x on the MLP
    ModelArch arch{4, 3, 2};
    RngStreams streams{2};
    const ModelParams wp = init_params(arch, streams);
    const Dataset data = toy_data(4, 2, 1, 5);
    const Vec exact = local_gradient(wp, data.train[0]);
    auto max_err = [&](double step) {
        const Vec fd = finite_diff_gradient(wp, data.train[0], step);
        double worst = 0.0;
        for (std::size_t d = 0; d < fd.size(); ++d)
            worst = std::max(worst, std::fabs(fd[d] - exact[d]));
        return worst;
    };
    const double e1 = max_err(2e-2);
    const double e2 = max_err(1e-2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.35));
}

TEST_CASE("minibatch gradient") {
    ModelArch arch{4, 3, 2};
    RngStreams streams{1};
    const ModelParams w = init_params(arch, streams);
    const Dataset data = toy_data(4, 2, 8, 2);
    const Sample& s = data.train[0];

    SUBCASE("a batch of one equals the local gradient") {
        const Sample batch[] = {s};
        CHECK(minibatch_gradient(w, batch) == local_gradient(w, s));
    }
    SUBCASE("a duplicated sample equals the single-sample gradient") {
        const Sample batch[] = {s, s};
        const Vec g2 = minibatch_gradient(w, batch);
        const Vec g1 = local_gradient(w, s);
        for (std::size_t d = 0; d < g1.size(); ++d)
            CHECK(g2[d] == doctest::Approx(g1[d]).epsilon(1e-15));
    }
    SUBCASE("empty batch is rejected") {
        CHECK_THROWS_AS(minibatch_gradient(w, {}), std::invalid_argument);
    }
    SUBCASE("matches a plain mean of per-sample gradients") {
        const Vec g = minibatch_gradient(w, data.train);
        Vec mean(g.size(), 0.0);
        for (const auto& sample : data.train) {
            const Vec gi = local_gradient(w, sample);
            for (std::size_t d = 0; d < g.size(); ++d) mean[d] += gi[d];
        }
        for (std::size_t d = 0; d < g.size(); ++d) {
            mean[d] /= static_cast<double>(data.train.size());
            CHECK(g[d] == doctest::Approx(mean[d]).epsilon(1e-12));
        }
    }
}

TEST_CASE("minibatch variance shrinks like 1/K") {
    ModelArch arch{4, 3, 2};
    RngStreams streams{4};
    const ModelParams w = init_params(arch, streams);
    const Dataset data = toy_data(4, 2, 256, 3);

    auto mean_sq_norm_dev = [&](std::size_t batch_size) {
        // variance proxy: squared distance of the batch gradient from the
        // population mean gradient, averaged over draws
        const Vec pop = minibatch_gradient(w, data.train);
        auto rng = streams.stream(Stream::test, batch_size);
        double acc = 0.0;
        const std::size_t draws = 1000;
        for (std::size_t r = 0; r < draws; ++r) {
            std::vector<Sample> batch(batch_size);
            for (auto& s : batch) s = data.train[rng.uniform_below(data.train.size())];
            const Vec g = minibatch_gradient(w, batch);
            double d2 = 0.0;
            for (std::size_t d = 0; d < g.size(); ++d)
                d2 += (g[d] - pop[d]) * (g[d] - pop[d]);
            acc += d2;
        }
        return acc / draws;
    };
    const double v1 = mean_sq_norm_dev(1);
    const double v4 = mean_sq_norm_dev(4);
    CHECK(v1 / v4 == doctest::Approx(4.0).epsilon(0.20));
}

TEST_CASE("model update") {
    ModelArch arch{2, 2, 2};
    ModelParams w{arch, Vec(arch.param_count(), 0.0)};
    Vec v(arch.param_count());
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = 0.1 * static_cast<double>(d) - 0.3;

    SUBCASE("zero gradient leaves the model unchanged") {
        ModelParams w2 = w;
        w2.values.assign(w2.values.size(), 0.5);
        CHECK(model_update(w2, Vec(v.size(), 0.0), 0.7).values == w2.values);
    }
    SUBCASE("unit step from the origin negates the gradient") {
        const ModelParams out = model_update(w, v, 1.0);
        for (std::size_t d = 0; d < v.size(); ++d) CHECK(out.values[d] == -v[d]);
    }
    SUBCASE("two steps compose additively") {
        Vec v2(v.size());
        for (std::size_t d = 0; d < v.size(); ++d) v2[d] = 0.05 * static_cast<double>(d);
        const ModelParams two = model_update(model_update(w, v, 0.3), v2, 0.3);
        Vec sum(v.size());
        for (std::size_t d = 0; d < v.size(); ++d) sum[d] = v[d] + v2[d];
        const ModelParams one = model_update(w, sum, 0.3);
        for (std::size_t d = 0; d < v.size(); ++d)
            CHECK(two.values[d] == doctest::Approx(one.values[d]).epsilon(1e-12));
    }
    SUBCASE("non-finite gradients are rejected") {
        Vec bad = v;
        bad[3] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(model_update(w, bad, 0.1), std::runtime_error);
    }
}

TEST_CASE("evaluate") {
    SUBCASE("an uninformative model scores the base rate on balanced data") {
        ModelArch arch{6, 4, 10};
        ModelParams w{arch, Vec(arch.param_count(), 0.0)};
        const Dataset data = toy_data(6, 10, 200, 6);
        const EvalResult r = evaluate(w, data.test);
        // equal logits resolve to class 0, which holds 1/10 of the samples
        CHECK(r.accuracy == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(r.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    }
    SUBCASE("a memorizing model scores 1.0") {
        ModelArch arch{4, 8, 3};
        RngStreams streams{8};
        ModelParams w = init_params(arch, streams);
        Dataset data = toy_data(4, 3, 9, 7);
        data.test.resize(9);
        for (int step = 0; step < 400; ++step)
            w = model_update(w, minibatch_gradient(w, data.test), 0.5);
        CHECK(evaluate(w, data.test).accuracy == 1.0);
    }
    SUBCASE("matches the scalar reference implementation") {
        ModelArch arch{6, 5, 4};
        RngStreams streams{9};
        const ModelParams w = init_params(arch, streams);
        const Dataset data = toy_data(6, 4, 64, 8);
        const EvalResult fast = evaluate(w, data.test);
        const EvalResult slow = ref::evaluate(w, data.test);
        CHECK(fast.accuracy == slow.accuracy);
        CHECK(fast.loss == doctest::Approx(slow.loss).epsilon(1e-12));
    }
}

TEST_CASE("structural errors") {
    ModelArch arch{4, 3, 2};
    RngStreams streams{1};
    const ModelParams w = init_params(arch, streams);
    Sample bad_dim{{1.0, 2.0}, 0};
    Sample bad_label{{1.0, 2.0, 3.0, 4.0}, 7};
    const Sample b1[] = {bad_dim};
    const Sample b2[] = {bad_label};
    CHECK_THROWS_AS(forward_loss(w, b1), std::invalid_argument);
    CHECK_THROWS_AS(local_gradient(w, bad_label), std::invalid_argument);
    CHECK_THROWS_AS(forward_loss(w, b2), std::invalid_argument);
    CHECK_THROWS_AS(forward_loss(w, {}), std::invalid_argument);
}

TEST_CASE("parameter count matches the layout") {
    ModelArch arch{784, 64, 10};
    CHECK(arch.param_count() == 50890);
    CHECK(ModelArch{4, 3, 2}.param_count() == 23);
}
