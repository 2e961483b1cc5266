#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "floa/bounds.hpp"
#include "floa/data.hpp"

using namespace floa;

namespace {

// naive per-worker summation oracle for the signal/energy constants
double omega_ci_loop(const BoundParams& p) {
    double acc = double(p.honest) * p.b0;
    for (std::size_t n = p.honest; n < p.total(); ++n)
        acc -= std::sqrt(std::numbers::pi * p.sigmas[n] * p.sigmas[n] * p.p_max[n] /
                         (2.0 * double(p.dim)));
    return acc;
}

double omega_big_ci_loop(const BoundParams& p) {
    double tail = 0.0;
    for (std::size_t n = p.honest; n < p.total(); ++n)
        tail += 2.0 * p.sigmas[n] * p.sigmas[n] * p.p_max[n] / double(p.dim);
    return double(p.total() + p.byzantine) * (double(p.total()) * p.b0 * p.b0 + tail);
}

double omega_bev_loop(const BoundParams& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.total(); ++i) {
        const double term = std::sqrt(p.p_max[i] * std::numbers::pi / (2.0 * double(p.dim))) *
                            p.sigmas[i];
        acc += i < p.honest ? term : -term;
    }
    return acc;
}

double omega_big_bev_loop(const BoundParams& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.total(); ++i)
        acc += 2.0 * p.sigmas[i] * p.sigmas[i] * p.p_max[i] / double(p.dim);
    return double(p.total() + p.byzantine) * acc;
}

} // namespace

TEST_CASE("channel-inversion signal constant") {
    SUBCASE("no attackers leaves M * b0") {
        BoundParams p = BoundParams::isomorphic(8, 0, 1.0, 64.0, 64);
        CHECK(omega_ci(p) == doctest::Approx(8.0 * p.b0).epsilon(1e-15));
    }
    SUBCASE("isomorphic closed form agrees with the general sum") {
        for (std::size_t u : {2ul, 5ul, 10ul, 25ul}) {
            for (std::size_t n = 0; n <= u; ++n) {
                const double sigma = 1.0, p_max = 128.0;
                const std::size_t dim = 32;
                BoundParams p = BoundParams::isomorphic(u, n, sigma, p_max, dim);
                const double closed =
                    (double(u - n) / std::sqrt(double(u)) -
                     std::sqrt(double(n) * double(n) * std::numbers::pi / 4.0)) *
                    std::sqrt(2.0 * p_max * sigma * sigma / double(dim));
                CHECK(omega_ci(p) == doctest::Approx(closed).epsilon(1e-12));
            }
        }
    }
    SUBCASE("heterogeneous case matches the loop oracle") {
        BoundParams p;
        p.sigmas = {1.0, 0.5, 2.0, 1.5, 0.8};
        p.p_max = {40.0, 30.0, 50.0, 45.0, 20.0};
        p.honest = 3;
        p.byzantine = 2;
        p.dim = 25;
        p.b0 = 0.31;
        CHECK(omega_ci(p) == doctest::Approx(omega_ci_loop(p)).epsilon(1e-14));
        CHECK(omega_big_ci(p) == doctest::Approx(omega_big_ci_loop(p)).epsilon(1e-14));
    }
}

TEST_CASE("channel-inversion energy constant") {
    BoundParams p0 = BoundParams::isomorphic(10, 0, 1.0, 100.0, 100);
    CHECK(omega_big_ci(p0) == doctest::Approx(100.0 * p0.b0 * p0.b0).epsilon(1e-12));
    SUBCASE("monotone in attacker channel strength and power") {
        BoundParams p = BoundParams::isomorphic(10, 2, 1.0, 100.0, 100);
        const double base = omega_big_ci(p);
        BoundParams stronger = p;
        stronger.sigmas.back() = 2.0;
        CHECK(omega_big_ci(stronger) > base);
        BoundParams pushier = p;
        pushier.p_max.back() = 200.0;
        CHECK(omega_big_ci(pushier) > base);
    }
}

TEST_CASE("best-effort signal constant") {
    SUBCASE("balanced cohorts cancel") {
        BoundParams p = BoundParams::isomorphic(8, 4, 1.2, 80.0, 40);
        CHECK(omega_bev(p) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("swapping cohorts flips the sign") {
        BoundParams p;
        p.sigmas = {1.0, 0.5, 2.0, 1.5};
        p.p_max = {40.0, 30.0, 50.0, 45.0};
        p.honest = 3;
        p.byzantine = 1;
        p.dim = 20;
        BoundParams q = p;
        q.sigmas = {1.5, 1.0, 0.5, 2.0}; // attacker cohort first now honest
        q.p_max = {45.0, 40.0, 30.0, 50.0};
        q.honest = 1;
        q.byzantine = 3;
        CHECK(omega_bev(q) == doctest::Approx(-omega_bev(p)).epsilon(1e-12));
    }
    SUBCASE("isomorphic N=4 against the loop oracle") {
        BoundParams p = BoundParams::isomorphic(10, 4, 1.0, 200.0, 50);
        const double closed = 2.0 * std::sqrt(200.0 * std::numbers::pi / (2.0 * 50.0));
        CHECK(omega_bev(p) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(omega_bev(p) == doctest::Approx(omega_bev_loop(p)).epsilon(1e-14));
    }
}

TEST_CASE("best-effort energy constant") {
    BoundParams p1 = BoundParams::isomorphic(1, 0, std::sqrt(0.5), 100.0, 100);
    CHECK(omega_big_bev(p1) == doctest::Approx(1.0).epsilon(1e-12));
    SUBCASE("exceeds the channel-inversion constant at the default setup") {
        BoundParams p = BoundParams::isomorphic(10, 2, 1.0, 50890.0, 50890);
        CHECK(omega_big_bev(p) > omega_big_ci(p));
    }
    SUBCASE("scales linearly with U+N") {
        BoundParams p = BoundParams::isomorphic(10, 1, 1.0, 100.0, 100);
        BoundParams q = BoundParams::isomorphic(10, 3, 1.0, 100.0, 100);
        CHECK(omega_big_bev(p) / 11.0 == doctest::Approx(omega_big_bev(q) / 13.0).epsilon(1e-12));
        CHECK(omega_big_bev(q) == doctest::Approx(omega_big_bev_loop(q)).epsilon(1e-14));
    }
}

TEST_CASE("convergence-rate bound") {
    BoundParams p = BoundParams::isomorphic(10, 2, 1.0, 100.0, 100);
    p.lipschitz = 3.0;
    p.delta = 0.4;
    p.eps = 0.6;
    p.noise_std = 0.2;
    const double gap = 1.8;

    SUBCASE("scales exactly as the inverse square root of T") {
        const double r1 = rate_rhs(PolicyKind::channel_inversion, p, 100, 1.0, gap);
        const double r4 = rate_rhs(PolicyKind::channel_inversion, p, 400, 1.0, gap);
        CHECK(r4 == doctest::Approx(r1 / 2.0).epsilon(1e-15));
        const double b1 = rate_rhs(PolicyKind::best_effort_voting, p, 100, 1.0, gap);
        const double b4 = rate_rhs(PolicyKind::best_effort_voting, p, 400, 1.0, gap);
        CHECK(b4 == doctest::Approx(b1 / 2.0).epsilon(1e-15));
    }
    SUBCASE("no attackers reduces to the simplified no-attack form") {
        BoundParams p0 = BoundParams::isomorphic(10, 0, 1.0, 100.0, 100);
        p0.lipschitz = 3.0;
        p0.delta = 0.4;
        p0.eps = 0.6;
        p0.noise_std = 0.2;
        for (std::size_t t : {50ul, 200ul, 1000ul}) {
            for (double ab : {0.3, 1.0, 2.7}) {
                const double general = rate_rhs(PolicyKind::channel_inversion, p0, t, ab, gap);
                const double u2b2 = 100.0 * p0.b0 * p0.b0;
                const double reduced =
                    (2.0 * p0.lipschitz / ab * gap +
                     ab * (p0.delta * p0.delta +
                           p0.eps * p0.eps * p0.noise_std * p0.noise_std / u2b2)) /
                    std::sqrt(double(t));
                CHECK(general == doctest::Approx(reduced).epsilon(1e-12));
            }
        }
    }
    SUBCASE("vanishes when every noise source is zero and the start is optimal") {
        BoundParams clean = BoundParams::isomorphic(10, 0, 1.0, 100.0, 100);
        CHECK(rate_rhs(PolicyKind::channel_inversion, clean, 100, 1.0, 0.0) == 0.0);
    }
    SUBCASE("monotone in T, delta, eps, z") {
        const double base = rate_rhs(PolicyKind::best_effort_voting, p, 100, 1.0, gap);
        CHECK(rate_rhs(PolicyKind::best_effort_voting, p, 101, 1.0, gap) < base);
        BoundParams worse = p;
        worse.delta *= 1.5;
        CHECK(rate_rhs(PolicyKind::best_effort_voting, worse, 100, 1.0, gap) > base);
        worse = p;
        worse.eps *= 1.5;
        CHECK(rate_rhs(PolicyKind::best_effort_voting, worse, 100, 1.0, gap) > base);
        worse = p;
        worse.noise_std *= 1.5;
        CHECK(rate_rhs(PolicyKind::best_effort_voting, worse, 100, 1.0, gap) > base);
    }
    SUBCASE("invalid scaled rates and non-positive omega are rejected") {
        CHECK_THROWS(rate_rhs(PolicyKind::channel_inversion, p, 100, 20.0, gap));
        CHECK_THROWS(rate_rhs(PolicyKind::channel_inversion, p, 100, 0.0, gap));
        BoundParams hopeless = BoundParams::isomorphic(10, 9, 1.0, 100.0, 100);
        CHECK_THROWS_AS(rate_rhs(PolicyKind::channel_inversion, hopeless, 100, 1.0, gap),
                        std::runtime_error);
    }
}

TEST_CASE("learning-rate mappings") {
    const double lipschitz = 2.0, w = 1.5, big = 30.0;
    SUBCASE("inverse of the scaled form") {
        const std::size_t t = 256;
        const double alpha_bar = lipschitz * big * std::sqrt(double(t)) / w;
        CHECK(lr_from_scaled(alpha_bar, lipschitz, w, big, t) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("linear in the input rate") {
        CHECK(lr_from_scaled(2.0, lipschitz, w, big, 100) ==
              doctest::Approx(2.0 * lr_from_scaled(1.0, lipschitz, w, big, 100)).epsilon(1e-15));
        CHECK(lr_from_adjusted(0.2, w, big) ==
              doctest::Approx(2.0 * lr_from_adjusted(0.1, w, big)).epsilon(1e-15));
    }
    SUBCASE("adjusted form") {
        CHECK(lr_from_adjusted(1.0, w, big) == doctest::Approx(w / big).epsilon(1e-15));
    }
    SUBCASE("non-positive omega is rejected") {
        CHECK_THROWS_AS(lr_from_adjusted(1.0, -0.1, big), std::runtime_error);
        CHECK_THROWS_AS(lr_from_scaled(1.0, lipschitz, 0.0, big, 10), std::runtime_error);
    }
}

TEST_CASE("convergence condition") {
    const double lipschitz = 2.0, w = 1.5, big = 30.0;
    const double limit = 2.0 * w / (lipschitz * big);
    CHECK(converges(limit / 2.0, lipschitz, w, big));
    CHECK_FALSE(converges(limit, lipschitz, w, big)); // strict boundary
    CHECK_FALSE(converges(limit * 1.01, lipschitz, w, big));
    CHECK_FALSE(converges(0.5, lipschitz, -1.0, big));
    SUBCASE("monotone: feasible alpha stays feasible when reduced") {
        for (double a = limit * 0.99; a > 1e-8; a *= 0.5) CHECK(converges(a, lipschitz, w, big));
    }
}

TEST_CASE("maximum tolerable attacker count") {
    SUBCASE("best effort tolerates just under half the cohort") {
        BoundParams p = BoundParams::isomorphic(10, 0, 1.0, 100.0, 100);
        CHECK(max_tolerable_n(PolicyKind::best_effort_voting, p) == 4);
        BoundParams tiny = BoundParams::isomorphic(2, 0, 1.0, 100.0, 100);
        CHECK(max_tolerable_n(PolicyKind::best_effort_voting, tiny) == 0);
    }
    SUBCASE("channel-inversion threshold from the sign scan") {
        BoundParams p = BoundParams::isomorphic(10, 0, 1.0, 100.0, 100);
        // omega(2) = 8 b0 - 2 sqrt(pi/2) > 0, omega(3) < 0 at sigma = 1
        CHECK(max_tolerable_n(PolicyKind::channel_inversion, p) == 2);
    }
    SUBCASE("best effort tolerates at least as many attackers as channel inversion") {
        for (std::size_t u = 2; u <= 50; ++u) {
            BoundParams p = BoundParams::isomorphic(u, 0, 1.0, 100.0, 100);
            CHECK(max_tolerable_n(PolicyKind::best_effort_voting, p) >=
                  max_tolerable_n(PolicyKind::channel_inversion, p));
        }
    }
}

TEST_CASE("smoothness estimation") {
    SUBCASE("recovers the curvature of a quadratic exactly") {
        const double c = 2.75;
        auto grad = [&](const ModelParams& w) {
            Vec g(w.values.size());
            for (std::size_t d = 0; d < g.size(); ++d) g[d] = c * w.values[d];
            return g;
        };
        ModelArch arch{2, 2, 2};
        std::vector<ModelParams> probes;
        RngStreams streams{40};
        auto rng = streams.stream(Stream::test);
        for (int i = 0; i < 4; ++i) {
            ModelParams w{arch, Vec(arch.param_count())};
            for (double& x : w.values) x = rng.normal();
            probes.push_back(w);
        }
        CHECK(estimate_lipschitz(grad, probes) == doctest::Approx(c).epsilon(1e-12));
    }
    SUBCASE("never decreases as probes accumulate") {
        ModelArch arch{4, 3, 2};
        SyntheticSpec spec;
        spec.input_dim = 4;
        spec.num_classes = 2;
        spec.train_count = 64;
        spec.seed = 3;
        const Dataset data = make_synthetic(spec);
        auto grad = [&](const ModelParams& w) { return minibatch_gradient(w, data.train); };
        std::vector<ModelParams> probes;
        for (std::uint64_t i = 0; i < 6; ++i) probes.push_back(init_params(arch, RngStreams{i}));
        double prev = 0.0;
        for (std::size_t count = 2; count <= probes.size(); ++count) {
            const double est =
                estimate_lipschitz(grad, std::span(probes.data(), count));
            CHECK(est >= prev);
            prev = est;
        }
    }
    SUBCASE("matches a curvature power-iteration oracle along the top direction") {
        ModelArch arch{4, 3, 2};
        SyntheticSpec spec;
        spec.input_dim = 4;
        spec.num_classes = 2;
        spec.train_count = 64;
        spec.seed = 9;
        const Dataset data = make_synthetic(spec);
        auto grad = [&](const ModelParams& w) { return minibatch_gradient(w, data.train); };
        const ModelParams w0 = init_params(arch, RngStreams{11});

        // power iteration on the Hessian via central-difference products
        Vec v(w0.values.size());
        RngStreams streams{42};
        auto rng = streams.stream(Stream::test);
        for (double& x : v) x = rng.normal();
        double lambda = 0.0;
        const double h = 1e-5;
        for (int it = 0; it < 25; ++it) {
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
            ModelParams wp = w0, wm = w0;
            for (std::size_t d = 0; d < v.size(); ++d) {
                wp.values[d] += h * v[d];
                wm.values[d] -= h * v[d];
            }
            const Vec gp = grad(wp), gm = grad(wm);
            lambda = 0.0;
            for (std::size_t d = 0; d < v.size(); ++d) {
                v[d] = (gp[d] - gm[d]) / (2.0 * h);
                lambda += v[d] * v[d];
            }
            lambda = std::sqrt(lambda);
        }

        // probes straddling w0 along the dominant curvature direction
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        ModelParams wp = w0, wm = w0;
        for (std::size_t d = 0; d < v.size(); ++d) {
            wp.values[d] += 1e-4 * v[d] / norm;
            wm.values[d] -= 1e-4 * v[d] / norm;
        }
        const std::vector<ModelParams> probes{wp, wm};
        CHECK(estimate_lipschitz(grad, probes) == doctest::Approx(lambda).epsilon(0.05));
    }
    SUBCASE("needs at least two probes") {
        auto grad = [](const ModelParams& w) { return w.values; };
        const ModelArch tiny{2, 2, 2};
        std::vector<ModelParams> one{ModelParams{tiny, Vec(tiny.param_count(), 0.0)}};
        CHECK_THROWS_AS(estimate_lipschitz(grad, one), std::invalid_argument);
    }
}

TEST_CASE("dispersion estimation") {
    const std::pair<double, double> rounds1[] = {{0.0, 0.2}, {0.0, 0.5}, {0.0, 0.1}};
    const DispersionEstimate e1 = estimate_delta_eps(rounds1);
    CHECK(e1.delta == 0.0);
    CHECK(e1.eps == 0.5);
    const std::pair<double, double> rounds2[] = {{1.5, 0.2}, {0.7, 0.9}};
    const DispersionEstimate e2 = estimate_delta_eps(rounds2);
    CHECK(e2.delta == 1.5);
    CHECK(e2.eps == 0.9);
    CHECK_THROWS_AS(estimate_delta_eps({}), std::invalid_argument);
}
