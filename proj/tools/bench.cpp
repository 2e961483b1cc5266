// Timing comparison of the parallel kernels against their serial reference
// implementations, plus a determinism check across thread counts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "floa/reference.hpp"
#include "floa/sim.hpp"

using namespace floa;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        fn();
        best = std::min(best, seconds_since(start));
    }
    return best;
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace

int main(int argc, char** argv) {
    // synthetic stand-in with MNIST-like dimensions, so the benchmark does
    // not depend on the dataset files
    SyntheticSpec synth;
    synth.input_dim = 784;
    synth.num_classes = 10;
    synth.train_count = 2000;
    synth.test_count = 1000;
    synth.separation = 2.0;
    synth.seed = 3;
    if (argc > 1 && std::string(argv[1]) == "--small") {
        synth.input_dim = 64;
        synth.train_count = 400;
        synth.test_count = 200;
    }
    const Dataset data = make_synthetic(synth);
    const ModelArch arch{synth.input_dim, 64, synth.num_classes};
    const ModelParams w = init_params(arch, RngStreams{5});
    const int hw = max_threads();

    std::printf("arch %zux%zux%zu (D=%zu), %d hardware threads\n", arch.input_dim,
                arch.hidden_dim, arch.output_dim, arch.param_count(), hw);
    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial [ms]", "parallel [ms]", "speedup");

    auto report = [&](const char* name, double serial_s, double parallel_s) {
        std::printf("%-28s %12.2f %12.2f %9.2fx\n", name, serial_s * 1e3, parallel_s * 1e3,
                    serial_s / parallel_s);
    };

    // test-set evaluation: reference loop vs parallel kernel
    {
        EvalResult ref_out{}, par_out{};
        const double t_ref = time_best_of(3, [&] { ref_out = ref::evaluate(w, data.test); });
        set_threads(hw);
        const double t_par = time_best_of(3, [&] { par_out = evaluate(w, data.test); });
        report("evaluate (reference/omp)", t_ref, t_par);
        if (ref_out.accuracy != par_out.accuracy ||
            std::fabs(ref_out.loss - par_out.loss) > 1e-9)
            std::printf("  !! outputs disagree: ref acc %.6f loss %.12f vs %.6f %.12f\n",
                        ref_out.accuracy, ref_out.loss, par_out.accuracy, par_out.loss);
    }

    // minibatch gradient over a large batch: 1 thread vs all threads
    {
        std::span<const Sample> batch(data.train.data(), 256);
        Vec g1, gn;
        set_threads(1);
        const double t1 = time_best_of(3, [&] { g1 = minibatch_gradient(w, batch); });
        set_threads(hw);
        const double tn = time_best_of(3, [&] { gn = minibatch_gradient(w, batch); });
        report("minibatch_gradient (1/all)", t1, tn);
        bool identical = g1.size() == gn.size();
        for (std::size_t d = 0; identical && d < g1.size(); ++d) identical = g1[d] == gn[d];
        std::printf("  bitwise identical across thread counts: %s\n", identical ? "yes" : "NO");
    }

    // finite-difference oracle: 1 thread vs all threads
    {
        Vec g1, gn;
        set_threads(1);
        const double t1 =
            time_best_of(1, [&] { g1 = finite_diff_gradient(w, data.train[0], 1e-5); });
        set_threads(hw);
        const double tn =
            time_best_of(1, [&] { gn = finite_diff_gradient(w, data.train[0], 1e-5); });
        report("finite_diff_gradient (1/all)", t1, tn);
        bool identical = g1.size() == gn.size();
        for (std::size_t d = 0; identical && d < g1.size(); ++d) identical = g1[d] == gn[d];
        std::printf("  bitwise identical across thread counts: %s\n", identical ? "yes" : "NO");
    }

    // one full communication round: 1 thread vs all threads
    {
        SimConfig cfg;
        cfg.arch = arch;
        cfg.dataset.synthetic = true;
        cfg.dataset.synth = synth;
        cfg.workers = 10;
        cfg.sigmas.assign(10, 1.0);
        cfg.p_max.assign(10, double(arch.param_count()));
        cfg.snr_db = 10.0;
        cfg.policy.kind = PolicyKind::best_effort_voting;
        cfg.rounds = 8;
        cfg.shard_size = 200;
        cfg.seeds = {1};
        cfg.eval_stride = 1000; // skip evaluation inside the timed loop
        const SimContext ctx = make_context(cfg, data, 1);

        SimState s1{init_params(arch, ctx.streams), 0};
        set_threads(1);
        const double t1 = time_best_of(1, [&] {
            for (std::size_t t = 0; t < cfg.rounds; ++t) run_round(s1, ctx);
        });
        SimState sn{init_params(arch, ctx.streams), 0};
        set_threads(hw);
        const double tn = time_best_of(1, [&] {
            for (std::size_t t = 0; t < cfg.rounds; ++t) run_round(sn, ctx);
        });
        report("communication round x8 (1/all)", t1, tn);
        bool identical = true;
        for (std::size_t d = 0; identical && d < s1.w.values.size(); ++d)
            identical = s1.w.values[d] == sn.w.values[d];
        std::printf("  bitwise identical across thread counts: %s\n", identical ? "yes" : "NO");
    }
    return 0;
}
