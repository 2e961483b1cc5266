// Command-line harness: run experiments, evaluate convergence bounds, verify
// the strongest-attack claim, and exercise the built-in self tests.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "floa/reference.hpp"
#include "floa/sim.hpp"

namespace fs = std::filesystem;
using namespace floa;

namespace {

SimConfig load_run_config(const std::string& config_path, const std::string& scenario) {
    if (!scenario.empty()) return scenario_config(scenario);
    return load_config(config_path);
}

int cmd_run(const std::string& config_path, const std::string& scenario,
            const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
            bool allow_divergence, const std::string& policy_override, double alpha_override,
            int attackers_override) {
    SimConfig cfg = load_run_config(config_path, scenario);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!policy_override.empty()) {
        if (policy_override == "ef") cfg.policy.kind = PolicyKind::error_free;
        else if (policy_override == "ci") cfg.policy.kind = PolicyKind::channel_inversion;
        else if (policy_override == "bev") cfg.policy.kind = PolicyKind::best_effort_voting;
        else throw std::runtime_error("--policy must be ef|ci|bev");
        if (cfg.policy.kind == PolicyKind::error_free) {
            cfg.attacker_count = 0;
            cfg.selection = AttackerSelection::none;
        }
    }
    if (alpha_override > 0.0) cfg.alpha.value = alpha_override;
    if (attackers_override >= 0) {
        cfg.attacker_count = static_cast<std::size_t>(attackers_override);
        if (cfg.attacker_count > 0 && cfg.selection == AttackerSelection::none)
            cfg.selection = AttackerSelection::random_n;
    }
    cfg.validate();

    const Dataset data = load_dataset(cfg);
    fs::create_directories(out_dir);

    const auto results = run_experiment(cfg, data);
    bool any_aborted = false;
    for (const auto& r : results) {
        const std::string csv =
            out_dir + "/rounds_" + to_string(cfg.policy.kind) + "_seed" + std::to_string(r.seed) +
            ".csv";
        write_round_csv(csv, cfg, r);
        std::printf("seed %llu: alpha=%.6g final_acc=%.4f final_loss=%.6g%s\n",
                    static_cast<unsigned long long>(r.seed), r.alpha, r.final_accuracy,
                    r.final_loss, r.aborted ? "  [aborted]" : "");
        any_aborted |= r.aborted;
    }
    {
        std::ofstream out(out_dir + "/summary_" + std::string(to_string(cfg.policy.kind)) +
                          ".json");
        out << summary_json(cfg, results) << "\n";
    }
    if (any_aborted && !allow_divergence) {
        std::fprintf(stderr, "error: at least one round aborted (divergence); "
                             "pass --allow-divergence to accept\n");
        return 2;
    }
    return 0;
}

int cmd_bounds(const std::string& config_path, const std::string& scenario,
               const std::string& sweep, const std::string& out_file, double f0_gap) {
    SimConfig cfg = load_run_config(config_path, scenario);
    std::size_t n_lo = 0, n_hi = cfg.attacker_count;
    if (!sweep.empty()) {
        if (std::sscanf(sweep.c_str(), "N=%zu..%zu", &n_lo, &n_hi) != 2)
            throw std::runtime_error("--sweep expects N=<lo>..<hi>");
        if (n_hi > cfg.workers) throw std::runtime_error("--sweep: hi exceeds workers");
    }

    const double lipschitz = cfg.alpha.lipschitz;
    std::vector<RatePoint> points;
    for (PolicyKind policy :
         {PolicyKind::channel_inversion, PolicyKind::best_effort_voting}) {
        for (std::size_t n = n_lo; n <= n_hi; ++n) {
            SimConfig c = cfg;
            c.policy.kind = policy;
            BoundParams p = bound_params_for(c, AttackerSet{}, 0);
            // pessimistic conversion order, matching max_tolerable_n
            BoundParams q = p;
            q.honest = cfg.workers - n;
            q.byzantine = n;
            std::vector<std::pair<double, double>> pairs;
            for (std::size_t i = 0; i < cfg.workers; ++i)
                pairs.emplace_back(cfg.sigmas[i], cfg.p_max[i]);
            std::stable_sort(pairs.begin(), pairs.end(), [](auto a, auto b) {
                return a.first * std::sqrt(a.second) > b.first * std::sqrt(b.second);
            });
            q.sigmas.clear();
            q.p_max.clear();
            for (std::size_t i = n; i < cfg.workers; ++i) {
                q.sigmas.push_back(pairs[i].first);
                q.p_max.push_back(pairs[i].second);
            }
            for (std::size_t i = 0; i < n; ++i) {
                q.sigmas.push_back(pairs[i].first);
                q.p_max.push_back(pairs[i].second);
            }
            q.lipschitz = lipschitz;

            RatePoint pt;
            pt.rounds = cfg.rounds;
            pt.policy = policy;
            pt.byzantine = n;
            pt.omega = omega(policy, q);
            pt.omega_big = omega_big(policy, q);
            if (pt.omega > 0.0) {
                const double alpha_bar =
                    cfg.alpha.kind == AlphaKind::scaled
                        ? cfg.alpha.value
                        : cfg.alpha.value * lipschitz * std::sqrt(double(cfg.rounds));
                pt.alpha = lr_from_scaled(alpha_bar, lipschitz, pt.omega, pt.omega_big,
                                          cfg.rounds);
                pt.rhs = rate_rhs(policy, q, cfg.rounds, alpha_bar, f0_gap);
            } else {
                pt.alpha = 0.0;
                pt.rhs = std::numeric_limits<double>::infinity();
            }
            points.push_back(pt);
            std::printf("%-4s N=%zu omega=%.6g omega_big=%.6g rhs=%.6g\n", to_string(policy), n,
                        pt.omega, pt.omega_big, pt.rhs);
        }
    }
    write_rate_curve_csv(out_file, points);
    std::printf("wrote %s (using estimated constants; F0-F* = %.6g supplied)\n", out_file.c_str(),
                f0_gap);

    // tolerance thresholds by direct sign scan; the printed closed forms of
    // the isomorphic special case disagree with each other, so the scan is
    // authoritative and the closed-form values are reported for comparison
    const bool isomorphic =
        std::equal(cfg.sigmas.begin() + 1, cfg.sigmas.end(), cfg.sigmas.begin()) &&
        std::equal(cfg.p_max.begin() + 1, cfg.p_max.end(), cfg.p_max.begin());
    BoundParams base = bound_params_for(cfg, AttackerSet{}, 0);
    const std::size_t ci_scan = max_tolerable_n(PolicyKind::channel_inversion, base);
    const std::size_t bev_scan = max_tolerable_n(PolicyKind::best_effort_voting, base);
    std::printf("max tolerable N (sign scan): ci=%zu bev=%zu\n", ci_scan, bev_scan);
    if (isomorphic) {
        const double u = static_cast<double>(cfg.workers);
        const double closed = u / (1.0 + std::sqrt(std::numbers::pi * u));
        const double from_omega = u / (1.0 + std::sqrt(std::numbers::pi * u) / 2.0);
        std::printf("isomorphic closed forms: ci U/(1+sqrt(pi U))=%.3f, "
                    "ci from omega>0: %.3f, bev U/2=%.1f"
                    " -- these disagree; the sign scan above is what this tool trusts\n",
                    closed, from_omega, u / 2.0);
    }
    return 0;
}

int cmd_verify_attack(const std::string& config_path, const std::string& scenario,
                      std::size_t rounds, std::size_t dictionary, std::uint64_t seed) {
    SimConfig cfg = config_path.empty() && scenario.empty() ? SimConfig{}
                     : load_run_config(config_path, scenario);
    // toy instance: small net, synthetic blobs
    AttackOracleScenario sc;
    sc.seed = seed;
    sc.rounds = rounds;
    ModelArch arch{4, 3, 2};
    SyntheticSpec synth;
    synth.input_dim = arch.input_dim;
    synth.num_classes = arch.output_dim;
    synth.train_count = 400;
    synth.test_count = 200;
    synth.seed = seed;
    const Dataset data = make_synthetic(synth);
    const std::size_t u = 5;
    sc.w = init_params(arch, RngStreams{seed});
    sc.profile = ChannelProfile{Vec(u, 1.0), 0.05};
    sc.p_max.assign(u, static_cast<double>(arch.param_count()));
    sc.policy = cfg.policy.kind == PolicyKind::channel_inversion
                    ? PowerPolicy{PolicyKind::channel_inversion, false}
                    : PowerPolicy{PolicyKind::best_effort_voting, false};
    sc.attacker = u - 1;
    sc.eval_set = data.test;
    sc.worker_data.resize(u);
    RngStreams shard_streams{seed + 17};
    for (std::size_t i = 0; i < u; ++i) {
        auto idx = assign_shard(data.train.size(), 80, i, false, shard_streams);
        for (std::size_t k : idx) sc.worker_data[i].push_back(data.train[k]);
    }

    const std::size_t dim = arch.param_count();
    const double p_max = sc.p_max[sc.attacker];

    CandidateAttack strongest = [&](const Vec& g, const StandardizationFactors& f) {
        return std::make_pair(strongest_attack_payload(g), attack_power(p_max, dim, f));
    };
    const Vec base = attack_effect_samples(sc, strongest);
    const MeanStderr base_stat = mean_stderr(base);
    std::printf("strongest attack: E[dF] = %.6g (stderr %.2g)\n", base_stat.mean,
                base_stat.stderr_);

    double best_other = -std::numeric_limits<double>::infinity();
    double margin_se = std::numeric_limits<double>::infinity();
    RngStreams dict_stream{seed + 99};
    for (std::size_t k = 0; k < dictionary; ++k) {
        auto rng = dict_stream.stream(Stream::test, k);
        Vec dir(dim);
        double norm = 0.0;
        for (double& x : dir) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : dir) x /= norm;
        CandidateAttack candidate = [&](const Vec&, const StandardizationFactors&) {
            return std::make_pair(dir, std::sqrt(p_max));
        };
        const Vec samples = attack_effect_samples(sc, candidate);
        const MeanStderr stat = mean_stderr(samples);
        // paired difference: candidates share all round randomness
        Vec diff(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) diff[i] = base[i] - samples[i];
        const MeanStderr d = mean_stderr(diff);
        if (stat.mean > best_other) {
            best_other = stat.mean;
            margin_se = d.stderr_ > 0.0 ? d.mean / d.stderr_ : std::numeric_limits<double>::infinity();
        }
    }
    std::printf("best dictionary candidate: E[dF] = %.6g\n", best_other);
    std::printf("margin of strongest over best candidate: %.2f standard errors\n", margin_se);
    const bool ok = base_stat.mean > best_other && margin_se >= 2.0;
    std::printf("verdict: %s\n", ok ? "strongest attack dominates (>= 2 SE)" : "NOT confirmed");
    return ok ? 0 : 1;
}

int cmd_selftest();

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analog-aggregation federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, scenario, out_dir = "out", policy_override;
    std::vector<std::uint64_t> seeds;
    bool allow_divergence = false;
    double alpha_override = 0.0;
    int attackers_override = -1;

    auto* run = app.add_subcommand("run", "run an experiment from a config file or scenario");
    auto* run_cfg = run->add_option("config", config_path, "JSON config path");
    run->add_option("--scenario", scenario, "built-in scenario name")
        ->check(CLI::IsMember(scenario_names()));
    run->add_option("--seeds", seeds, "override seed list")->delimiter(',');
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--policy", policy_override, "override policy (ef|ci|bev)");
    run->add_option("--alpha", alpha_override, "override alpha value");
    run->add_option("--attackers", attackers_override, "override attacker count");
    run->add_flag("--allow-divergence", allow_divergence,
                  "exit 0 even when rounds abort (expected for failing policies)");

    std::string sweep, bounds_out = "bounds.csv";
    double f0_gap = std::log(10.0);
    auto* bounds = app.add_subcommand("bounds", "evaluate convergence-rate bounds");
    auto* bounds_cfg = bounds->add_option("config", config_path, "JSON config path");
    bounds->add_option("--scenario", scenario, "built-in scenario name")
        ->check(CLI::IsMember(scenario_names()));
    bounds->add_option("--sweep", sweep, "attacker sweep, e.g. N=0..10");
    bounds->add_option("--out", bounds_out, "output CSV path");
    bounds->add_option("--f0-gap", f0_gap,
                       "F(w0)-F(w*) to plug into the bound (default ln 10)");

    std::size_t va_rounds = 1000, va_dict = 64;
    std::uint64_t va_seed = 1;
    auto* verify = app.add_subcommand("verify-attack",
                                      "Monte Carlo check that the negated-gradient/max-power "
                                      "attack dominates a dictionary of alternatives");
    verify->add_option("config", config_path, "JSON config path (optional)");
    verify->add_option("--scenario", scenario, "built-in scenario name")
        ->check(CLI::IsMember(scenario_names()));
    verify->add_option("--rounds", va_rounds, "Monte Carlo rounds per candidate");
    verify->add_option("--dictionary", va_dict, "number of alternative candidates");
    verify->add_option("--seed", va_seed, "seed");

    auto* selftest = app.add_subcommand("selftest", "fast property checks of the core pieces");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!*run_cfg && scenario.empty())
                throw std::runtime_error("run: provide a config path or --scenario");
            return cmd_run(config_path, scenario, seeds, out_dir, allow_divergence,
                           policy_override, alpha_override, attackers_override);
        }
        if (bounds->parsed()) {
            if (!*bounds_cfg && scenario.empty())
                throw std::runtime_error("bounds: provide a config path or --scenario");
            return cmd_bounds(config_path, scenario, sweep, bounds_out, f0_gap);
        }
        if (verify->parsed())
            return cmd_verify_attack(config_path, scenario, va_rounds, va_dict, va_seed);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

namespace {

int cmd_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const char* name) {
        std::printf("%-52s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };

    // gradient vs central differences on the toy arch
    {
        ModelArch arch{4, 3, 2};
        RngStreams streams{7};
        ModelParams w = init_params(arch, streams);
        SyntheticSpec synth;
        synth.input_dim = 4;
        synth.num_classes = 2;
        synth.train_count = 8;
        const Dataset data = make_synthetic(synth);
        double worst = 0.0;
        for (const auto& s : data.train) {
            const Vec g = local_gradient(w, s);
            const Vec fd = finite_diff_gradient(w, s, 1e-5);
            for (std::size_t d = 0; d < g.size(); ++d) {
                const double scale = std::max({1.0, std::fabs(g[d]), std::fabs(fd[d])});
                worst = std::max(worst, std::fabs(g[d] - fd[d]) / scale);
            }
        }
        check(worst <= 1e-6, "analytic gradient matches finite differences");
    }

    // channel statistics at reduced draw count
    {
        ChannelProfile profile{Vec(1, 1.0), 0.0};
        RngStreams streams{11};
        double sum = 0.0, sum_sq = 0.0;
        const std::size_t draws = 200000;
        for (std::size_t t = 0; t < draws; ++t) {
            const auto round = draw_channels(profile, t, 0, streams);
            sum += round.magnitudes[0];
            sum_sq += round.magnitudes[0] * round.magnitudes[0];
        }
        const double mean = sum / draws, mean_sq = sum_sq / draws;
        check(std::fabs(mean - std::sqrt(std::numbers::pi / 2.0)) < 0.02,
              "Rayleigh magnitude mean = sigma sqrt(pi/2)");
        check(std::fabs(mean_sq - 2.0) < 0.05, "Rayleigh magnitude second moment = 2 sigma^2");
    }

    // power identities
    {
        const std::size_t dim = 1000;
        const double p = bev_power(double(dim), dim);
        check(std::fabs(dim * p * p - double(dim)) < 1e-9, "best-effort power meets the cap");
        ChannelProfile profile{Vec(10, 1.0), 0.0};
        check(std::fabs(expected_min_gain(profile) - 0.2) < 1e-12,
              "expected minimum channel gain");
    }

    // aggregation identity: single worker, unit path, no noise
    {
        Vec g{0.3, -1.2, 0.5, 2.0};
        const auto stats = local_stats(g);
        const StandardizationFactors f{stats.first, stats.second};
        ChannelRound round{Vec{1.0}, Vec(4, 0.0)};
        std::vector<Transmission> txs{{0, 1.0, standardize(g, f)}};
        const Vec est = destandardize(superpose(txs, round), 1.0, f);
        double worst = 0.0;
        for (std::size_t d = 0; d < g.size(); ++d)
            worst = std::max(worst, std::fabs(est[d] - g[d]));
        check(worst < 1e-12, "single-worker loopback recovers the gradient");
    }

    // bound consistency: isomorphic closed form and no-attack reduction
    {
        BoundParams p = BoundParams::isomorphic(10, 2, 1.0, 100.0, 100);
        const double general = omega_ci(p);
        const double closed = (8.0 / std::sqrt(10.0) - 2.0 * std::sqrt(std::numbers::pi) / 2.0) *
                              std::sqrt(2.0 * 100.0 * 1.0 / 100.0);
        check(std::fabs(general - closed) < 1e-12, "omega closed form (isomorphic workers)");
        BoundParams p0 = BoundParams::isomorphic(10, 0, 1.0, 100.0, 100);
        p0.lipschitz = 2.0;
        p0.delta = 0.3;
        p0.eps = 0.5;
        p0.noise_std = 0.1;
        const double general_rhs =
            rate_rhs(PolicyKind::channel_inversion, p0, 400, 1.5, 2.0);
        const double u2b2 = 100.0 * p0.b0 * p0.b0;
        const double reduced = (2.0 * p0.lipschitz / 1.5 * 2.0 +
                              1.5 * (p0.delta * p0.delta +
                                     p0.eps * p0.eps * p0.noise_std * p0.noise_std / u2b2)) /
                             std::sqrt(400.0);
        check(std::fabs(general_rhs - reduced) < 1e-12, "no-attacker rate matches the reduced form");
        check(max_tolerable_n(PolicyKind::best_effort_voting, p) == 4,
              "best-effort tolerance threshold (U=10)");
    }

    std::printf("%s\n", failures == 0 ? "selftest: all checks passed" : "selftest: FAILURES");
    return failures == 0 ? 0 : 1;
}

} // namespace
