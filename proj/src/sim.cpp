#include "floa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "floa/kahan.hpp"

namespace floa {

namespace {

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

struct WorkerRound {
    Vec gradient;
    double loss = 0.0;
    std::pair<double, double> stats{0.0, 0.0};
};

} // namespace

BoundParams bound_params_for(const SimConfig& config, const AttackerSet& attackers,
                             std::size_t attacker_count) {
    BoundParams p;
    p.dim = config.arch.param_count();
    p.honest = config.workers - attacker_count;
    p.byzantine = attacker_count;
    // honest workers first, attackers last
    for (std::size_t i = 0; i < config.workers; ++i) {
        if (attacker_count > 0 && attackers.contains(i)) continue;
        p.sigmas.push_back(config.sigmas[i]);
        p.p_max.push_back(config.p_max[i]);
    }
    if (attacker_count > 0) {
        for (std::size_t i : attackers.indices) {
            p.sigmas.push_back(config.sigmas[i]);
            p.p_max.push_back(config.p_max[i]);
        }
    }
    ChannelProfile profile{config.sigmas, 0.0};
    p.b0 = ci_b0(profile, config.p_max, p.dim);
    p.lipschitz = config.alpha.lipschitz;
    return p;
}

double resolve_alpha(const SimConfig& config, const AttackerSet& attackers) {
    if (config.alpha.kind == AlphaKind::raw) return config.alpha.value;
    if (config.policy.kind == PolicyKind::error_free) {
        // the error-free benchmark applies the adjusted step directly, which
        // matches channel inversion's effective step without attackers
        if (config.alpha.kind == AlphaKind::adjusted) return config.alpha.value;
        return config.alpha.value / (config.alpha.lipschitz *
                                     std::sqrt(static_cast<double>(config.rounds)));
    }
    const std::size_t n = config.alpha.use_attacked_constants ? config.attacker_count : 0;
    const BoundParams p = bound_params_for(config, attackers, n);
    const double w = omega(config.policy.kind, p);
    const double big = omega_big(config.policy.kind, p);
    if (config.alpha.kind == AlphaKind::adjusted) return lr_from_adjusted(config.alpha.value, w, big);
    return lr_from_scaled(config.alpha.value, config.alpha.lipschitz, w, big, config.rounds);
}

SimContext make_context(const SimConfig& config, const Dataset& data, std::uint64_t seed) {
    config.validate();
    if (data.input_dim != config.arch.input_dim)
        throw std::runtime_error("dataset feature dimension does not match the model");
    if (config.policy.kind == PolicyKind::error_free && config.attacker_count > 0)
        throw std::runtime_error("the error-free benchmark has no attacker model");

    for (const auto& s : data.train) check_sample(config.arch, s);
    for (const auto& s : data.test) check_sample(config.arch, s);

    SimContext ctx;
    ctx.config = &config;
    ctx.data = &data;
    ctx.streams = RngStreams{seed};
    ctx.dim = config.arch.param_count();

    double z = config.noise_std.value_or(0.0);
    if (config.snr_db) {
        const double p_ref = *std::min_element(config.p_max.begin(), config.p_max.end());
        z = snr_to_noise_std(p_ref, ctx.dim, *config.snr_db);
    }
    ctx.profile = ChannelProfile{config.sigmas, z};
    validate(ctx.profile);

    ctx.attackers =
        select_attackers(ctx.profile, config.attacker_count, config.selection, ctx.streams);
    ctx.shards.resize(config.workers);
    for (std::size_t i = 0; i < config.workers; ++i)
        ctx.shards[i] = assign_shard(data.train.size(), config.shard_size, i,
                                     config.shared_shard, ctx.streams);
    if (config.policy.kind == PolicyKind::channel_inversion)
        ctx.b0 = ci_b0(ctx.profile, config.p_max, ctx.dim);
    ctx.alpha = resolve_alpha(config, ctx.attackers);
    return ctx;
}

RoundRecord run_round(SimState& state, const SimContext& ctx) {
    const SimConfig& cfg = *ctx.config;
    const std::size_t u = cfg.workers;
    const std::size_t t = state.t + 1;

    RoundRecord rec;
    rec.t = t;

    // local gradients (attackers compute theirs honestly too)
    std::vector<WorkerRound> workers(u);
#pragma omp parallel for schedule(static)
    for (long wi = 0; wi < static_cast<long>(u); ++wi) {
        const auto i = static_cast<std::size_t>(wi);
        auto data_rng = ctx.streams.stream(Stream::worker_data, i, t);
        std::vector<Sample> batch(cfg.batch_size);
        for (auto& s : batch)
            s = ctx.data->train[ctx.shards[i][data_rng.uniform_below(ctx.shards[i].size())]];
        workers[i].gradient = minibatch_gradient(state.w, batch);
        workers[i].loss = forward_loss(state.w, batch);
        workers[i].stats = local_stats(workers[i].gradient);
    }

    for (const auto& wr : workers) {
        if (!all_finite(wr.gradient)) { // model has diverged
            rec.aborted = true;
            return rec;
        }
    }

    // mean gradient diagnostics (the g_t estimate of the analysis)
    {
        KahanVectorSum mean_acc(ctx.dim);
        for (const auto& wr : workers) mean_acc.add(wr.gradient);
        Vec mean_grad = mean_acc.take();
        for (double& x : mean_grad) x /= static_cast<double>(u);
        KahanSum norm_sq;
        for (double x : mean_grad) norm_sq.add(x * x);
        rec.grad_norm_sq = norm_sq.value();
        KahanSum dev_sq;
        for (const auto& wr : workers) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < ctx.dim; ++d) {
                const double diff = wr.gradient[d] - mean_grad[d];
                d2 += diff * diff;
            }
            dev_sq.add(d2);
        }
        rec.rms_dev = std::sqrt(dev_sq.value() / static_cast<double>(u));
    }

    KahanSum loss_acc;
    for (const auto& wr : workers) loss_acc.add(wr.loss);
    rec.train_loss = loss_acc.value() / static_cast<double>(u);

    Vec estimate;
    if (cfg.policy.kind == PolicyKind::error_free) {
        std::vector<Vec> grads(u);
        for (std::size_t i = 0; i < u; ++i) grads[i] = std::move(workers[i].gradient);
        estimate = error_free_aggregate(grads);
    } else {
        std::vector<std::pair<double, double>> stats(u);
        for (std::size_t i = 0; i < u; ++i) stats[i] = workers[i].stats;
        const StandardizationFactors factors = global_stats(stats);
        rec.eps_t = std::sqrt(factors.variance);
        rec.gbar_t = factors.mean;

        const ChannelRound channel = draw_channels(ctx.profile, t, ctx.dim, ctx.streams);

        try {
            std::vector<Transmission> txs;
            txs.reserve(u);
            KahanSum nominal_sum; // policy-prescribed sum over all U workers
            for (std::size_t i = 0; i < u; ++i) {
                double p_nominal = 0.0;
                if (cfg.policy.kind == PolicyKind::channel_inversion) {
                    const auto p = ci_power(ctx.b0, channel.magnitudes[i], cfg.p_max[i],
                                            ctx.dim, cfg.policy.ci_truncate);
                    p_nominal = p.value_or(0.0); // zero channel: worker drops out
                } else {
                    p_nominal = bev_power(cfg.p_max[i], ctx.dim);
                }
                nominal_sum.add(p_nominal * channel.magnitudes[i]);

                if (ctx.attackers.contains(i)) {
                    auto payload_rng = ctx.streams.stream(Stream::attack_payload, i, t);
                    auto [payload, amplitude] =
                        attack_transmission(cfg.strategy, workers[i].gradient, factors,
                                            cfg.p_max[i], ctx.dim, payload_rng);
                    txs.push_back({i, amplitude, std::move(payload)});
                } else if (p_nominal > 0.0) {
                    txs.push_back({i, p_nominal, standardize(workers[i].gradient, factors)});
                }
            }
            const Vec received = superpose(txs, channel);
            estimate = destandardize(received, nominal_sum.value(), factors);
        } catch (const std::exception&) {
            rec.aborted = true; // degenerate standardization or power control
            return rec;
        }
    }

    if (!all_finite(estimate)) {
        rec.aborted = true;
        return rec;
    }
    ModelParams next = model_update(state.w, estimate, ctx.alpha);
    if (!all_finite(next.values)) {
        rec.aborted = true;
        return rec;
    }
    state.w = std::move(next);
    state.t = t;
    return rec;
}

SeedResult run_seed(const SimConfig& config, const Dataset& data, std::uint64_t seed) {
    const SimContext ctx = make_context(config, data, seed);
    SimState state{init_params(config.arch, ctx.streams), 0};

    SeedResult res;
    res.seed = seed;
    res.alpha = ctx.alpha;
    res.initial_loss = forward_loss(state.w, data.test);
    res.min_train_loss = std::numeric_limits<double>::infinity();
    res.records.reserve(config.rounds);

    double last_acc = 0.0, last_loss = res.initial_loss;
    for (std::size_t t = 1; t <= config.rounds; ++t) {
        RoundRecord rec = run_round(state, ctx);
        if (!rec.aborted) {
            if (t % config.eval_stride == 0 || t == config.rounds) {
                const EvalResult ev = evaluate(state.w, data.test);
                last_acc = ev.accuracy;
                last_loss = ev.loss;
            }
            rec.test_acc = last_acc;
            res.best_accuracy = std::max(res.best_accuracy, last_acc);
            res.min_train_loss = std::min(res.min_train_loss, rec.train_loss);
        }
        res.records.push_back(rec);
        if (rec.aborted) {
            res.aborted = true;
            res.abort_round = t;
            res.abort_reason = "degenerate standardization or non-finite update";
            break;
        }
    }
    res.final_accuracy = last_acc;
    res.final_loss = last_loss;

    std::vector<std::pair<double, double>> disp;
    disp.reserve(res.records.size());
    for (const auto& r : res.records)
        if (!r.aborted) disp.emplace_back(r.rms_dev, r.eps_t);
    if (!disp.empty()) res.dispersion = estimate_delta_eps(disp);
    return res;
}

std::vector<SeedResult> run_experiment(const SimConfig& config, const Dataset& data) {
    std::vector<SeedResult> out;
    out.reserve(config.seeds.size());
    for (std::uint64_t seed : config.seeds) out.push_back(run_seed(config, data, seed));
    return out;
}

Dataset load_dataset(const SimConfig& config) {
    if (config.dataset.synthetic) {
        SyntheticSpec spec = config.dataset.synth;
        spec.input_dim = config.arch.input_dim;
        spec.num_classes = config.arch.output_dim;
        return make_synthetic(spec);
    }
    return load_mnist(config.dataset_dir());
}

void write_round_csv(const std::string& path, const SimConfig& config, const SeedResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "seed,t,policy,N,train_loss,test_acc,grad_norm_sq,eps_t,gbar_t,aborted\n";
    char line[512];
    for (const auto& r : result.records) {
        std::snprintf(line, sizeof(line), "%llu,%zu,%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      static_cast<unsigned long long>(result.seed), r.t,
                      to_string(config.policy.kind), config.attacker_count, r.train_loss,
                      r.test_acc, r.grad_norm_sq, r.eps_t, r.gbar_t, r.aborted ? 1 : 0);
        out << line;
    }
}

std::string summary_json(const SimConfig& config, const std::vector<SeedResult>& results) {
    nlohmann::json root;
    root["policy"] = to_string(config.policy.kind);
    root["workers"] = config.workers;
    root["attackers"] = config.attacker_count;
    root["rounds"] = config.rounds;

    nlohmann::json seeds = nlohmann::json::array();
    double acc_sum = 0.0, acc_sq = 0.0, loss_sum = 0.0;
    double delta_max = 0.0, eps_max = 0.0;
    std::size_t aborted = 0;
    for (const auto& r : results) {
        seeds.push_back({{"seed", r.seed},
                         {"alpha", r.alpha},
                         {"initial_loss", r.initial_loss},
                         {"final_accuracy", r.final_accuracy},
                         {"final_loss", r.final_loss},
                         {"best_accuracy", r.best_accuracy},
                         {"min_train_loss", r.min_train_loss},
                         {"aborted", r.aborted},
                         {"abort_round", r.abort_round},
                         {"delta_estimate", r.dispersion.delta},
                         {"eps_estimate", r.dispersion.eps}});
        acc_sum += r.final_accuracy;
        acc_sq += r.final_accuracy * r.final_accuracy;
        loss_sum += r.final_loss;
        delta_max = std::max(delta_max, r.dispersion.delta);
        eps_max = std::max(eps_max, r.dispersion.eps);
        if (r.aborted) ++aborted;
    }
    const double n = static_cast<double>(results.size());
    const double acc_mean = acc_sum / n;
    root["seeds"] = seeds;
    root["final_accuracy_mean"] = acc_mean;
    root["final_accuracy_std"] =
        n > 1 ? std::sqrt(std::max(0.0, (acc_sq - n * acc_mean * acc_mean) / (n - 1.0))) : 0.0;
    root["final_loss_mean"] = loss_sum / n;
    root["aborted_seeds"] = aborted;

    if (config.policy.kind != PolicyKind::error_free) {
        // convergence verdict with the configured attacker set; delta/eps are
        // the empirical maxima, L is the configured value
        AttackerSet set;
        if (config.attacker_count > 0) {
            ChannelProfile profile{config.sigmas, 0.0};
            set = select_attackers(profile, config.attacker_count, config.selection,
                                   RngStreams{config.seeds.front()});
        }
        BoundParams p = bound_params_for(config, set, config.attacker_count);
        p.delta = delta_max;
        p.eps = eps_max;
        const double w = omega(config.policy.kind, p);
        const double big = omega_big(config.policy.kind, p);
        const double alpha = results.empty() ? 0.0 : results.front().alpha;
        root["bounds"] = {{"omega", w},
                          {"omega_big", big},
                          {"alpha", alpha},
                          {"converges", w > 0.0 && converges(alpha, p.lipschitz, w, big)},
                          {"constants", "estimated (delta, eps from this run; L from config)"}};
        if (config.policy.kind == PolicyKind::channel_inversion) root["bounds"]["b0"] = p.b0;
    }
    return root.dump(2);
}

} // namespace floa
