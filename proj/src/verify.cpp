// SPDX-License-Identifier: Apache-2.0
#include "pairedit/verify.hpp"

#include <cstdio>
#include <functional>

#include "pairedit/adam.hpp"
#include "pairedit/gradcheck.hpp"
#include "pairedit/losses.hpp"
#include "pairedit/sampler.hpp"
#include "pairedit/schedule.hpp"

namespace pairedit {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

DenoiserParams small_base(RngState& rng) {
    NetworkShape shape;
    shape.data_dim = 4;
    shape.hidden_width = 16;
    shape.hidden_layers = 2;
    shape.fourier_k = 2;
    return DenoiserParams::initialize(rng, shape);
}

LoraAdapter random_adapter(RngState& rng, const DenoiserParams& base, std::size_t rank) {
    LoraAdapter a = init_adapter(rng, base, rank, 0.1);
    const Tensor flat = flatten(a);
    assign_flat(a, scale(gauss(rng, flat.shape()), 0.2));
    return a;
}

PairedBatch random_batch(RngState& rng, std::size_t n, std::size_t d) {
    PairedBatch b{gauss(rng, {n, d}), gauss(rng, {n, d}), gauss(rng, {n, d}), {}};
    for (std::size_t i = 0; i < n; ++i) b.t.push_back(rng.next_uniform_in(0.05, 1.0));
    return b;
}

using LossFn = std::function<LossResult(const LoraAdapter&)>;

double grad_error(const LoraAdapter& adapter, const LossFn& loss, std::size_t grad_index) {
    const Tensor analytic = flatten(loss(adapter).grads.at(grad_index));
    const auto f = [&](const Tensor& flat) {
        LoraAdapter probe = adapter;
        assign_flat(probe, flat);
        return loss(probe).value;
    };
    return relative_error(analytic, finite_diff_grad(f, flatten(adapter), 1e-6));
}

CheckResult check_schedule_algebra(RngState& rng) {
    double worst = 0.0;
    for (int p = 0; p < 10; ++p) {
        const Tensor a = gauss(rng, {6});
        const Tensor b = gauss(rng, {6});
        const Tensor eps = gauss(rng, {6});
        const Tensor diff = sub(a, b);
        for (int i = 0; i < 10; ++i) {
            for (int j = 1; j <= 10; ++j) {
                const double dt = 0.01 * j;
                const double t = dt + (1.0 - dt) * i / 9.0;
                worst = std::max(worst, max_abs_diff(paired_delta(a, b, eps, t, dt, NoiseSchedule::content_preserving(3.0)), diff));
                worst = std::max(worst, max_abs_diff(paired_delta(a, b, eps, t, dt, NoiseSchedule::standard()),
                                                     scale(diff, 1.0 - t + dt)));
            }
        }
    }
    return {"schedule_algebra", worst < 1e-12, fmt("max abs error %.3g", worst)};
}

CheckResult check_lora_noop(RngState& rng, const DenoiserParams& base) {
    const Tensor x = gauss(rng, {5, base.data_dim()});
    const std::vector<double> t{0.1, 0.3, 0.5, 0.7, 0.9};
    const Tensor plain = predict_noise(base, AdapterStack{}, x, t);
    const LoraAdapter fresh = init_adapter(rng, base, 2, 0.1);
    LoraAdapter zero_scale = random_adapter(rng, base, 2);
    zero_scale.scale = 0.0;
    const bool ok = predict_noise(base, AdapterStack{&fresh}, x, t) == plain &&
                    predict_noise(base, AdapterStack{&zero_scale}, x, t) == plain;
    return {"lora_noop", ok, ok ? "outputs identical" : "adapter changed the output"};
}

CheckResult check_gradients(RngState& rng, const DenoiserParams& base) {
    LossConfig cfg;
    double worst = 0.0;
    for (int point = 0; point < 3; ++point) {
        const LoraAdapter content = random_adapter(rng, base, 2);
        const LoraAdapter sem = random_adapter(rng, base, 2);
        const PairedBatch batch = random_batch(rng, 4, base.data_dim());
        worst = std::max(worst, grad_error(content, [&](const LoraAdapter& a) { return content_loss(base, a, batch, cfg); }, 0));
        worst = std::max(worst, grad_error(sem, [&](const LoraAdapter& a) { return semantic_loss(base, &content, a, batch, cfg); }, 0));
        worst = std::max(worst, grad_error(sem, [&](const LoraAdapter& a) { return variant_a_loss(base, a, batch, cfg); }, 0));
        worst = std::max(worst, grad_error(sem, [&](const LoraAdapter& a) { return variant_b_loss(base, a, batch, cfg); }, 0));
        worst = std::max(worst, grad_error(sem, [&](const LoraAdapter& a) { return variant_c_loss(base, content, a, batch, cfg); }, 0));
    }
    return {"loss_gradients", worst < 1e-4, fmt("max relative error %.3g", worst)};
}

CheckResult check_stop_gradient(RngState& rng, const DenoiserParams& base) {
    const LoraAdapter content = random_adapter(rng, base, 2);
    const LoraAdapter before = content;
    LoraAdapter sem = init_adapter(rng, base, 2, 0.1);
    const LoraAdapter sem_before = sem;
    Adam opt(1e-2);
    LossConfig cfg;
    for (int step = 0; step < 50; ++step) {
        const PairedBatch batch = random_batch(rng, 4, base.data_dim());
        const LossResult r = semantic_loss(base, &content, sem, batch, cfg);
        if (r.grads.size() != 1) return {"stop_gradient", false, "semantic loss produced extra gradients"};
        opt.step(parameter_spans(sem), parameter_spans(r.grads[0]));
    }
    const bool ok = content == before && !(sem == sem_before);
    return {"stop_gradient", ok, ok ? "content adapter unchanged after 50 steps" : "content adapter modified"};
}

CheckResult check_fusion_endpoints(RngState& rng, const DenoiserParams& base) {
    const LoraAdapter rec = random_adapter(rng, base, 2);
    const LoraAdapter sem = random_adapter(rng, base, 2);
    const Tensor x = gauss(rng, {base.data_dim()});
    const double t = 0.4;
    const Tensor eps_rec = predict_noise(base, AdapterStack{&rec}, x, t);
    const Tensor eps_both = predict_noise(base, AdapterStack{&rec, &sem}, x, t);
    bool ok = fused_noise(base, &rec, sem, x, t, 0.0) == eps_rec && fused_noise(base, &rec, sem, x, t, 1.0) == eps_both;
    double worst = 0.0;
    for (double g : {-0.5, 0.25, 0.5, 0.75, 1.5}) {
        const Tensor expect = axpy(scale(eps_rec, 1.0 - g), g, eps_both);
        worst = std::max(worst, max_abs_diff(fused_noise(base, &rec, sem, x, t, g), expect));
    }
    ok = ok && worst < 1e-12;
    return {"fusion_endpoints", ok, fmt("affinity max abs error %.3g", worst)};
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(std::uint64_t seed) {
    RngState rng(seed);
    const DenoiserParams base = small_base(rng);
    std::vector<CheckResult> out;
    out.push_back(check_schedule_algebra(rng));
    out.push_back(check_lora_noop(rng, base));
    out.push_back(check_gradients(rng, base));
    out.push_back(check_stop_gradient(rng, base));
    out.push_back(check_fusion_endpoints(rng, base));
    return out;
}

}  // namespace pairedit
