// SPDX-License-Identifier: Apache-2.0
#include "pairedit/sampler.hpp"

#include <stdexcept>

#include "pairedit/schedule.hpp"

namespace pairedit {

void SampleConfig::validate() const {
    if (num_steps == 0) throw std::invalid_argument("num_steps must be at least 1");
    if (off_steps > num_steps) throw std::invalid_argument("off_steps must not exceed num_steps");
}

std::vector<double> time_grid(std::size_t num_steps) {
    if (num_steps == 0) throw std::invalid_argument("num_steps must be at least 1");
    std::vector<double> grid(num_steps);
    for (std::size_t k = 0; k < num_steps; ++k) {
        grid[k] = 1.0 - static_cast<double>(k) / static_cast<double>(num_steps);
    }
    return grid;
}

Tensor initial_noise(std::uint64_t seed, std::size_t dim) {
    RngState rng(seed);
    return gauss(rng, {dim});
}

Tensor initial_noise_batch(std::span<const std::uint64_t> seeds, std::size_t dim) {
    if (seeds.empty()) throw std::invalid_argument("initial_noise_batch: no seeds");
    Tensor out({seeds.size(), dim});
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const Tensor row = initial_noise(seeds[i], dim);
        std::copy(row.data().begin(), row.data().end(), out.row(i).begin());
    }
    return out;
}

Tensor integrate(Tensor x, std::size_t num_steps, const NoiseFn& noise, Trajectory* log) {
    const std::vector<double> grid = time_grid(num_steps);
    const double dt = 1.0 / static_cast<double>(num_steps);
    for (std::size_t k = 0; k < num_steps; ++k) {
        Tensor eps = noise(x, grid[k], k);
        if (log) {
            log->states.push_back(x);
            log->predictions.push_back(eps);
        }
        x = euler_step(x, eps, dt);
    }
    if (log) log->states.push_back(x);
    return x;
}

AdapterStack stack_at_step(const AdapterStack& stack, const SampleConfig& cfg, std::size_t step) {
    AdapterStack out = stack;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& e = out[i];
        if (!e.delayed) continue;
        if (step < cfg.off_steps) {
            e.active = false;
        } else {
            e.scale_override = cfg.scale * e.scale_override.value_or(e.adapter->scale);
        }
    }
    return out;
}

Tensor generate(const DenoiserParams& base, const AdapterStack& stack, const SampleConfig& cfg, Trajectory* log) {
    cfg.validate();
    const NoiseFn fn = [&](const Tensor& x, double t, std::size_t step) {
        return predict_noise(base, stack_at_step(stack, cfg, step), x, t);
    };
    return integrate(initial_noise(cfg.seed, base.data_dim()), cfg.num_steps, fn, log);
}

Tensor generate_batch(const DenoiserParams& base, const AdapterStack& stack, const SampleConfig& cfg,
                      std::span<const std::uint64_t> seeds) {
    cfg.validate();
    const NoiseFn fn = [&](const Tensor& x, double t, std::size_t step) {
        return predict_noise(base, stack_at_step(stack, cfg, step), x, t);
    };
    return integrate(initial_noise_batch(seeds, base.data_dim()), cfg.num_steps, fn);
}

namespace {

AdapterStack rec_stack(const LoraAdapter* rec) {
    AdapterStack stack;
    if (rec) stack.push(*rec);
    return stack;
}

}  // namespace

Tensor fused_noise(const DenoiserParams& base, const LoraAdapter* rec, const LoraAdapter& sem, const Tensor& x_t,
                   double t, double gamma) {
    const LoraAdapter* sems[] = {&sem};
    const double gammas[] = {gamma};
    return compose(base, rec, sems, gammas, x_t, t);
}

Tensor compose(const DenoiserParams& base, const LoraAdapter* rec, std::span<const LoraAdapter* const> sems,
               std::span<const double> gammas, const Tensor& x_t, double t) {
    if (sems.empty()) throw std::invalid_argument("compose: at least one semantic adapter required");
    if (sems.size() != gammas.size()) throw std::invalid_argument("compose: one gamma per semantic adapter");
    AdapterStack stack = rec_stack(rec);
    const Tensor eps_rec = predict_noise(base, stack, x_t, t);

    double gamma_sum = 0.0;
    for (double g : gammas) gamma_sum += g;
    Tensor out = scale(eps_rec, 1.0 - gamma_sum);
    for (std::size_t i = 0; i < sems.size(); ++i) {
        AdapterStack with_sem = stack;
        with_sem.push(*sems[i]);
        axpy_inplace(out, gammas[i], predict_noise(base, with_sem, x_t, t));
    }
    return out;
}

Tensor fused_edit(const DenoiserParams& base, const LoraAdapter* rec, const LoraAdapter& sem,
                  const SampleConfig& cfg, Trajectory* log) {
    cfg.validate();
    const AdapterStack stack = rec_stack(rec);
    const NoiseFn fn = [&](const Tensor& x, double t, std::size_t step) {
        if (step < cfg.off_steps) return predict_noise(base, stack, x, t);
        return fused_noise(base, rec, sem, x, t, cfg.gamma_real);
    };
    return integrate(initial_noise(cfg.seed, base.data_dim()), cfg.num_steps, fn, log);
}

Tensor compose_edit(const DenoiserParams& base, const LoraAdapter* rec, std::span<const LoraAdapter* const> sems,
                    std::span<const double> gammas, const SampleConfig& cfg) {
    cfg.validate();
    const AdapterStack stack = rec_stack(rec);
    const NoiseFn fn = [&](const Tensor& x, double t, std::size_t step) {
        if (step < cfg.off_steps) return predict_noise(base, stack, x, t);
        return compose(base, rec, sems, gammas, x, t);
    };
    return integrate(initial_noise(cfg.seed, base.data_dim()), cfg.num_steps, fn);
}

LoraAdapter linear_merge(const LoraAdapter& rec, const LoraAdapter& sem, double alpha) {
    if (rec.layers.size() != sem.layers.size()) throw std::invalid_argument("linear_merge: layer count mismatch");
    LoraAdapter merged;
    merged.scale = 1.0;
    for (std::size_t l = 0; l < rec.layers.size(); ++l) {
        const LoraLayer& a = rec.layers[l];
        const LoraLayer& b = sem.layers[l];
        const std::size_t r1 = a.down.dim(0), r2 = b.down.dim(0);
        const std::size_t in = a.down.dim(1), out = a.up.dim(0);
        if (b.down.dim(1) != in || b.up.dim(0) != out) throw std::invalid_argument("linear_merge: shape mismatch");
        LoraLayer m{Tensor({r1 + r2, in}), Tensor({out, r1 + r2})};
        for (std::size_t i = 0; i < r1; ++i)
            for (std::size_t j = 0; j < in; ++j) m.down(i, j) = a.down(i, j);
        for (std::size_t i = 0; i < r2; ++i)
            for (std::size_t j = 0; j < in; ++j) m.down(r1 + i, j) = b.down(i, j);
        for (std::size_t i = 0; i < out; ++i) {
            for (std::size_t j = 0; j < r1; ++j) m.up(i, j) = rec.scale * a.up(i, j);
            for (std::size_t j = 0; j < r2; ++j) m.up(i, r1 + j) = alpha * sem.scale * b.up(i, j);
        }
        merged.layers.push_back(std::move(m));
    }
    return merged;
}

Tensor linear_edit(const DenoiserParams& base, const LoraAdapter* rec, const LoraAdapter& sem, double alpha,
                   const SampleConfig& cfg) {
    // Weight-space sum realized as a stack: W + dW_rec + alpha * dW_sem.
    AdapterStack stack = rec_stack(rec);
    stack.push_delayed(sem, alpha * sem.scale);
    SampleConfig c = cfg;
    c.scale = 1.0;
    return generate(base, stack, c);
}

}  // namespace pairedit
