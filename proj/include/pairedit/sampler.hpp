// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pairedit/network.hpp"

namespace pairedit {

struct SampleConfig {
    std::size_t num_steps = 28;
    std::size_t off_steps = 14;  // delayed (semantic) adapters stay at zero for these steps
    double scale = 1.0;          // multiplier on delayed adapters once they switch on
    double gamma_real = 0.75;    // guidance weight for LoRA fusion
    std::uint64_t seed = 0;

    double dt() const { return 1.0 / static_cast<double>(num_steps); }
    void validate() const;
};

/// Times visited by the sampler: t_k = 1 - k / num_steps for k = 0..num_steps-1.
std::vector<double> time_grid(std::size_t num_steps);

/// x_1 for one seed: gauss(RngState(seed), [d]).
Tensor initial_noise(std::uint64_t seed, std::size_t dim);
/// Row i is initial_noise(seeds[i], dim).
Tensor initial_noise_batch(std::span<const std::uint64_t> seeds, std::size_t dim);

struct Trajectory {
    std::vector<Tensor> states;       // x before each step, then the final x_0
    std::vector<Tensor> predictions;  // eps_pred used at each step
};

/// Noise prediction at (x, t) on sampler step `step`.
using NoiseFn = std::function<Tensor(const Tensor& x, double t, std::size_t step)>;

/// Euler integration from t = 1 down to 0 with dt = 1 / num_steps.
Tensor integrate(Tensor x, std::size_t num_steps, const NoiseFn& noise, Trajectory* log = nullptr);

/// The stack as seen on sampler step `step`: delayed entries are inactive for
/// step < off_steps and scaled by cfg.scale afterwards.
AdapterStack stack_at_step(const AdapterStack& stack, const SampleConfig& cfg, std::size_t step);

/// Sample from seed cfg.seed with delayed activation of semantic entries.
Tensor generate(const DenoiserParams& base, const AdapterStack& stack, const SampleConfig& cfg,
                Trajectory* log = nullptr);
/// Row i is generate(...) with seed seeds[i]; bit-identical to the per-seed calls.
Tensor generate_batch(const DenoiserParams& base, const AdapterStack& stack, const SampleConfig& cfg,
                      std::span<const std::uint64_t> seeds);

/// (1 - gamma) eps_rec + gamma eps_{rec+sem}; `rec` may be null (bare base).
Tensor fused_noise(const DenoiserParams& base, const LoraAdapter* rec, const LoraAdapter& sem, const Tensor& x_t,
                   double t, double gamma);

/// (1 - sum gamma_i) eps_rec + sum_i gamma_i eps_{rec+sem_i}, summed left to right.
Tensor compose(const DenoiserParams& base, const LoraAdapter* rec, std::span<const LoraAdapter* const> sems,
               std::span<const double> gammas, const Tensor& x_t, double t);

/// Guidance-fused edit: eps_rec for the first off_steps steps, then
/// fused_noise with gamma = cfg.gamma_real. Starts from cfg.seed.
Tensor fused_edit(const DenoiserParams& base, const LoraAdapter* rec, const LoraAdapter& sem,
                  const SampleConfig& cfg, Trajectory* log = nullptr);

/// Multi-edit variant of fused_edit using compose.
Tensor compose_edit(const DenoiserParams& base, const LoraAdapter* rec, std::span<const LoraAdapter* const> sems,
                    std::span<const double> gammas, const SampleConfig& cfg);

/// Weight-space merge: delta W = delta W_rec + alpha * delta W_sem, realized as
/// a rank-(r_rec + r_sem) adapter with scale 1.
LoraAdapter linear_merge(const LoraAdapter& rec, const LoraAdapter& sem, double alpha);

/// Linear-merge edit: rec alone for the first off_steps steps, then rec plus
/// alpha times sem in weight space.
Tensor linear_edit(const DenoiserParams& base, const LoraAdapter* rec, const LoraAdapter& sem, double alpha,
                   const SampleConfig& cfg);

}  // namespace pairedit
