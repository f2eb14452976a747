// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pairedit/adam.hpp"
#include "pairedit/losses.hpp"
#include "pairedit/network.hpp"

namespace pairedit {

enum class Method {
    Full,      // content + semantic adapters, content-preserving semantic loss
    VariantA,  // single adapter with opposing +1/-1 reconstruction
    VariantB,  // semantic adapter only, no content adapter
    VariantC,  // full method on the standard schedule
};

std::string to_string(Method method);
Method parse_method(const std::string& text);

struct PretrainConfig {
    std::size_t steps = 2000;
    double lr = 2e-3;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    std::size_t hidden_width = 64;
    std::size_t hidden_layers = 2;
    std::size_t fourier_k = 4;
    AdamConfig adam;
};

struct PretrainResult {
    DenoiserParams base;
    std::vector<double> losses;  // per step
};

/// Rectified-flow pretraining of the base on unpaired sources: standard
/// schedule, t ~ U[0, 1), target eps - x0.
PretrainResult pretrain_base(const Tensor& dataset, const PretrainConfig& cfg, std::size_t image_height = 0,
                             std::size_t image_width = 0);

struct TrainConfig {
    std::size_t steps = 500;
    double lr = 2e-3;
    std::size_t batch_size = 16;
    std::size_t rank = 4;
    double init_scale = 0.1;
    std::uint64_t seed = 0;
    double t_min = 0.05;
    LossConfig loss;
    AdamConfig adam;
    Method method = Method::Full;

    void validate() const;
};

struct StepLog {
    std::size_t step = 0;
    double content = 0.0;
    double semantic = 0.0;
    double total = 0.0;
};

struct PairTrainResult {
    std::optional<LoraAdapter> content;  // absent for variants A and B
    LoraAdapter semantic;                // the edit adapter (the single adapter for variant A)
    std::vector<StepLog> log;
};

/// Draws one minibatch: rows sampled without replacement when there are at
/// least batch_size pairs, with replacement otherwise; one shared eps0 row and
/// one t ~ U[t_min, 1] per row.
PairedBatch sample_batch(RngState& rng, const Tensor& x0a, const Tensor& x0b, std::size_t batch_size,
                         double t_min);

/// Joint training of content and semantic adapters (or an ablation variant)
/// on source/target pairs given as [n x d] matrices.
PairTrainResult train_pairedit(const DenoiserParams& base, const Tensor& x0a, const Tensor& x0b,
                               const TrainConfig& cfg);

/// Loss log CSV: header "step,L_content,L_semantic,L_total".
void write_loss_log(const std::filesystem::path& path, const std::vector<StepLog>& log);
std::string loss_log_csv(const std::vector<StepLog>& log);

struct ReconConfig {
    std::size_t steps = 300;
    double lr = 1e-2;
    std::size_t rank = 4;
    double init_scale = 0.1;
    std::uint64_t seed = 0;  // seed of the sampler noise the adapter learns to map onto the input
    std::size_t num_steps = 28;
    AdamConfig adam;
};

/// Fits a reconstruction adapter so that sampling from cfg.seed with only this
/// adapter reproduces `x_real`. Minimizes the mean squared error of the final
/// sampler state, back-propagated through every Euler step.
LoraAdapter fit_reconstruction_lora(const DenoiserParams& base, const Tensor& x_real, const ReconConfig& cfg,
                                    std::vector<double>* losses = nullptr);

}  // namespace pairedit
