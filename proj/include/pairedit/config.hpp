// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "pairedit/sampler.hpp"
#include "pairedit/trainer.hpp"

namespace pairedit {

using KeyValues = std::map<std::string, std::string>;

/// One `key = value` per line; blank lines and lines starting with '#' are
/// skipped. Repeated keys are an error.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

// Each apply_* consumes the keys it knows and throws on anything else.
//
// pretrain: steps, lr, batch_size, seed, hidden_width, hidden_layers, fourier_k,
//           adam_beta1, adam_beta2, adam_eps
// train:    steps, lr, batch_size, rank, init_scale, seed, t_min, method, eta,
//           lambda_sem, beta, content_schedule (standard|cp),
//           semantic_schedule (standard|cp), content_target, delta_t,
//           adam_beta1, adam_beta2, adam_eps
// sample:   num_steps, off_steps, scale, gamma_real, seed
// recon:    steps, lr, rank, init_scale, seed, num_steps, adam_beta1, adam_beta2, adam_eps
void apply_pretrain_keys(PretrainConfig& cfg, const KeyValues& keys);
void apply_train_keys(TrainConfig& cfg, const KeyValues& keys);
void apply_sample_keys(SampleConfig& cfg, const KeyValues& keys);
void apply_recon_keys(ReconConfig& cfg, const KeyValues& keys);

double parse_double_value(const std::string& key, const std::string& value);
std::size_t parse_size_value(const std::string& key, const std::string& value);
std::uint64_t parse_u64_value(const std::string& key, const std::string& value);

}  // namespace pairedit
