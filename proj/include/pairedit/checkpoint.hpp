// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pairedit/network.hpp"

namespace pairedit {

// PFCK layout: "PFCK", u32 version, u32 manifest length, UTF-8 JSON manifest,
// then one PFT1 tensor per name in manifest["tensors"], in that order.
//
// Denoiser manifest: kind "denoiser", data_dim, hidden_width, hidden_layers,
// fourier_k, image_height, image_width, layers [{in, out}], seed.
// Adapter manifest: kind "adapter", rank, scale, role, seed, layers [{in, out}].

struct AdapterMeta {
    std::string role = "semantic";  // content | semantic | reconstruction | merged
    std::uint64_t seed = 0;         // training seed; for reconstruction adapters the sampler seed
};

void save_denoiser(const std::filesystem::path& path, const DenoiserParams& base, std::uint64_t seed);
DenoiserParams load_denoiser(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter, const AdapterMeta& meta);
LoraAdapter load_adapter(const std::filesystem::path& path, AdapterMeta* meta = nullptr);

}  // namespace pairedit
