// SPDX-License-Identifier: Apache-2.0
#include "pairedit/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pairedit/tensor_io.hpp"

namespace pairedit {

namespace {

constexpr std::uint32_t kPfckVersion = 1;

using nlohmann::json;

void write_checkpoint(const std::filesystem::path& path, const json& manifest, const std::vector<const Tensor*>& tensors) {
    const std::string text = manifest.dump();
    write_atomically(path, [&](std::ostream& os) {
        write_magic(os, "PFCK");
        write_u32(os, kPfckVersion);
        write_u32(os, static_cast<std::uint32_t>(text.size()));
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const Tensor* t : tensors) write_tensor(os, *t);
    });
}

json read_manifest(std::istream& is, const std::filesystem::path& path, const char* kind) {
    expect_magic(is, "PFCK");
    const std::uint32_t version = read_u32(is);
    if (version != kPfckVersion) throw std::runtime_error("unsupported PFCK version " + std::to_string(version));
    const std::uint32_t len = read_u32(is);
    std::string text(len, '\0');
    is.read(text.data(), len);
    if (!is) throw std::runtime_error("truncated PFCK manifest in " + path.string());
    json manifest = json::parse(text);
    if (manifest.at("kind").get<std::string>() != kind) {
        throw std::runtime_error(path.string() + " is not a " + kind + " checkpoint");
    }
    return manifest;
}

json layer_shapes(std::span<const Linear> layers) {
    json out = json::array();
    for (const auto& l : layers) out.push_back({{"in", l.in_features()}, {"out", l.out_features()}});
    return out;
}

}  // namespace

void save_denoiser(const std::filesystem::path& path, const DenoiserParams& base, std::uint64_t seed) {
    const auto& s = base.shape();
    json manifest;
    manifest["kind"] = "denoiser";
    manifest["data_dim"] = s.data_dim;
    manifest["hidden_width"] = s.hidden_width;
    manifest["hidden_layers"] = s.hidden_layers;
    manifest["fourier_k"] = s.fourier_k;
    manifest["image_height"] = s.image_height;
    manifest["image_width"] = s.image_width;
    manifest["layers"] = layer_shapes(base.layers());
    manifest["seed"] = seed;
    std::vector<std::string> names;
    std::vector<const Tensor*> tensors;
    for (std::size_t i = 0; i < base.layers().size(); ++i) {
        names.push_back("layer" + std::to_string(i) + ".weight");
        names.push_back("layer" + std::to_string(i) + ".bias");
        tensors.push_back(&base.layers()[i].weight);
        tensors.push_back(&base.layers()[i].bias);
    }
    manifest["tensors"] = names;
    write_checkpoint(path, manifest, tensors);
}

DenoiserParams load_denoiser(const std::filesystem::path& path, std::uint64_t* seed) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    const json m = read_manifest(is, path, "denoiser");
    NetworkShape shape;
    shape.data_dim = m.at("data_dim").get<std::size_t>();
    shape.hidden_width = m.at("hidden_width").get<std::size_t>();
    shape.hidden_layers = m.at("hidden_layers").get<std::size_t>();
    shape.fourier_k = m.at("fourier_k").get<std::size_t>();
    shape.image_height = m.at("image_height").get<std::size_t>();
    shape.image_width = m.at("image_width").get<std::size_t>();
    std::vector<Linear> layers(shape.num_linear());
    for (auto& l : layers) {
        l.weight = read_tensor(is);
        l.bias = read_tensor(is);
    }
    if (seed) *seed = m.at("seed").get<std::uint64_t>();
    return DenoiserParams(shape, std::move(layers));
}

void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter, const AdapterMeta& meta) {
    json manifest;
    manifest["kind"] = "adapter";
    manifest["rank"] = adapter.rank();
    manifest["scale"] = adapter.scale;
    manifest["role"] = meta.role;
    manifest["seed"] = meta.seed;
    json layers = json::array();
    std::vector<std::string> names;
    std::vector<const Tensor*> tensors;
    for (std::size_t i = 0; i < adapter.layers.size(); ++i) {
        const auto& l = adapter.layers[i];
        layers.push_back({{"in", l.down.dim(1)}, {"out", l.up.dim(0)}, {"rank", l.down.dim(0)}});
        names.push_back("layer" + std::to_string(i) + ".down");
        names.push_back("layer" + std::to_string(i) + ".up");
        tensors.push_back(&l.down);
        tensors.push_back(&l.up);
    }
    manifest["layers"] = layers;
    manifest["tensors"] = names;
    write_checkpoint(path, manifest, tensors);
}

LoraAdapter load_adapter(const std::filesystem::path& path, AdapterMeta* meta) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    const json m = read_manifest(is, path, "adapter");
    LoraAdapter adapter;
    adapter.scale = m.at("scale").get<double>();
    for (std::size_t i = 0; i < m.at("layers").size(); ++i) {
        LoraLayer l;
        l.down = read_tensor(is);
        l.up = read_tensor(is);
        adapter.layers.push_back(std::move(l));
    }
    if (meta) {
        meta->role = m.at("role").get<std::string>();
        meta->seed = m.at("seed").get<std::uint64_t>();
    }
    return adapter;
}

}  // namespace pairedit
