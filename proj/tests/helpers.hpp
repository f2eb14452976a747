// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "pairedit/network.hpp"
#include "pairedit/rng.hpp"
#include "pairedit/tensor.hpp"

namespace pairedit::testing {

// Scratch directory under the build tree, emptied per test.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pairedit_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
    Tensor out({a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.dim(1); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

inline NetworkShape tiny_shape(std::size_t data_dim = 3, std::size_t width = 16, std::size_t layers = 2,
                               std::size_t k = 2) {
    NetworkShape s;
    s.data_dim = data_dim;
    s.hidden_width = width;
    s.hidden_layers = layers;
    s.fourier_k = k;
    return s;
}

// Adapter with nonzero up factors so gradients flow through every parameter.
inline LoraAdapter random_adapter(RngState& rng, const DenoiserParams& base, std::size_t rank, double spread = 0.3) {
    LoraAdapter a = init_adapter(rng, base, rank, 0.1);
    for (auto& l : a.layers) {
        l.down = scale(gauss(rng, l.down.shape()), spread);
        l.up = scale(gauss(rng, l.up.shape()), spread);
    }
    return a;
}

}  // namespace pairedit::testing
