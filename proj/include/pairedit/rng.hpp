// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "pairedit/tensor.hpp"

namespace pairedit {

/// Counter-based random stream.
///
/// Draw number `counter` of stream `seed` is
///   splitmix64_mix(seed + (counter + 1) * 0x9E3779B97F4A7C15)
/// where splitmix64_mix is the SplitMix64 output finalizer. Uniforms use the top
/// 53 bits mapped to (0, 1]. Normals use Box-Muller on two consecutive uniforms
/// (u1, u2): r = sqrt(-2 ln u1), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2), filled
/// pairwise in row-major order; an odd trailing element discards z1.
/// The stream is therefore a pure function of (seed, counter).
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit RngState(std::uint64_t s = 0, std::uint64_t c = 0) : seed(s), counter(c) {}

    std::uint64_t next_u64();
    /// Uniform on (0, 1].
    double next_uniform();
    /// Uniform integer in [0, n).
    std::size_t next_index(std::size_t n);
    double next_uniform_in(double lo, double hi);

    bool operator==(const RngState&) const = default;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

/// Derives an independent stream seed from a parent seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// I.i.d. standard-normal tensor; advances `rng` by 2 * ceil(size / 2) draws.
Tensor gauss(RngState& rng, const Shape& shape);

}  // namespace pairedit
