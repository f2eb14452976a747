// SPDX-License-Identifier: Apache-2.0
#include "pairedit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pairedit {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64_mix(seed ^ splitmix64_mix(tag + kGolden));
}

std::uint64_t RngState::next_u64() {
    ++counter;
    return splitmix64_mix(seed + counter * kGolden);
}

double RngState::next_uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::size_t RngState::next_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("next_index: empty range");
    // (0,1] -> [0,n); the u == 1 endpoint folds onto n-1.
    const auto i = static_cast<std::size_t>((1.0 - next_uniform()) * static_cast<double>(n));
    return i < n ? i : n - 1;
}

double RngState::next_uniform_in(double lo, double hi) {
    return lo + (hi - lo) * (1.0 - next_uniform());
}

Tensor gauss(RngState& rng, const Shape& shape) {
    Tensor out(shape);
    auto data = out.data();
    for (std::size_t i = 0; i < data.size(); i += 2) {
        const double u1 = rng.next_uniform();
        const double u2 = rng.next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        data[i] = r * std::cos(theta);
        if (i + 1 < data.size()) data[i + 1] = r * std::sin(theta);
    }
    return out;
}

}  // namespace pairedit
