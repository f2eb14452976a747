// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "pairedit/tensor.hpp"

namespace pairedit {

enum class DataMode { Vector, Image };
enum class SemanticKind { Offset, LinearMap, RegionBrighten };

/// Description of a synthetic paired dataset.
///
/// Vector mode draws sources from an equal-weight Gaussian mixture whose
/// component means are mixture_center + mixture_spread * N(0, I) (drawn from
/// the spec seed) with isotropic std component_std. Image mode draws one
/// anti-aliased bright disc on a dark background with a uniformly random
/// center in the middle half of the canvas and radius in [radius_min,
/// radius_max].
///
/// Semantics:
///   Offset          x_B = x_A + delta; delta is either `offset` verbatim or a
///                   random unit direction times offset_magnitude.
///   LinearMap       x_B = M x_A with M = I + linear_strength * Q / sqrt(d), Q ~ N(0, I).
///   RegionBrighten  x_B = x_A + amount on the rectangle rows [r0, r1) x cols [c0, c1).
struct PairSpec {
    std::string name = "V1";
    DataMode mode = DataMode::Vector;
    std::size_t dim = 8;
    std::size_t height = 16;
    std::size_t width = 16;

    std::size_t mixture_components = 3;
    double mixture_center = 1.0;
    double mixture_spread = 1.0;
    double component_std = 0.3;
    double radius_min = 2.0;
    double radius_max = 4.5;

    SemanticKind semantic = SemanticKind::Offset;
    double offset_magnitude = 1.5;
    std::optional<Tensor> offset;  // explicit delta overrides the random direction
    double linear_strength = 0.3;
    std::size_t region_r0 = 4, region_c0 = 4, region_r1 = 12, region_c1 = 12;
    double region_amount = 0.5;

    std::size_t n_pairs = 3;
    std::uint64_t seed = 0;

    std::size_t data_dim() const { return mode == DataMode::Vector ? dim : height * width; }
    void validate() const;
};

/// Built-in benchmark specs: V1, V2, I1, I2.
PairSpec benchmark_spec(const std::string& name);

/// Spec from key=value pairs; `benchmark=<name>` selects the starting preset.
PairSpec spec_from_keys(const std::map<std::string, std::string>& keys);
std::map<std::string, std::string> spec_to_keys(const PairSpec& spec);

/// Fully resolved ground-truth transform of a spec.
class Semantic {
public:
    explicit Semantic(const PairSpec& spec);

    /// Applies the edit to one sample [d] or to every row of [n x d].
    Tensor apply(const Tensor& x) const;
    /// apply(x) - x
    Tensor delta(const Tensor& x) const;
    SemanticKind kind() const { return kind_; }

private:
    SemanticKind kind_;
    std::size_t dim_;
    Tensor offset_;  // Offset and RegionBrighten
    Tensor matrix_;  // LinearMap
};

struct PairSet {
    PairSpec spec;
    Tensor x0a;  // [n x d]
    Tensor x0b;  // [n x d]
    Tensor g;    // [d] unit ground-truth direction; zeros when undefined
    bool g_defined = false;
};

/// Unit vector along mean(x0b - x0a); std::nullopt when that mean is zero.
std::optional<Tensor> ground_truth_direction(const Tensor& x0a, const Tensor& x0b);

PairSet make_pairs(const PairSpec& spec);
/// n i.i.d. sources from the spec's content distribution, on a stream
/// independent of make_pairs.
Tensor make_pretrain_set(const PairSpec& spec, std::size_t n);
/// Mean of the content distribution (exact for vector mode).
Tensor content_mean(const PairSpec& spec);

// PFDS layout: "PFDS", u32 version, u32 manifest length, UTF-8 JSON manifest,
// then PFT1 tensors x0a, x0b, g in that order.
void save_pairs(const std::filesystem::path& path, const PairSet& pairs);
PairSet load_pairs(const std::filesystem::path& path);

}  // namespace pairedit
