// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairedit/datagen.hpp"
#include "pairedit/network.hpp"
#include "pairedit/sampler.hpp"
#include "pairedit/trainer.hpp"

namespace pairedit {

/// ||(edited - original) - ((edited - original) . g) g|| / ||original||, with g unit length.
double identity_drift(const Tensor& original, const Tensor& edited, const Tensor& g);

struct Alignment {
    double cosine = 0.0;
    bool zero_delta = false;  // edit had zero length; cosine reported as 0
};

/// Cosine between edited - original and g.
Alignment alignment(const Tensor& original, const Tensor& edited, const Tensor& g);

/// (edited - original) . g
double projection(const Tensor& original, const Tensor& edited, const Tensor& g);

struct ReportRow {
    std::string semantic;
    std::string method;
    double scale = 0.0;
    std::uint64_t seed = 0;
    double identity_drift = 0.0;
    double alignment = 0.0;
    double projection = 0.0;

    bool operator==(const ReportRow&) const = default;
};

/// CSV header: semantic,method,scale,seed,identity_drift,alignment,projection
/// Floats are written with %.17g so parse -> serialize reproduces the bytes.
struct EditReport {
    std::vector<ReportRow> rows;

    std::string to_csv() const;
    static EditReport parse_csv(const std::string& text);
    void save(const std::filesystem::path& path) const;
    void append(const EditReport& other);
};

struct ReportSummary {
    double identity_drift = 0.0;
    double alignment = 0.0;
    double projection = 0.0;
    std::size_t count = 0;
};

/// Means over rows matching method (and scale when given).
ReportSummary summarize(const EditReport& report, const std::string& method,
                        std::optional<double> scale = std::nullopt);

/// Fraction of seeds whose projection strictly increases along `scales`.
double monotone_fraction(const EditReport& report, const std::string& method, std::span<const double> scales);

/// Per-sample unit ground-truth edit direction for an original sample.
using DirectionFn = std::function<Tensor(const Tensor& original)>;
DirectionFn fixed_direction(Tensor g);
/// Direction of semantic.delta(original); falls back to `fallback` where the delta vanishes.
DirectionFn semantic_direction(Semantic semantic, Tensor fallback);

/// Seeds first .. first + count - 1.
std::vector<std::uint64_t> eval_seeds(std::size_t count = 64, std::uint64_t first = 1000);

/// Adapters used to edit generated samples.
struct EditAdapters {
    const LoraAdapter* content = nullptr;  // optional, active at every step
    const LoraAdapter* semantic = nullptr;  // delayed
};

/// One row per (scale, seed): originals are generated without the semantic
/// adapter, edits with it switched on after cfg.off_steps at each scale.
EditReport scale_sweep(const DenoiserParams& base, const EditAdapters& adapters, std::span<const double> scales,
                       std::span<const std::uint64_t> seeds, const SampleConfig& cfg, const DirectionFn& direction,
                       const std::string& semantic_name, const std::string& method);

struct AblationOptions {
    std::span<const std::uint64_t> seeds;
    SampleConfig sample;
    // Variants are re-scaled until their mean projection is within
    // calibration_tol (relative) of the full method's at scale 1.
    std::size_t calibration_rounds = 6;
    double calibration_tol = 0.01;
    double min_scale = 0.05;
    double max_scale = 20.0;
};

struct AblationEntry {
    Method method = Method::Full;
    double scale = 1.0;
    ReportSummary summary;
};

struct AblationResult {
    EditReport report;  // one row per method: means over the eval seeds, seed = training seed
    std::vector<AblationEntry> entries;  // full, A, B, C
};

/// Trains the full method and variants A, B, C with the same seed and data and
/// evaluates each at a matched mean edit projection.
AblationResult ablation_table(const DenoiserParams& base, const PairSet& pairs, const TrainConfig& cfg,
                              const AblationOptions& options, const DirectionFn& direction);

struct RealInput {
    Tensor x;               // the "real" sample [d]
    LoraAdapter rec;        // its reconstruction adapter
    std::uint64_t seed = 0; // sampler seed the adapter was fitted for
};

/// Guidance fusion ("fused") versus weight-space merge ("linear") at each
/// weight in `gammas`. The original is the reconstruction (weight 0).
EditReport fusion_compare(const DenoiserParams& base, std::span<const RealInput> inputs, const LoraAdapter& sem,
                          std::span<const double> gammas, const SampleConfig& cfg, const DirectionFn& direction,
                          const std::string& semantic_name);

}  // namespace pairedit
