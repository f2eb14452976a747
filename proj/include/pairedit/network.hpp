// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pairedit/rng.hpp"
#include "pairedit/tensor.hpp"

namespace pairedit {

struct Linear {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]

    std::size_t in_features() const { return weight.dim(1); }
    std::size_t out_features() const { return weight.dim(0); }
};

/// Architecture of the toy denoiser.
///
/// Wiring: input = concat(x [d], time features [2K]) where the time features are
/// [sin(2 pi k t), cos(2 pi k t)] for k = 1..K, interleaved per k. The input goes
/// through `hidden_layers` tanh layers of width `hidden_width` and a final
/// identity-activated linear layer back to d outputs. There are no skip inputs,
/// so layer i's out equals layer i+1's in.
struct NetworkShape {
    std::size_t data_dim = 8;
    std::size_t hidden_width = 64;
    std::size_t hidden_layers = 2;
    std::size_t fourier_k = 4;
    // Nonzero for image-mode data (data_dim == image_height * image_width).
    std::size_t image_height = 0;
    std::size_t image_width = 0;

    std::size_t input_dim() const { return data_dim + 2 * fourier_k; }
    std::size_t num_linear() const { return hidden_layers + 1; }
    bool operator==(const NetworkShape&) const = default;
};

/// Frozen base noise predictor. Immutable once constructed.
class DenoiserParams {
public:
    DenoiserParams(NetworkShape shape, std::vector<Linear> layers);

    /// Xavier-uniform weights, zero biases.
    static DenoiserParams initialize(RngState& rng, const NetworkShape& shape);

    const NetworkShape& shape() const noexcept { return shape_; }
    std::span<const Linear> layers() const noexcept { return layers_; }
    std::size_t data_dim() const noexcept { return shape_.data_dim; }
    /// Smallest in/out dimension over all linear layers; bounds the LoRA rank.
    std::size_t min_layer_dim() const;

    bool operator==(const DenoiserParams&) const = default;

private:
    NetworkShape shape_;
    std::vector<Linear> layers_;
};

/// Low-rank delta for one base linear layer: delta W = s * up * down.
struct LoraLayer {
    Tensor down;  // A: [r x in]
    Tensor up;    // B: [out x r]

    bool operator==(const LoraLayer&) const = default;
};

/// One adapter across every linear layer of the base (output layer included).
struct LoraAdapter {
    std::vector<LoraLayer> layers;
    double scale = 1.0;

    std::size_t rank() const;
    bool operator==(const LoraAdapter&) const = default;
};

/// Gradient container shaped like an adapter (down/up per layer).
using AdapterGrad = std::vector<LoraLayer>;

/// A ~ N(0, 1) * init_scale, B = 0, scale 1. Rank must not exceed the
/// narrowest layer dimension.
LoraAdapter init_adapter(RngState& rng, const DenoiserParams& base, std::size_t rank, double init_scale);

/// Dense delta s * B * A for one layer.
Tensor layer_delta(const LoraAdapter& adapter, std::size_t layer);

void check_adapter_matches(const DenoiserParams& base, const LoraAdapter& adapter);

/// Flattening in (down_0, up_0, down_1, up_1, ...) order.
Tensor flatten(const LoraAdapter& adapter);
Tensor flatten(const AdapterGrad& grad);
void assign_flat(LoraAdapter& adapter, const Tensor& flat);
std::vector<std::span<double>> parameter_spans(LoraAdapter& adapter);
std::vector<std::span<const double>> parameter_spans(const AdapterGrad& grad);

/// Non-owning ordered list of adapters applied on top of a base network.
/// Referenced adapters must outlive the stack.
class AdapterStack {
public:
    struct Entry {
        const LoraAdapter* adapter = nullptr;
        bool active = true;
        std::optional<double> scale_override;
        // Semantic adapters: held at zero for the sampler's first off_steps steps.
        bool delayed = false;

        /// 0 when inactive, otherwise the override or the adapter's own scale.
        double effective_scale() const;
    };

    AdapterStack() = default;
    AdapterStack(std::initializer_list<const LoraAdapter*> adapters);

    std::size_t push(const LoraAdapter& adapter, std::optional<double> scale_override = std::nullopt,
                     bool active = true);
    std::size_t push_delayed(const LoraAdapter& adapter, std::optional<double> scale_override = std::nullopt);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const Entry& operator[](std::size_t i) const { return entries_.at(i); }
    Entry& operator[](std::size_t i) { return entries_.at(i); }
    std::span<const Entry> entries() const noexcept { return entries_; }

private:
    std::vector<Entry> entries_;
};

/// Time features for every row, shape [n x 2K].
Tensor time_features(std::span<const double> t, std::size_t fourier_k);

/// Intermediate values needed by the backward pass.
struct ForwardTrace {
    std::vector<Tensor> inputs;                  // input to each linear layer, [n x in]
    std::vector<Tensor> pre_activations;         // [n x out]
    std::vector<std::vector<Tensor>> projected;  // [layer][stack entry] h A^T, empty when skipped
    Tensor output;                               // [n x d]
};

ForwardTrace forward_trace(const DenoiserParams& base, const AdapterStack& stack, const Tensor& x_t,
                           std::span<const double> t);

/// Predicted noise for a single sample [d] or a batch [n x d]; the batch form
/// takes one t per row. t must lie in [0, 1].
Tensor predict_noise(const DenoiserParams& base, const AdapterStack& stack, const Tensor& x_t, double t);
Tensor predict_noise(const DenoiserParams& base, const AdapterStack& stack, const Tensor& x_t,
                     std::span<const double> t);

struct BackwardResult {
    std::vector<AdapterGrad> adapters;  // one per requested stack index, same order
    std::vector<Linear> base;           // filled only when base gradients were requested
    Tensor input;                       // dL/dx_t, filled only when requested
};

struct BackwardRequest {
    std::vector<std::size_t> trainable;  // stack indices
    bool base = false;
    bool input = false;
};

/// Reverse pass of sum(output * grad_out) through a recorded forward trace.
BackwardResult backward(const DenoiserParams& base, const AdapterStack& stack, const ForwardTrace& trace,
                        const Tensor& grad_out, const BackwardRequest& request);

/// Gradients of sum(output * grad_out) w.r.t. the A and B of each trainable
/// stack entry. Entries outside `trainable` get no gradient storage at all and
/// the base never receives gradients. Throws on an empty trainable set.
std::vector<AdapterGrad> backprop_adapters(const DenoiserParams& base, const AdapterStack& stack,
                                           const Tensor& x_t, std::span<const double> t, const Tensor& grad_out,
                                           std::span<const std::size_t> trainable);

/// Gradients w.r.t. base weights and biases; only used while pretraining.
std::vector<Linear> backprop_base(const DenoiserParams& base, const Tensor& x_t, std::span<const double> t,
                                  const Tensor& grad_out);

}  // namespace pairedit
