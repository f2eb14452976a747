// SPDX-License-Identifier: Apache-2.0
#include "pairedit/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pairedit {

namespace {

Tensor xavier(RngState& rng, std::size_t out, std::size_t in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w({out, in});
    for (double& v : w.data()) v = rng.next_uniform_in(-limit, limit);
    return w;
}

// x_t as an [n x d] matrix plus a flag for squeezing the result back to [d].
Tensor as_batch(const Tensor& x_t, std::size_t d) {
    if (x_t.rank() == 1 && x_t.dim(0) == d) return x_t.reshaped({1, d});
    if (x_t.rank() == 2 && x_t.dim(1) == d) return x_t;
    throw std::invalid_argument("predict_noise: input shape " + shape_to_string(x_t.shape()) +
                                " does not match data dim " + std::to_string(d));
}

void check_times(std::span<const double> t, std::size_t rows) {
    if (t.size() != rows) {
        throw std::invalid_argument("predict_noise: " + std::to_string(t.size()) + " time values for " +
                                    std::to_string(rows) + " rows");
    }
    for (double v : t) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("predict_noise: t outside [0, 1]");
    }
}

void add_bias(Tensor& z, const Tensor& bias) {
    for (std::size_t i = 0; i < z.dim(0); ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
    }
}

}  // namespace

DenoiserParams::DenoiserParams(NetworkShape shape, std::vector<Linear> layers)
    : shape_(shape), layers_(std::move(layers)) {
    if (shape_.data_dim == 0 || shape_.hidden_width == 0 || shape_.hidden_layers == 0) {
        throw std::invalid_argument("denoiser: dimensions must be positive");
    }
    if (shape_.image_height * shape_.image_width != 0 &&
        shape_.image_height * shape_.image_width != shape_.data_dim) {
        throw std::invalid_argument("denoiser: image size does not match data dim");
    }
    if (layers_.size() != shape_.num_linear()) {
        throw std::invalid_argument("denoiser: expected " + std::to_string(shape_.num_linear()) + " layers, got " +
                                    std::to_string(layers_.size()));
    }
    std::size_t in = shape_.input_dim();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::size_t out = i + 1 == layers_.size() ? shape_.data_dim : shape_.hidden_width;
        const Linear& l = layers_[i];
        if (l.weight.shape() != Shape{out, in} || l.bias.shape() != Shape{out}) {
            throw std::invalid_argument("denoiser: layer " + std::to_string(i) + " has shape " +
                                        shape_to_string(l.weight.shape()) + ", expected " +
                                        shape_to_string({out, in}));
        }
        in = out;
    }
}

DenoiserParams DenoiserParams::initialize(RngState& rng, const NetworkShape& shape) {
    std::vector<Linear> layers;
    std::size_t in = shape.input_dim();
    for (std::size_t i = 0; i < shape.num_linear(); ++i) {
        const std::size_t out = i + 1 == shape.num_linear() ? shape.data_dim : shape.hidden_width;
        layers.push_back({xavier(rng, out, in), Tensor({out})});
        in = out;
    }
    return DenoiserParams(shape, std::move(layers));
}

std::size_t DenoiserParams::min_layer_dim() const {
    std::size_t m = layers_.front().in_features();
    for (const auto& l : layers_) m = std::min({m, l.in_features(), l.out_features()});
    return m;
}

std::size_t LoraAdapter::rank() const {
    if (layers.empty()) return 0;
    return layers.front().down.dim(0);
}

LoraAdapter init_adapter(RngState& rng, const DenoiserParams& base, std::size_t rank, double init_scale) {
    if (rank == 0) throw std::invalid_argument("init_adapter: rank must be at least 1");
    if (rank > base.min_layer_dim()) {
        throw std::invalid_argument("init_adapter: rank " + std::to_string(rank) + " exceeds narrowest layer dim " +
                                    std::to_string(base.min_layer_dim()));
    }
    LoraAdapter adapter;
    for (const Linear& l : base.layers()) {
        LoraLayer layer{scale(gauss(rng, {rank, l.in_features()}), init_scale), Tensor({l.out_features(), rank})};
        adapter.layers.push_back(std::move(layer));
    }
    return adapter;
}

Tensor layer_delta(const LoraAdapter& adapter, std::size_t layer) {
    const LoraLayer& l = adapter.layers.at(layer);
    return scale(matmul(l.up, l.down), adapter.scale);
}

void check_adapter_matches(const DenoiserParams& base, const LoraAdapter& adapter) {
    if (adapter.layers.size() != base.layers().size()) {
        throw std::invalid_argument("adapter has " + std::to_string(adapter.layers.size()) +
                                    " layers, base has " + std::to_string(base.layers().size()));
    }
    for (std::size_t i = 0; i < adapter.layers.size(); ++i) {
        const auto& a = adapter.layers[i];
        const auto& l = base.layers()[i];
        if (a.down.rank() != 2 || a.up.rank() != 2 || a.down.dim(1) != l.in_features() ||
            a.up.dim(0) != l.out_features() || a.up.dim(1) != a.down.dim(0)) {
            throw std::invalid_argument("adapter layer " + std::to_string(i) + " does not fit base layer " +
                                        shape_to_string(l.weight.shape()));
        }
    }
}

Tensor flatten(const AdapterGrad& grad) {
    std::vector<double> flat;
    for (const auto& l : grad) {
        flat.insert(flat.end(), l.down.data().begin(), l.down.data().end());
        flat.insert(flat.end(), l.up.data().begin(), l.up.data().end());
    }
    const std::size_t n = flat.size();
    return Tensor({n}, std::move(flat));
}

Tensor flatten(const LoraAdapter& adapter) {
    return flatten(adapter.layers);
}

void assign_flat(LoraAdapter& adapter, const Tensor& flat) {
    std::size_t offset = 0;
    for (auto span : parameter_spans(adapter)) {
        if (offset + span.size() > flat.size()) throw std::invalid_argument("assign_flat: vector too short");
        std::copy_n(flat.data().begin() + static_cast<std::ptrdiff_t>(offset), span.size(), span.begin());
        offset += span.size();
    }
    if (offset != flat.size()) throw std::invalid_argument("assign_flat: vector too long");
}

std::vector<std::span<double>> parameter_spans(LoraAdapter& adapter) {
    std::vector<std::span<double>> out;
    for (auto& l : adapter.layers) {
        out.push_back(l.down.data());
        out.push_back(l.up.data());
    }
    return out;
}

std::vector<std::span<const double>> parameter_spans(const AdapterGrad& grad) {
    std::vector<std::span<const double>> out;
    for (const auto& l : grad) {
        out.push_back(l.down.data());
        out.push_back(l.up.data());
    }
    return out;
}

double AdapterStack::Entry::effective_scale() const {
    if (!active) return 0.0;
    return scale_override.value_or(adapter->scale);
}

AdapterStack::AdapterStack(std::initializer_list<const LoraAdapter*> adapters) {
    for (const LoraAdapter* a : adapters) push(*a);
}

std::size_t AdapterStack::push(const LoraAdapter& adapter, std::optional<double> scale_override, bool active) {
    entries_.push_back({&adapter, active, scale_override, false});
    return entries_.size() - 1;
}

std::size_t AdapterStack::push_delayed(const LoraAdapter& adapter, std::optional<double> scale_override) {
    entries_.push_back({&adapter, true, scale_override, true});
    return entries_.size() - 1;
}

Tensor time_features(std::span<const double> t, std::size_t fourier_k) {
    Tensor out({t.size(), 2 * fourier_k});
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t k = 1; k <= fourier_k; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) * t[i];
            out(i, 2 * (k - 1)) = std::sin(angle);
            out(i, 2 * (k - 1) + 1) = std::cos(angle);
        }
    }
    return out;
}

ForwardTrace forward_trace(const DenoiserParams& base, const AdapterStack& stack, const Tensor& x_t,
                           std::span<const double> t) {
    const Tensor x = as_batch(x_t, base.data_dim());
    check_times(t, x.dim(0));
    for (const auto& e : stack.entries()) check_adapter_matches(base, *e.adapter);

    ForwardTrace trace;
    const auto layers = base.layers();
    trace.projected.resize(layers.size());
    Tensor h = concat_cols(x, time_features(t, base.shape().fourier_k));
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const Linear& layer = layers[li];
        Tensor z = matmul_nt(h, layer.weight);
        add_bias(z, layer.bias);
        auto& projected = trace.projected[li];
        projected.resize(stack.size());
        for (std::size_t e = 0; e < stack.size(); ++e) {
            const double s = stack[e].effective_scale();
            // A zero scale contributes nothing; skipping keeps the result bit-identical to omission.
            if (s == 0.0) continue;
            const LoraLayer& lora = stack[e].adapter->layers[li];
            projected[e] = matmul_nt(h, lora.down);
            axpy_inplace(z, s, matmul_nt(projected[e], lora.up));
        }
        trace.inputs.push_back(std::move(h));
        if (li + 1 < layers.size()) {
            h = z;
            for (double& v : h.data()) v = std::tanh(v);
        }
        trace.pre_activations.push_back(std::move(z));
    }
    trace.output = trace.pre_activations.back();
    ensure_finite(trace.output, "predict_noise");
    return trace;
}

Tensor predict_noise(const DenoiserParams& base, const AdapterStack& stack, const Tensor& x_t,
                     std::span<const double> t) {
    Tensor out = forward_trace(base, stack, x_t, t).output;
    if (x_t.rank() == 1) return out.reshaped(x_t.shape());
    return out;
}

Tensor predict_noise(const DenoiserParams& base, const AdapterStack& stack, const Tensor& x_t, double t) {
    const std::size_t rows = x_t.rank() == 1 ? 1 : x_t.dim(0);
    const std::vector<double> times(rows, t);
    return predict_noise(base, stack, x_t, times);
}

BackwardResult backward(const DenoiserParams& base, const AdapterStack& stack, const ForwardTrace& trace,
                        const Tensor& grad_out, const BackwardRequest& request) {
    const auto layers = base.layers();
    Tensor g = grad_out.rank() == 1 ? grad_out.reshaped({1, grad_out.size()}) : grad_out;
    require_same_shape(g, trace.output, "backward: grad_out");

    BackwardResult result;
    result.adapters.resize(request.trainable.size());
    for (std::size_t k = 0; k < request.trainable.size(); ++k) {
        if (request.trainable[k] >= stack.size()) throw std::out_of_range("backward: trainable index out of range");
        result.adapters[k].resize(layers.size());
    }
    if (request.base) result.base.resize(layers.size());

    for (std::size_t li = layers.size(); li-- > 0;) {
        const Linear& layer = layers[li];
        const Tensor& h = trace.inputs[li];

        // g B for every contributing entry, shared by dA and the input gradient.
        std::vector<Tensor> g_up(stack.size());
        for (std::size_t e = 0; e < stack.size(); ++e) {
            if (!trace.projected[li][e].empty()) g_up[e] = matmul(g, stack[e].adapter->layers[li].up);
        }
        for (std::size_t k = 0; k < request.trainable.size(); ++k) {
            const std::size_t e = request.trainable[k];
            const LoraLayer& lora = stack[e].adapter->layers[li];
            LoraLayer& out = result.adapters[k][li];
            if (trace.projected[li][e].empty()) {
                out.down = Tensor(lora.down.shape());
                out.up = Tensor(lora.up.shape());
                continue;
            }
            const double s = stack[e].effective_scale();
            out.up = scale(matmul_tn(g, trace.projected[li][e]), s);
            out.down = scale(matmul_tn(g_up[e], h), s);
        }
        if (request.base) {
            result.base[li].weight = matmul_tn(g, h);
            Tensor db({g.dim(1)});
            for (std::size_t i = 0; i < g.dim(0); ++i)
                for (std::size_t j = 0; j < g.dim(1); ++j) db[j] += g(i, j);
            result.base[li].bias = std::move(db);
        }
        if (li == 0 && !request.input) break;

        Tensor gh = matmul(g, layer.weight);
        for (std::size_t e = 0; e < stack.size(); ++e) {
            if (g_up[e].empty()) continue;
            axpy_inplace(gh, stack[e].effective_scale(), matmul(g_up[e], stack[e].adapter->layers[li].down));
        }
        if (li == 0) {
            result.input = slice_cols(gh, 0, base.data_dim());
            if (grad_out.rank() == 1) result.input = result.input.reshaped(grad_out.shape());
            break;
        }
        // h = tanh(z_prev), dh/dz = 1 - h^2.
        for (std::size_t i = 0; i < gh.size(); ++i) {
            const double hv = h[i];
            gh[i] *= 1.0 - hv * hv;
        }
        g = std::move(gh);
    }
    return result;
}

std::vector<AdapterGrad> backprop_adapters(const DenoiserParams& base, const AdapterStack& stack,
                                           const Tensor& x_t, std::span<const double> t, const Tensor& grad_out,
                                           std::span<const std::size_t> trainable) {
    if (trainable.empty()) throw std::invalid_argument("backprop_adapters: empty trainable set");
    const ForwardTrace trace = forward_trace(base, stack, x_t, t);
    BackwardRequest request;
    request.trainable.assign(trainable.begin(), trainable.end());
    return backward(base, stack, trace, grad_out, request).adapters;
}

std::vector<Linear> backprop_base(const DenoiserParams& base, const Tensor& x_t, std::span<const double> t,
                                  const Tensor& grad_out) {
    const AdapterStack empty;
    const ForwardTrace trace = forward_trace(base, empty, x_t, t);
    BackwardRequest request;
    request.base = true;
    return backward(base, empty, trace, grad_out, request).base;
}

}  // namespace pairedit
