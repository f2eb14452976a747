// SPDX-License-Identifier: Apache-2.0
#include "pairedit/losses.hpp"

#include <stdexcept>

namespace pairedit {

void PairedBatch::validate() const {
    if (t.empty()) throw std::invalid_argument("empty batch");
    require_same_shape(x0a, x0b, "paired batch");
    require_same_shape(x0a, eps0, "paired batch noise");
    if (x0a.rank() != 2 || x0a.dim(0) != t.size()) {
        throw std::invalid_argument("paired batch: expected one t per row");
    }
}

std::string to_string(ContentTarget target) {
    switch (target) {
        case ContentTarget::Velocity: return "velocity";
        case ContentTarget::PlainNoise: return "plain_noise";
        case ContentTarget::ScaledNoise: return "scaled_noise";
    }
    return "velocity";
}

ContentTarget parse_content_target(const std::string& text) {
    if (text == "velocity") return ContentTarget::Velocity;
    if (text == "plain_noise") return ContentTarget::PlainNoise;
    if (text == "scaled_noise") return ContentTarget::ScaledNoise;
    throw std::invalid_argument("unknown content target '" + text + "'");
}

NoiseSchedule LossConfig::content() const {
    return content_schedule == ScheduleKind::Standard ? NoiseSchedule::standard()
                                                      : NoiseSchedule::content_preserving(beta);
}

NoiseSchedule LossConfig::semantic() const {
    return semantic_schedule == ScheduleKind::Standard ? NoiseSchedule::standard()
                                                       : NoiseSchedule::content_preserving(beta);
}

void LossConfig::validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!(lambda_sem >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(delta_t > 0.0 && delta_t <= 1.0)) throw std::invalid_argument("delta_t must lie in (0, 1]");
}

double mse(const Tensor& pred, const Tensor& target, Tensor* grad) {
    require_same_shape(pred, target, "mse");
    const double n = static_cast<double>(pred.size());
    double acc = 0.0;
    if (grad) *grad = Tensor(pred.shape());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - target[i];
        acc += r * r;
        if (grad) (*grad)[i] = 2.0 * r / n;
    }
    return acc / n;
}

Tensor semantic_target(const Tensor& eps0, const Tensor& x0a, const Tensor& x0b, double beta, double eta) {
    return axpy(scale(eps0, beta), eta, sub(x0a, x0b));
}

double semantic_weight(const LossConfig& cfg, double t) {
    if (cfg.semantic_schedule == ScheduleKind::ContentPreserving) return cfg.eta;
    return cfg.eta * (1.0 - t + cfg.delta_t);
}

Tensor semantic_target_rows(const PairedBatch& batch, const LossConfig& cfg) {
    const NoiseSchedule sched = cfg.semantic();
    // Reconstruction direction of the source plus the weighted paired difference.
    Tensor target = path_velocity(batch.x0a, batch.eps0, sched);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double w = semantic_weight(cfg, batch.t[i]);
        auto out = target.row(i);
        auto a = batch.x0a.row(i);
        auto b = batch.x0b.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * (a[j] - b[j]);
    }
    ensure_finite(target, "semantic target");
    return target;
}

Tensor content_target_rows(const Tensor& x0, const Tensor& eps0, const LossConfig& cfg) {
    switch (cfg.content_target) {
        case ContentTarget::Velocity: return path_velocity(x0, eps0, cfg.content());
        case ContentTarget::PlainNoise: return eps0;
        case ContentTarget::ScaledNoise: return scale(eps0, cfg.beta);
    }
    throw std::logic_error("unhandled content target");
}

LossResult content_loss(const DenoiserParams& base, const LoraAdapter& content, const PairedBatch& batch,
                        const LossConfig& cfg) {
    batch.validate();
    const Tensor x_t = forward_noise_rows(batch.x0a, batch.eps0, batch.t, cfg.content());
    const Tensor target = content_target_rows(batch.x0a, batch.eps0, cfg);
    const AdapterStack stack{&content};
    const ForwardTrace trace = forward_trace(base, stack, x_t, batch.t);
    LossResult result;
    Tensor grad;
    result.value = mse(trace.output, target, &grad);
    result.grads = backward(base, stack, trace, grad, {{0}, false, false}).adapters;
    return result;
}

LossResult semantic_loss(const DenoiserParams& base, const LoraAdapter* content, const LoraAdapter& semantic,
                         const PairedBatch& batch, const LossConfig& cfg) {
    batch.validate();
    const Tensor x_t = forward_noise_rows(batch.x0a, batch.eps0, batch.t, cfg.semantic());
    const Tensor target = semantic_target_rows(batch, cfg);
    AdapterStack stack;
    if (content) stack.push(*content);
    const std::size_t sem_index = stack.push(semantic);
    const ForwardTrace trace = forward_trace(base, stack, x_t, batch.t);
    LossResult result;
    Tensor grad;
    result.value = mse(trace.output, target, &grad);
    // Only the semantic entry is trainable: the content adapter gets no gradient storage.
    result.grads = backward(base, stack, trace, grad, {{sem_index}, false, false}).adapters;
    return result;
}

double joint_objective(double content_value, double semantic_value, double lambda_sem) {
    return content_value + lambda_sem * semantic_value;
}

LossResult variant_a_loss(const DenoiserParams& base, const LoraAdapter& adapter, const PairedBatch& batch,
                          const LossConfig& /*cfg*/) {
    batch.validate();
    const NoiseSchedule sched = NoiseSchedule::standard();
    LossResult result;
    result.grads.resize(1);

    // +1 reconstructs the target image, -1 reconstructs the source image.
    const struct {
        const Tensor& x0;
        double sign;
    } terms[] = {{batch.x0b, 1.0}, {batch.x0a, -1.0}};
    for (const auto& term : terms) {
        const Tensor x_t = forward_noise_rows(term.x0, batch.eps0, batch.t, sched);
        const Tensor target = path_velocity(term.x0, batch.eps0, sched);
        AdapterStack stack;
        stack.push(adapter, term.sign * adapter.scale);
        const ForwardTrace trace = forward_trace(base, stack, x_t, batch.t);
        Tensor grad;
        result.value += mse(trace.output, target, &grad);
        AdapterGrad g = std::move(backward(base, stack, trace, grad, {{0}, false, false}).adapters.front());
        if (result.grads[0].empty()) {
            result.grads[0] = std::move(g);
        } else {
            for (std::size_t l = 0; l < g.size(); ++l) {
                axpy_inplace(result.grads[0][l].down, 1.0, g[l].down);
                axpy_inplace(result.grads[0][l].up, 1.0, g[l].up);
            }
        }
    }
    return result;
}

LossResult variant_b_loss(const DenoiserParams& base, const LoraAdapter& semantic, const PairedBatch& batch,
                          const LossConfig& cfg) {
    return semantic_loss(base, nullptr, semantic, batch, cfg);
}

LossResult variant_c_loss(const DenoiserParams& base, const LoraAdapter& content, const LoraAdapter& semantic,
                          const PairedBatch& batch, const LossConfig& cfg) {
    LossConfig standard = cfg;
    standard.semantic_schedule = ScheduleKind::Standard;
    return semantic_loss(base, &content, semantic, batch, standard);
}

}  // namespace pairedit
