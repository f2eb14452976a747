// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pairedit/network.hpp"
#include "pairedit/schedule.hpp"

namespace pairedit {

/// One training minibatch. Row i of x0a and x0b is noised with the same
/// eps0 row at time t[i].
struct PairedBatch {
    Tensor x0a;   // [n x d] sources
    Tensor x0b;   // [n x d] targets
    Tensor eps0;  // [n x d] shared noise
    std::vector<double> t;

    std::size_t size() const { return t.size(); }
    void validate() const;
};

/// What the content adapter regresses onto.
enum class ContentTarget {
    Velocity,     // path velocity of the content schedule (eps0 - x0 or beta * eps0)
    PlainNoise,   // eps0
    ScaledNoise,  // beta * eps0
};

std::string to_string(ContentTarget target);
ContentTarget parse_content_target(const std::string& text);

struct LossConfig {
    double eta = 4.0;         // weight of x0a - x0b in the semantic target
    double lambda_sem = 1.0;  // weight of the semantic loss in the joint objective
    double beta = 3.0;        // noise strength of the content-preserving schedule
    ScheduleKind content_schedule = ScheduleKind::ContentPreserving;
    ScheduleKind semantic_schedule = ScheduleKind::ContentPreserving;
    ContentTarget content_target = ContentTarget::Velocity;
    // Sampler step 1 / num_steps; only enters the time-dependent Standard-schedule target.
    double delta_t = 1.0 / 28.0;

    NoiseSchedule content() const;
    NoiseSchedule semantic() const;
    void validate() const;
};

struct LossResult {
    double value = 0.0;
    std::vector<AdapterGrad> grads;  // one per trained adapter
};

/// Mean over all elements of (pred - target)^2, plus d loss / d pred.
double mse(const Tensor& pred, const Tensor& target, Tensor* grad = nullptr);

/// beta * eps0 + eta * (x0a - x0b)
Tensor semantic_target(const Tensor& eps0, const Tensor& x0a, const Tensor& x0b, double beta, double eta);

/// Weight on x0a - x0b for a row at time t: eta under the content-preserving
/// schedule, eta * (1 - t + delta_t) under the standard schedule.
double semantic_weight(const LossConfig& cfg, double t);

/// Row-wise semantic target for the configured semantic schedule.
Tensor semantic_target_rows(const PairedBatch& batch, const LossConfig& cfg);

/// Row-wise reconstruction target for x0 under the content settings.
Tensor content_target_rows(const Tensor& x0, const Tensor& eps0, const LossConfig& cfg);

/// Reconstruction loss of the content adapter on noised sources. Gradients
/// for the content adapter only.
LossResult content_loss(const DenoiserParams& base, const LoraAdapter& content, const PairedBatch& batch,
                        const LossConfig& cfg);

/// Joint {content, semantic} prediction regressed onto the semantic target.
/// Gradients for the semantic adapter only; the content adapter is a
/// constant. `content` may be null (no content adapter in the stack).
LossResult semantic_loss(const DenoiserParams& base, const LoraAdapter* content, const LoraAdapter& semantic,
                         const PairedBatch& batch, const LossConfig& cfg);

/// content + lambda * semantic
double joint_objective(double content_value, double semantic_value, double lambda_sem);

/// Ablation A: one adapter that reconstructs targets at scale +1 and sources
/// at scale -1, both on the standard schedule with shared noise.
LossResult variant_a_loss(const DenoiserParams& base, const LoraAdapter& adapter, const PairedBatch& batch,
                          const LossConfig& cfg);

/// Ablation B: semantic loss with no content adapter in the stack.
LossResult variant_b_loss(const DenoiserParams& base, const LoraAdapter& semantic, const PairedBatch& batch,
                          const LossConfig& cfg);

/// Ablation C: semantic loss on the standard schedule with the time-dependent
/// target weight eta * (1 - t + delta_t).
LossResult variant_c_loss(const DenoiserParams& base, const LoraAdapter& content, const LoraAdapter& semantic,
                          const PairedBatch& batch, const LossConfig& cfg);

}  // namespace pairedit
