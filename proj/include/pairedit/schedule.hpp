// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "pairedit/tensor.hpp"

namespace pairedit {

enum class ScheduleKind { Standard, ContentPreserving };

/// Forward noising path.
///   Standard:          x_t = (1 - t) x0 + t eps
///   ContentPreserving: x_t = x0 + t beta eps
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::Standard;
    double beta = 1.0;

    static NoiseSchedule standard() { return {}; }
    static NoiseSchedule content_preserving(double beta);

    bool operator==(const NoiseSchedule&) const = default;
};

std::string to_string(const NoiseSchedule& sched);
/// "standard" or "cp:<beta>".
NoiseSchedule parse_schedule(const std::string& text);

Tensor forward_noise(const Tensor& x0, const Tensor& eps, double t, const NoiseSchedule& sched);

/// Row-wise forward noising of [n x d] batches with one t per row.
Tensor forward_noise_rows(const Tensor& x0, const Tensor& eps, std::span<const double> t,
                          const NoiseSchedule& sched);

/// d x_t / dt along the schedule's path: eps - x0 (Standard) or beta * eps
/// (ContentPreserving). This is the direction the Euler step removes, so it is
/// the regression target whenever the network should reproduce x0.
Tensor path_velocity(const Tensor& x0, const Tensor& eps, const NoiseSchedule& sched);

/// x_t - dt * eps_pred
Tensor euler_step(const Tensor& x_t, const Tensor& eps_pred, double dt);

/// x^A_{t-dt} - x^B_{t-dt} with both images noised by the same eps.
Tensor paired_delta(const Tensor& x0a, const Tensor& x0b, const Tensor& eps, double t, double dt,
                    const NoiseSchedule& sched);

}  // namespace pairedit
