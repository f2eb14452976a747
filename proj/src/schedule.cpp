// SPDX-License-Identifier: Apache-2.0
#include "pairedit/schedule.hpp"

#include <sstream>
#include <stdexcept>

namespace pairedit {

namespace {

void check_t(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument(std::string(what) + ": t outside [0, 1]");
}

}  // namespace

NoiseSchedule NoiseSchedule::content_preserving(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("content-preserving schedule needs beta > 0");
    return {ScheduleKind::ContentPreserving, beta};
}

std::string to_string(const NoiseSchedule& sched) {
    if (sched.kind == ScheduleKind::Standard) return "standard";
    std::ostringstream os;
    os.precision(17);
    os << "cp:" << sched.beta;
    return os.str();
}

NoiseSchedule parse_schedule(const std::string& text) {
    if (text == "standard") return NoiseSchedule::standard();
    if (text.rfind("cp:", 0) == 0) return NoiseSchedule::content_preserving(std::stod(text.substr(3)));
    throw std::invalid_argument("unknown noise schedule '" + text + "' (expected standard or cp:<beta>)");
}

Tensor forward_noise(const Tensor& x0, const Tensor& eps, double t, const NoiseSchedule& sched) {
    require_same_shape(x0, eps, "forward_noise");
    check_t(t, "forward_noise");
    if (sched.kind == ScheduleKind::Standard) return axpy(scale(x0, 1.0 - t), t, eps);
    return axpy(x0, t * sched.beta, eps);
}

Tensor forward_noise_rows(const Tensor& x0, const Tensor& eps, std::span<const double> t,
                          const NoiseSchedule& sched) {
    require_same_shape(x0, eps, "forward_noise_rows");
    if (t.size() != x0.rows()) throw std::invalid_argument("forward_noise_rows: one t per row required");
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
        check_t(t[i], "forward_noise_rows");
        auto a = x0.row(i);
        auto e = eps.row(i);
        auto o = out.row(i);
        for (std::size_t j = 0; j < o.size(); ++j) {
            o[j] = sched.kind == ScheduleKind::Standard ? (1.0 - t[i]) * a[j] + t[i] * e[j]
                                                        : a[j] + t[i] * sched.beta * e[j];
        }
    }
    ensure_finite(out, "forward_noise_rows");
    return out;
}

Tensor path_velocity(const Tensor& x0, const Tensor& eps, const NoiseSchedule& sched) {
    if (sched.kind == ScheduleKind::Standard) return sub(eps, x0);
    require_same_shape(x0, eps, "path_velocity");
    return scale(eps, sched.beta);
}

Tensor euler_step(const Tensor& x_t, const Tensor& eps_pred, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
    return axpy(x_t, -dt, eps_pred);
}

Tensor paired_delta(const Tensor& x0a, const Tensor& x0b, const Tensor& eps, double t, double dt,
                    const NoiseSchedule& sched) {
    if (dt < 0.0 || t - dt < 0.0) throw std::invalid_argument("paired_delta: t - dt must be non-negative");
    const double s = t - dt;
    return sub(forward_noise(x0a, eps, s, sched), forward_noise(x0b, eps, s, sched));
}

}  // namespace pairedit
