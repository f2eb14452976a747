// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pairedit {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Parameters are addressed as an ordered list of
/// spans; the list layout must stay the same across steps.
class Adam {
public:
    Adam(double lr, AdamConfig cfg = {});

    void step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads);

    std::uint64_t steps() const noexcept { return t_; }
    double lr() const noexcept { return lr_; }

private:
    double lr_;
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace pairedit
