// SPDX-License-Identifier: Apache-2.0
#include "pairedit/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace pairedit {

Adam::Adam(double lr, AdamConfig cfg) : lr_(lr), cfg_(cfg) {
    if (!(lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
}

void Adam::step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Adam: params/grads count mismatch");
    std::size_t total = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) throw std::invalid_argument("Adam: params/grads size mismatch");
        total += params[i].size();
    }
    if (m_.empty()) {
        m_.assign(total, 0.0);
        v_.assign(total, 0.0);
    } else if (m_.size() != total) {
        throw std::invalid_argument("Adam: parameter layout changed between steps");
    }

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = 0; j < params[i].size(); ++j, ++k) {
            const double g = grads[i][j];
            m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
            v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m_[k] / bc1;
            const double v_hat = v_[k] / bc2;
            params[i][j] -= lr_ * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
        }
    }
}

}  // namespace pairedit
