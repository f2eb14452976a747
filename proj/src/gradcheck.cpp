// SPDX-License-Identifier: Apache-2.0
#include "pairedit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pairedit {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double fp = f(probe);
        probe[i] = orig - h;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_diff_grad: non-finite function value at coordinate " +
                                     std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double relative_error(const Tensor& a, const Tensor& b) {
    const double denom = std::max(norm(a), norm(b));
    if (denom == 0.0) return 0.0;
    return norm(sub(a, b)) / denom;
}

}  // namespace pairedit
