// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "pairedit/tensor.hpp"

namespace pairedit {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / (2h), one
/// coordinate at a time. Throws if h <= 0 or f returns a non-finite value.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h);

/// ||a - b|| / max(||a||, ||b||); 0 when both are exactly zero.
double relative_error(const Tensor& a, const Tensor& b);

}  // namespace pairedit
