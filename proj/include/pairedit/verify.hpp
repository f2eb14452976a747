// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pairedit {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Self-contained invariant suite: schedule algebra, LoRA no-op, loss
/// gradients against finite differences, stop-gradient, fusion endpoints.
/// Uses a small freshly initialized network; takes well under a second.
std::vector<CheckResult> run_invariant_checks(std::uint64_t seed = 0);

}  // namespace pairedit
