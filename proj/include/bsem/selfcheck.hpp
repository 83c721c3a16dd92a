#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsem/nn.hpp"

namespace bsem {

struct SelfCheckResult {
  std::string name;
  GradCheckReport report;
};

// Finite-difference gradient checks over every primitive (linear, relu,
// sigmoid, embedding lookup, hadamard) and the full assembled model at small
// scale, repeated across `seeds` deterministic seeds. Inputs are resampled
// away from non-differentiable points (ReLU kinks, |y - yhat| = 0).
//
// inject_fault corrupts the largest analytic gradient by +10% inside the
// full-model check; the suite must then fail and name that parameter.
std::vector<SelfCheckResult> gradient_selfcheck(double tolerance,
                                                std::size_t seeds,
                                                bool inject_fault = false,
                                                std::uint64_t base_seed = 20240101);

bool all_pass(const std::vector<SelfCheckResult>& results);

}  // namespace bsem
