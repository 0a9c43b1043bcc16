#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsmsim/memristor.hpp"

namespace lsmsim {

using BitString = std::vector<std::uint8_t>;

/// Thresholds every conductance against the median of the array (the
/// reference current): strictly greater reads as 1. Row-major order.
BitString extract_bits(const ConductanceArray& arr);

inline constexpr double kRandomnessAlpha = 0.01;

struct RandomnessResult {
  double p_value = 0.0;
  bool applicable = true;  // false when the test's precondition fails

  bool passed() const { return applicable && p_value >= kRandomnessAlpha; }
};

/// Frequency (monobit) test: S = Σ(2b−1), p = erfc(|S|/√(2n)). Needs n >= 100.
RandomnessResult monobit_test(std::span<const std::uint8_t> bits);

/// Runs test. Not applicable when |π − ½| >= 2/√n with π the fraction of ones.
RandomnessResult runs_test(std::span<const std::uint8_t> bits);

}  // namespace lsmsim
