#include "lsmsim/randomness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsmsim/error.hpp"

namespace lsmsim {

namespace {

constexpr std::size_t kMinBits = 100;

void check_bits(std::span<const std::uint8_t> bits, const char* test) {
  if (bits.size() < kMinBits) {
    throw Error(std::string(test) + ": needs at least 100 bits, got " + std::to_string(bits.size()));
  }
}

}  // namespace

BitString extract_bits(const ConductanceArray& arr) {
  const auto& g = arr.g.data;
  if (g.size() < 2) throw Error("extract_bits: array needs at least 2 cells");
  std::vector<double> sorted = g;
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double reference = sorted[mid];
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    reference = 0.5 * (lower + reference);
  }
  BitString bits(g.size());
  std::transform(g.begin(), g.end(), bits.begin(), [&](double v) { return v > reference ? 1 : 0; });
  return bits;
}

RandomnessResult monobit_test(std::span<const std::uint8_t> bits) {
  check_bits(bits, "monobit_test");
  long long s = 0;
  for (auto b : bits) s += b ? 1 : -1;
  const double n = static_cast<double>(bits.size());
  return {std::erfc(std::abs(static_cast<double>(s)) / std::sqrt(2.0 * n)), true};
}

RandomnessResult runs_test(std::span<const std::uint8_t> bits) {
  check_bits(bits, "runs_test");
  const double n = static_cast<double>(bits.size());
  const double ones = static_cast<double>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
  const double pi = ones / n;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(n)) return {0.0, false};

  std::size_t runs = 1;
  for (std::size_t i = 0; i + 1 < bits.size(); ++i) runs += (bits[i] != 0) != (bits[i + 1] != 0);
  const double v = static_cast<double>(runs);
  const double spread = pi * (1.0 - pi);
  return {std::erfc(std::abs(v - 2.0 * n * spread) / (2.0 * std::sqrt(2.0 * n) * spread)), true};
}

}  // namespace lsmsim
