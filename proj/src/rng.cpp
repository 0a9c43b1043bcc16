#include "lsmsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace lsmsim {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x5851F42D4C957F2DULL));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b) {
  return derive_seed(derive_seed(seed, stream_a), stream_b);
}

namespace {

double box_muller(double u1, double u2, double* second) {
  // u1 in (0, 1] so the log is finite.
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  if (second != nullptr) *second = radius * std::sin(angle);
  return radius * std::cos(angle);
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  has_spare_ = true;
  return box_muller(u1, u2, &spare_);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double keyed_normal(std::uint64_t key, std::uint64_t index) {
  const std::uint64_t a = mix64(key ^ mix64(2 * index));
  const std::uint64_t b = mix64(key ^ mix64(2 * index + 1));
  return box_muller(1.0 - to_unit(a), to_unit(b), nullptr);
}

}  // namespace lsmsim
