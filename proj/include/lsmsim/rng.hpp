#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace lsmsim {

/// splitmix64 finalizer; used to derive independent seeds from a parent seed.
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed for a named stream. Distinct streams of one parent are
/// statistically independent.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b);

/// Seeded generator with platform-independent distributions.
///
/// The standard library's distribution objects are implementation-defined, so
/// results would differ between libstdc++ and libc++. Only the engine
/// (mt19937_64, fully specified) is taken from <random>; the transforms below
/// are fixed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// True with probability p. p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return uniform() < p; }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stateless standard normal keyed by (key, index); used where a value must be
/// reproducible per physical cell regardless of iteration order.
double keyed_normal(std::uint64_t key, std::uint64_t index);

}  // namespace lsmsim
