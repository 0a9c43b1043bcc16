#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string_view>

#include "lsmsim/matrix.hpp"

namespace lsmsim {

inline constexpr std::uint32_t kConductanceFileMagic = 0x434F4E44;  // "COND"

enum class Forming { dense, sparse };

Forming parse_forming(std::string_view name);
std::string_view to_string(Forming forming);

/// Conductance statistics in µS. Defaults correspond to a ~30 kΩ low-resistance
/// state with a few µS of device-to-device spread.
struct ConductanceDist {
  double mean_us = 33.0;
  double std_us = 3.0;
  double sparsity = 0.0;  // fraction of zero cells in sparse forming
};

/// Stochastic conductances of a crossbar after forming, in µS.
struct ConductanceArray {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Matrix g;
  Forming forming = Forming::dense;
  std::uint64_t seed = 0;
  ConductanceDist dist;

  double at(std::size_t i, std::size_t j) const { return g(i, j); }
};

/// Dense forming: every cell ~ Normal(mean, std) truncated to positive values.
/// Sparse forming: exactly round(sparsity·rows·cols) uniformly chosen cells are
/// zero, the rest are drawn as in dense forming.
ConductanceArray sample_conductance(std::size_t rows, std::size_t cols, const ConductanceDist& dist,
                                    Forming forming, std::uint64_t seed);

/// One-time programming error g' = max(0, g·(1 + Normal(0, sigma_frac))).
ConductanceArray apply_write_noise(const ConductanceArray& arr, double sigma_frac, std::uint64_t seed);

/// Half-open index range.
struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Signed weights read differentially from a window of a conductance array:
/// weights(i, j) = scale·(g(i, j+1) − g(i, j)) over the window, so the weight
/// matrix has one column fewer than the window.
struct WeightBundle {
  std::shared_ptr<const ConductanceArray> source;
  Range rows;
  Range cols;
  double scale = 1.0;
  double read_noise_std = 0.0;  // µS, per cell and per read
  unsigned quant_bits = 0;      // 0 disables read quantization
  Matrix weights;

  std::size_t out_dim() const { return weights.rows; }
  std::size_t in_dim() const { return weights.cols; }

  /// Same window and settings on a different array, e.g. after write noise.
  WeightBundle rebind(std::shared_ptr<const ConductanceArray> array) const;
};

WeightBundle differential_weights(std::shared_ptr<const ConductanceArray> array, Range rows,
                                  Range cols, double scale, double read_noise_std = 0.0);

/// Reads the bundle once. Each conductance in the window receives fresh
/// additive Gaussian noise of std read_noise_std, keyed by (trial_seed, source
/// seed, physical cell), so overlapping bundles see the same read of a shared
/// cell. With zero noise and no quantization the stored weights come back
/// unchanged.
Matrix read_weights(const WeightBundle& bundle, std::uint64_t trial_seed);

/// Uniform B-bit quantization over [−max|w|, +max|w|].
void quantize_weights(Matrix& weights, unsigned bits);

void write_conductance(std::ostream& out, const ConductanceArray& arr);
ConductanceArray read_conductance(std::istream& in);
void save_conductance(const std::filesystem::path& path, const ConductanceArray& arr);
ConductanceArray load_conductance(const std::filesystem::path& path);

}  // namespace lsmsim
