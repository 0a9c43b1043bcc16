#include "lsmsim/memristor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"

namespace lsmsim {

Forming parse_forming(std::string_view name) {
  if (name == "dense") return Forming::dense;
  if (name == "sparse") return Forming::sparse;
  throw Error("unknown forming mode '" + std::string(name) + "' (expected dense or sparse)");
}

std::string_view to_string(Forming forming) { return forming == Forming::dense ? "dense" : "sparse"; }

namespace {

double positive_normal(Rng& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  for (;;) {
    const double v = rng.normal(mean, stddev);
    if (v > 0.0) return v;
  }
}

}  // namespace

ConductanceArray sample_conductance(std::size_t rows, std::size_t cols, const ConductanceDist& dist,
                                    Forming forming, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw Error("sample_conductance: rows and cols must be >= 1");
  if (!(dist.mean_us > 0.0)) throw Error("sample_conductance: mean must be positive");
  if (!(dist.std_us >= 0.0)) throw Error("sample_conductance: std must be non-negative");
  if (!(dist.sparsity >= 0.0 && dist.sparsity <= 1.0)) {
    throw Error("sample_conductance: sparsity outside [0, 1]");
  }

  ConductanceArray arr{rows, cols, Matrix(rows, cols), forming, seed, dist};
  Rng rng(seed);
  const std::size_t n = rows * cols;
  std::vector<std::uint8_t> zero(n, 0);
  if (forming == Forming::sparse) {
    const auto zeros = static_cast<std::size_t>(std::llround(dist.sparsity * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `zeros` slots become a uniform subset.
    for (std::size_t i = 0; i < zeros; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(idx[i], idx[j]);
      zero[idx[i]] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    arr.g.data[k] = zero[k] ? 0.0 : positive_normal(rng, dist.mean_us, dist.std_us);
  }
  return arr;
}

ConductanceArray apply_write_noise(const ConductanceArray& arr, double sigma_frac, std::uint64_t seed) {
  if (!(sigma_frac >= 0.0)) throw Error("apply_write_noise: sigma_frac must be non-negative");
  ConductanceArray out = arr;
  if (sigma_frac == 0.0) return out;
  Rng rng(seed);
  for (double& g : out.g.data) {
    const double factor = 1.0 + rng.normal(0.0, sigma_frac);
    g = std::max(0.0, g * factor);
  }
  return out;
}

WeightBundle WeightBundle::rebind(std::shared_ptr<const ConductanceArray> array) const {
  WeightBundle b = differential_weights(std::move(array), rows, cols, scale, read_noise_std);
  b.quant_bits = quant_bits;
  return b;
}

WeightBundle differential_weights(std::shared_ptr<const ConductanceArray> array, Range rows,
                                  Range cols, double scale, double read_noise_std) {
  if (!array) throw Error("differential_weights: null conductance array");
  if (rows.begin >= rows.end || rows.end > array->rows || cols.begin >= cols.end ||
      cols.end > array->cols) {
    throw Error("differential_weights: view [" + std::to_string(rows.begin) + "," +
                std::to_string(rows.end) + ")x[" + std::to_string(cols.begin) + "," +
                std::to_string(cols.end) + ") outside " + std::to_string(array->rows) + "x" +
                std::to_string(array->cols) + " array");
  }
  if (cols.size() < 2) throw Error("differential_weights: column span must be >= 2");
  if (!(read_noise_std >= 0.0)) throw Error("differential_weights: read noise must be non-negative");

  WeightBundle b;
  b.rows = rows;
  b.cols = cols;
  b.scale = scale;
  b.read_noise_std = read_noise_std;
  b.weights = Matrix(rows.size(), cols.size() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < cols.size(); ++j) {
      const double hi = array->at(rows.begin + i, cols.begin + j + 1);
      const double lo = array->at(rows.begin + i, cols.begin + j);
      b.weights(i, j) = scale * (hi - lo);
    }
  }
  b.source = std::move(array);
  return b;
}

void quantize_weights(Matrix& weights, unsigned bits) {
  if (bits == 0) return;
  if (bits > 30) throw Error("quantize_weights: at most 30 bits supported");
  double limit = 0.0;
  for (double w : weights.data) limit = std::max(limit, std::abs(w));
  if (limit == 0.0) return;
  const double levels = static_cast<double>((1u << bits) - 1);
  if (levels == 0.0) return;
  const double step = 2.0 * limit / levels;
  for (double& w : weights.data) w = -limit + std::round((w + limit) / step) * step;
}

Matrix read_weights(const WeightBundle& bundle, std::uint64_t trial_seed) {
  if (!(bundle.read_noise_std >= 0.0)) throw Error("read_weights: read noise must be non-negative");
  Matrix w = bundle.weights;
  if (bundle.read_noise_std > 0.0) {
    const ConductanceArray& arr = *bundle.source;
    const std::uint64_t key = derive_seed(trial_seed, arr.seed, 0x52454144 /* READ */);
    const std::size_t width = bundle.cols.size();
    std::vector<double> noisy(width);
    for (std::size_t i = 0; i < bundle.rows.size(); ++i) {
      const std::size_t r = bundle.rows.begin + i;
      for (std::size_t j = 0; j < width; ++j) {
        const std::size_t c = bundle.cols.begin + j;
        noisy[j] = arr.at(r, c) + bundle.read_noise_std * keyed_normal(key, r * arr.cols + c);
      }
      for (std::size_t j = 0; j + 1 < width; ++j) w(i, j) = bundle.scale * (noisy[j + 1] - noisy[j]);
    }
  }
  quantize_weights(w, bundle.quant_bits);
  return w;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (auto& c : b) {
    c = static_cast<char>(v & 0xFF);
    v >>= 8;
  }
  out.write(b.data(), 4);
}

std::uint64_t get_bytes(std::istream& in, std::size_t n) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(n));
  if (!in) throw DataError("conductance file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = n; i-- > 0;) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void write_conductance(std::ostream& out, const ConductanceArray& arr) {
  put_u32(out, kConductanceFileMagic);
  put_u32(out, static_cast<std::uint32_t>(arr.rows));
  put_u32(out, static_cast<std::uint32_t>(arr.cols));
  for (double g : arr.g.data) {
    auto bits = std::bit_cast<std::uint64_t>(g);
    std::array<char, 8> b{};
    for (auto& c : b) {
      c = static_cast<char>(bits & 0xFF);
      bits >>= 8;
    }
    out.write(b.data(), 8);
  }
}

ConductanceArray read_conductance(std::istream& in) {
  if (get_bytes(in, 4) != kConductanceFileMagic) throw DataError("conductance file: bad magic");
  ConductanceArray arr;
  arr.rows = get_bytes(in, 4);
  arr.cols = get_bytes(in, 4);
  arr.g = Matrix(arr.rows, arr.cols);
  for (double& g : arr.g.data) g = std::bit_cast<double>(get_bytes(in, 8));
  for (double g : arr.g.data) {
    if (!(g >= 0.0)) throw DataError("conductance file: negative or NaN conductance");
  }
  return arr;
}

void save_conductance(const std::filesystem::path& path, const ConductanceArray& arr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_conductance(out, arr);
}

ConductanceArray load_conductance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return read_conductance(in);
}

}  // namespace lsmsim
