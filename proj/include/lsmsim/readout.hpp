#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lsmsim/lsm.hpp"
#include "lsmsim/matrix.hpp"

namespace lsmsim {

inline constexpr std::uint32_t kCheckpointMagic = 0x4C494E52;  // "LINR"

/// Fully connected layer y = W·x + b.
struct LinearLayer {
  Matrix W;  // out × in
  std::vector<double> b;

  std::size_t in_dim() const { return W.cols; }
  std::size_t out_dim() const { return W.rows; }

  static LinearLayer zeros(std::size_t out, std::size_t in);
  /// Uniform ±1/√in weights, zero bias.
  static LinearLayer random(std::size_t out, std::size_t in, std::uint64_t seed);

  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

std::vector<double> linear_forward(std::span<const double> x, const LinearLayer& layer);

std::vector<double> softmax(std::span<const double> logits);

struct XentResult {
  double loss = 0.0;
  std::vector<double> grad;  // ∂loss/∂logits
};

/// Cross-entropy of a max-shifted softmax against `label`.
XentResult softmax_xent(std::span<const double> logits, std::size_t label);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

enum class Optimizer { sgd, momentum };

Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  double lr = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::sgd;
  double momentum = 0.9;

  void validate() const;
};

struct Sample {
  std::vector<double> x;
  std::size_t label = 0;
};

struct TrainResult {
  LinearLayer model;
  std::vector<double> loss_curve;  // mean training loss of each epoch
};

/// Mini-batch gradient descent on mean cross-entropy. The sample order of each
/// epoch comes from a shuffle seeded by cfg.seed.
TrainResult train_supervised(std::span<const Sample> data, const TrainConfig& cfg, LinearLayer init);

/// As above, starting from LinearLayer::random seeded by cfg.seed. num_classes
/// of 0 means one more than the largest label.
TrainResult train_supervised(std::span<const Sample> data, const TrainConfig& cfg,
                             std::size_t num_classes = 0);

std::size_t predict(const LinearLayer& model, std::span<const double> x);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
  std::vector<double> per_class_accuracy;           // NaN for classes without samples

  nlohmann::json to_json() const;
};

EvalReport evaluate(const LinearLayer& model, std::span<const Sample> data);

/// Builds a report from precomputed predictions.
EvalReport tally(std::span<const std::size_t> truths, std::span<const std::size_t> predictions,
                 std::size_t num_classes);

inline constexpr double kNeverExit = std::numeric_limits<double>::infinity();

struct EarlyExitResult {
  std::size_t label = 0;
  std::size_t exit_step = 0;  // 1-based number of steps consumed
};

/// Runs the reservoir one step at a time and classifies the running counts
/// (normalized by the full window T). Stops at the first step whose maximum
/// softmax probability reaches conf_th; thresholds above 1 never stop early.
EarlyExitResult early_exit_infer(const SpikeTensor& input, const LsmConfig& cfg,
                                 std::uint64_t trial_seed, const LinearLayer& model,
                                 double conf_th);

void write_checkpoint(std::ostream& out, const LinearLayer& layer);
LinearLayer read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const LinearLayer& layer);
LinearLayer load_checkpoint(const std::filesystem::path& path);

}  // namespace lsmsim
