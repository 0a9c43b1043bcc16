#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lsmsim/events.hpp"
#include "lsmsim/matrix.hpp"
#include "lsmsim/memristor.hpp"

namespace lsmsim {

/// Discrete-time LIF neuron. `decay` is the per-step retention β, i.e.
/// exp(−Δt/τ_mem) of the continuous model; 1/c_mem is folded into the weight
/// scale.
struct LifParams {
  double u_th = 1.0;
  double decay = 0.9;
  double u_rest = 0.0;

  void validate() const;
};

struct LifState {
  std::vector<double> u;

  static LifState at_rest(std::size_t n, const LifParams& params) {
    return LifState{std::vector<double>(n, params.u_rest)};
  }
};

/// One update: u' = u_rest + β·(u − u_rest) + current. Neurons with u' >= u_th
/// spike and are reset to u_rest in the returned state.
std::pair<std::vector<std::uint8_t>, LifState> lif_step(const LifState& state,
                                                         std::span<const double> current,
                                                         const LifParams& params);

/// One reservoir: h LIF neurons fed by U inputs and by themselves through fixed
/// differential weights (input bundle h×U, recurrent bundle h×h).
struct LsmConfig {
  std::size_t U = 0;
  std::size_t h = 0;
  LifParams params;
  WeightBundle input;
  WeightBundle recurrent;

  void validate() const;
};

/// Per-neuron spike counts over a window of T steps.
struct SpikeCounts {
  std::vector<std::uint32_t> o;
  std::size_t T = 0;

  /// Counts divided by T; this is what the readout consumes.
  std::vector<double> normalized() const;

  friend bool operator==(const SpikeCounts&, const SpikeCounts&) = default;
};

struct LsmOutput {
  SpikeTensor raster;  // T×h
  SpikeCounts counts;
};

/// Step-by-step execution of one reservoir for one input sample.
///
/// Weights are read once at construction. Step t computes
/// I(t) = W_in·θ_in(t) + W_rec·θ_rec(t−1) with θ_rec(0) = 0, where each sum is
/// accumulated in increasing presynaptic index order.
class LsmRunner {
 public:
  LsmRunner(const LsmConfig& cfg, std::uint64_t trial_seed);

  /// Advances one step and returns this step's output spikes.
  std::span<const std::uint8_t> step(std::span<const std::uint8_t> input_row);

  const std::vector<std::uint32_t>& counts() const { return counts_; }
  std::size_t steps_taken() const { return steps_; }
  void reset();

 private:
  const LsmConfig* cfg_;
  Matrix w_in_t_;   // U×h (transposed so one input adds a contiguous row)
  Matrix w_rec_t_;  // h×h transposed
  std::vector<double> u_;
  std::vector<double> current_;
  std::vector<double> rec_current_;
  std::vector<std::uint8_t> spikes_;
  std::vector<std::uint32_t> counts_;
  std::size_t steps_ = 0;
};

/// Runs the reservoir over the whole input; counts are column sums of the raster.
LsmOutput lsm_forward(const SpikeTensor& input, const LsmConfig& cfg, std::uint64_t trial_seed);

/// N parallel reservoirs on the same input; counts are concatenated in order.
SpikeCounts wide_forward(const SpikeTensor& input, std::span<const LsmConfig> cfgs,
                         std::uint64_t trial_seed);

/// Stacked reservoirs: layer k consumes the raster of layer k−1. The output
/// concatenates the counts of every layer.
SpikeCounts deep_forward(const SpikeTensor& input, std::span<const LsmConfig> layers,
                         std::uint64_t trial_seed);

/// Trial seed used for layer/reservoir `index` of a composed network.
std::uint64_t layer_trial_seed(std::uint64_t trial_seed, std::size_t index);

}  // namespace lsmsim
