#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lsmsim {

/// J per operation of a digital accelerator running at peak throughput.
double energy_efficiency(double tdp_watts, double throughput_ops_per_s);

enum class LayerKind { dense, lsm, counter, pooling, rnn, srnn, gru, lstm };

std::string_view to_string(LayerKind kind);

/// Multiplier count of one recurrent cell relative to a plain RNN cell.
std::size_t gate_multiplier(LayerKind kind);

/// One layer of an architecture, per input sample.
///
/// dense: `in`→`out`, applied `applications` times. lsm/rnn/srnn/gru/lstm: `in`
/// inputs, `out` hidden units, `applications` time steps. counter and pooling:
/// `out` channels over `applications` steps, no MACs.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::dense;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t applications = 1;
  bool trainable = false;
};

struct Architecture {
  std::string name;
  std::vector<LayerSpec> layers;
};

/// Per-layer operation counts for one sample. `*_macs` are multiply-accumulates;
/// `*_bias` are bias additions counted as MAC-equivalents.
struct LayerOps {
  std::string name;
  std::uint64_t forward_macs = 0;
  std::uint64_t forward_bias = 0;
  std::uint64_t backward_macs = 0;
  std::uint64_t backward_bias = 0;

  std::uint64_t forward() const { return forward_macs + forward_bias; }
  std::uint64_t backward() const { return backward_macs + backward_bias; }
};

struct OpsCount {
  std::vector<LayerOps> layers;
  std::uint64_t forward_total = 0;
  std::uint64_t backward_total = 0;

  std::uint64_t total() const { return forward_total + backward_total; }

  /// A count with no layer breakdown, e.g. a published table total.
  static OpsCount from_totals(std::uint64_t forward, std::uint64_t backward);

  nlohmann::json to_json() const;
};

/// Analytic MAC count; see docs/mac_counting.md for the convention.
OpsCount count_ops(const Architecture& arch);

enum class CostBasis { forward, backward, total };

/// a / b on the chosen basis (training cost by default).
double cost_ratio(const OpsCount& a, const OpsCount& b, CostBasis basis = CostBasis::backward);
double cost_ratio(std::uint64_t a, std::uint64_t b);

// Architecture builders for the models this simulator compares.
Architecture lsm_ann_architecture(std::size_t U, std::size_t h, std::size_t T, std::size_t classes,
                                  std::size_t width = 1, std::size_t depth = 1);
Architecture recurrent_ann_architecture(LayerKind cell, std::size_t U, std::size_t h, std::size_t T,
                                        std::size_t classes);
Architecture pooling_ann_architecture(std::size_t U, std::size_t T, std::size_t classes);

enum class Component : std::size_t { array, driver, decoder, adc, mux, lif, counter };
inline constexpr std::size_t kComponentCount = 7;

std::string_view to_string(Component c);

/// Digital accelerator parameters plus per-event energies (J) of the analogue
/// macro and the digital neuron/counter logic. Unset components are missing.
struct EnergyModel {
  double tdp_watts = 300.0;
  double throughput_ops = 624e12;
  std::array<std::optional<double>, kComponentCount> per_event{};

  double efficiency() const { return energy_efficiency(tdp_watts, throughput_ops); }
  EnergyModel& set(Component c, double joules);
  void validate() const;

  /// Per-vector costs of a 512×512 macro reading one binary input vector
  /// (array 0.17 nJ, line drivers 46.08 pJ, ADC 5.79 nJ, MUX 7.63 pJ). LIF
  /// updates cost 3 digital ops, counter increments 1 op. No decoder entry.
  static EnergyModel reference();
};

/// Event counts of one inference.
///
/// array_vecs drives the array and line-driver energies; every other count
/// drives the component of the same name. readout_macs run on the digital
/// accelerator.
struct HybridEvents {
  std::uint64_t array_vecs = 0;
  std::uint64_t decoder_ops = 0;
  std::uint64_t adc_reads = 0;
  std::uint64_t mux_ops = 0;
  std::uint64_t lif_steps = 0;
  std::uint64_t counter_incs = 0;
  std::uint64_t readout_macs = 0;

  std::uint64_t count(Component c) const;
};

/// Events of one reservoir inference: one input and one recurrent array
/// activation per step, each read through the MUX and ADC; h LIF updates per
/// step; `spikes` counter increments.
HybridEvents lsm_events(std::size_t h, std::size_t T, std::uint64_t spikes, std::uint64_t readout_macs,
                        std::size_t reservoirs = 1);

struct CostReport {
  OpsCount ops;
  double efficiency = 0.0;      // J/op
  double energy_digital = 0.0;  // every forward MAC on the digital accelerator
  std::array<double, kComponentCount> component_energy{};
  double readout_energy = 0.0;
  double energy_hybrid = 0.0;
  double digital_over_hybrid = 0.0;

  double analogue_subtotal() const;
  double digital_subtotal() const;
  /// Grouped like a component × subtotal × overall breakdown table.
  nlohmann::json to_json() const;
};

/// Throws naming the first component that has events but no energy.
CostReport hybrid_energy(const OpsCount& ops, const HybridEvents& events, const EnergyModel& model);

}  // namespace lsmsim
