#include "lsmsim/cost_model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lsmsim/error.hpp"

namespace lsmsim {

double energy_efficiency(double tdp_watts, double throughput_ops_per_s) {
  if (!(tdp_watts > 0.0)) throw Error("energy_efficiency: TDP must be positive");
  if (!(throughput_ops_per_s > 0.0)) throw Error("energy_efficiency: throughput must be positive");
  return tdp_watts / throughput_ops_per_s;
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::lsm: return "lsm";
    case LayerKind::counter: return "counter";
    case LayerKind::pooling: return "pooling";
    case LayerKind::rnn: return "rnn";
    case LayerKind::srnn: return "srnn";
    case LayerKind::gru: return "gru";
    case LayerKind::lstm: return "lstm";
  }
  return "?";
}

std::size_t gate_multiplier(LayerKind kind) {
  switch (kind) {
    case LayerKind::rnn:
    case LayerKind::srnn: return 1;
    case LayerKind::gru: return 3;
    case LayerKind::lstm: return 4;
    default: throw Error("gate_multiplier: " + std::string(to_string(kind)) + " is not a recurrent cell");
  }
}

OpsCount OpsCount::from_totals(std::uint64_t forward, std::uint64_t backward) {
  OpsCount c;
  c.forward_total = forward;
  c.backward_total = backward;
  return c;
}

nlohmann::json OpsCount::to_json() const {
  nlohmann::json layers_json = nlohmann::json::array();
  for (const auto& l : layers) {
    layers_json.push_back({{"layer", l.name},
                           {"forward_macs", l.forward_macs},
                           {"forward_bias", l.forward_bias},
                           {"backward_macs", l.backward_macs},
                           {"backward_bias", l.backward_bias}});
  }
  return {{"layers", layers_json}, {"forward_total", forward_total}, {"backward_total", backward_total}};
}

OpsCount count_ops(const Architecture& arch) {
  OpsCount count;
  bool seen_trainable = false;
  for (const LayerSpec& layer : arch.layers) {
    LayerOps ops{layer.name.empty() ? std::string(to_string(layer.kind)) : layer.name};
    const std::uint64_t in = layer.in;
    const std::uint64_t out = layer.out;
    const std::uint64_t apps = layer.applications;
    switch (layer.kind) {
      case LayerKind::dense:
        ops.forward_macs = in * out * apps;
        ops.forward_bias = out * apps;
        if (layer.trainable) {
          ops.backward_macs = in * out * apps * (seen_trainable ? 2 : 1);
          ops.backward_bias = out * apps;
        }
        break;
      case LayerKind::lsm:
        if (layer.trainable) {
          throw Error("count_ops: LSM layer '" + ops.name + "' is frozen; model a trainable spiking layer as srnn");
        }
        ops.forward_macs = (out * in + out * out) * apps;
        break;
      case LayerKind::counter:
      case LayerKind::pooling:
        break;
      case LayerKind::rnn:
      case LayerKind::srnn:
      case LayerKind::gru:
      case LayerKind::lstm: {
        const std::uint64_t g = gate_multiplier(layer.kind);
        ops.forward_macs = g * (out * in + out * out) * apps;
        ops.forward_bias = g * out * apps;
        if (layer.trainable) {
          const std::uint64_t weight_grads = g * (out * in + out * out);
          const std::uint64_t state_grads = g * out * out;
          const std::uint64_t input_grads = seen_trainable ? g * out * in : 0;
          ops.backward_macs = (weight_grads + state_grads + input_grads) * apps;
          ops.backward_bias = g * out * apps;
        }
        break;
      }
    }
    seen_trainable = seen_trainable || layer.trainable;
    count.forward_total += ops.forward();
    count.backward_total += ops.backward();
    count.layers.push_back(std::move(ops));
  }
  return count;
}

namespace {

std::uint64_t basis_value(const OpsCount& c, CostBasis basis) {
  switch (basis) {
    case CostBasis::forward: return c.forward_total;
    case CostBasis::backward: return c.backward_total;
    case CostBasis::total: return c.total();
  }
  return 0;
}

}  // namespace

double cost_ratio(const OpsCount& a, const OpsCount& b, CostBasis basis) {
  return cost_ratio(basis_value(a, basis), basis_value(b, basis));
}

double cost_ratio(std::uint64_t a, std::uint64_t b) {
  if (b == 0) throw Error("cost_ratio: zero denominator");
  return static_cast<double>(a) / static_cast<double>(b);
}

Architecture lsm_ann_architecture(std::size_t U, std::size_t h, std::size_t T, std::size_t classes,
                                  std::size_t width, std::size_t depth) {
  if (width == 0 || depth == 0) throw Error("lsm_ann_architecture: width and depth must be >= 1");
  Architecture arch{"lsm-ann", {}};
  for (std::size_t w = 0; w < width; ++w) {
    for (std::size_t d = 0; d < depth; ++d) {
      arch.layers.push_back({"lsm[" + std::to_string(w) + "][" + std::to_string(d) + "]", LayerKind::lsm,
                             d == 0 ? U : h, h, T, false});
    }
  }
  const std::size_t features = width * depth * h;
  arch.layers.push_back({"counter", LayerKind::counter, features, features, T, false});
  arch.layers.push_back({"readout", LayerKind::dense, features, classes, 1, true});
  return arch;
}

Architecture recurrent_ann_architecture(LayerKind cell, std::size_t U, std::size_t h, std::size_t T,
                                        std::size_t classes) {
  gate_multiplier(cell);
  Architecture arch{std::string(to_string(cell)) + "-ann", {}};
  arch.layers.push_back({std::string(to_string(cell)), cell, U, h, T, true});
  arch.layers.push_back({"readout", LayerKind::dense, h, classes, 1, true});
  return arch;
}

Architecture pooling_ann_architecture(std::size_t U, std::size_t T, std::size_t classes) {
  Architecture arch{"pooling-ann", {}};
  arch.layers.push_back({"pooling", LayerKind::pooling, U, U, T, false});
  arch.layers.push_back({"readout", LayerKind::dense, U, classes, 1, true});
  return arch;
}

std::string_view to_string(Component c) {
  switch (c) {
    case Component::array: return "array";
    case Component::driver: return "driver";
    case Component::decoder: return "decoder";
    case Component::adc: return "adc";
    case Component::mux: return "mux";
    case Component::lif: return "lif";
    case Component::counter: return "counter";
  }
  return "?";
}

EnergyModel& EnergyModel::set(Component c, double joules) {
  per_event[static_cast<std::size_t>(c)] = joules;
  return *this;
}

void EnergyModel::validate() const {
  efficiency();
  for (std::size_t k = 0; k < kComponentCount; ++k) {
    if (per_event[k] && !(*per_event[k] > 0.0)) {
      throw Error("energy model: " + std::string(to_string(static_cast<Component>(k))) +
                  " energy must be positive");
    }
  }
}

EnergyModel EnergyModel::reference() {
  EnergyModel m;
  const double eff = m.efficiency();
  m.set(Component::array, 0.17e-9)
      .set(Component::driver, 46.08e-12)
      .set(Component::adc, 5.79e-9)
      .set(Component::mux, 7.63e-12)
      .set(Component::lif, 3.0 * eff)
      .set(Component::counter, 1.0 * eff);
  return m;
}

std::uint64_t HybridEvents::count(Component c) const {
  switch (c) {
    case Component::array:
    case Component::driver: return array_vecs;
    case Component::decoder: return decoder_ops;
    case Component::adc: return adc_reads;
    case Component::mux: return mux_ops;
    case Component::lif: return lif_steps;
    case Component::counter: return counter_incs;
  }
  return 0;
}

HybridEvents lsm_events(std::size_t h, std::size_t T, std::uint64_t spikes, std::uint64_t readout_macs,
                        std::size_t reservoirs) {
  HybridEvents e;
  const std::uint64_t vecs = 2ull * T * reservoirs;
  e.array_vecs = vecs;
  e.adc_reads = vecs;
  e.mux_ops = vecs;
  e.lif_steps = static_cast<std::uint64_t>(h) * T * reservoirs;
  e.counter_incs = spikes;
  e.readout_macs = readout_macs;
  return e;
}

double CostReport::analogue_subtotal() const {
  double s = 0.0;
  for (Component c : {Component::array, Component::driver, Component::decoder, Component::mux, Component::adc}) {
    s += component_energy[static_cast<std::size_t>(c)];
  }
  return s;
}

double CostReport::digital_subtotal() const {
  return component_energy[static_cast<std::size_t>(Component::lif)] +
         component_energy[static_cast<std::size_t>(Component::counter)] + readout_energy;
}

nlohmann::json CostReport::to_json() const {
  auto e = [&](Component c) { return component_energy[static_cast<std::size_t>(c)]; };
  nlohmann::json j;
  j["ops"] = ops.to_json();
  j["efficiency_j_per_op"] = efficiency;
  j["digital_system"] = {{"overall_j", energy_digital}};
  j["hybrid_system"] = {
      {"analogue",
       {{"array_j", e(Component::array)},
        {"driver_j", e(Component::driver)},
        {"decoder_j", e(Component::decoder)},
        {"mux_j", e(Component::mux)},
        {"adc_j", e(Component::adc)},
        {"subtotal_j", analogue_subtotal()}}},
      {"digital",
       {{"lif_j", e(Component::lif)},
        {"counter_j", e(Component::counter)},
        {"readout_j", readout_energy},
        {"subtotal_j", digital_subtotal()}}},
      {"overall_j", energy_hybrid}};
  j["digital_over_hybrid"] = digital_over_hybrid;
  return j;
}

CostReport hybrid_energy(const OpsCount& ops, const HybridEvents& events, const EnergyModel& model) {
  model.validate();
  CostReport r;
  r.ops = ops;
  r.efficiency = model.efficiency();
  r.energy_digital = static_cast<double>(ops.forward_total) * r.efficiency;
  for (std::size_t k = 0; k < kComponentCount; ++k) {
    const auto c = static_cast<Component>(k);
    const std::uint64_t n = events.count(c);
    if (n == 0) continue;
    if (!model.per_event[k]) {
      throw Error("hybrid_energy: missing energy for component '" + std::string(to_string(c)) + "'");
    }
    r.component_energy[k] = static_cast<double>(n) * *model.per_event[k];
  }
  r.readout_energy = static_cast<double>(events.readout_macs) * r.efficiency;
  // Summed in the same grouping the report exposes so the parts add up exactly.
  r.energy_hybrid = r.analogue_subtotal() + r.digital_subtotal();
  r.digital_over_hybrid = r.energy_hybrid > 0.0 ? r.energy_digital / r.energy_hybrid : 0.0;
  return r;
}

}  // namespace lsmsim
