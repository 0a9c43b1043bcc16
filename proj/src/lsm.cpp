#include "lsmsim/lsm.hpp"

#include <cmath>
#include <string>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"

namespace lsmsim {

void LifParams::validate() const {
  if (!std::isfinite(u_th) || !std::isfinite(u_rest) || !(u_th > u_rest)) {
    throw Error("LIF threshold must exceed the resting potential");
  }
  if (!(decay >= 0.0 && decay <= 1.0)) throw Error("LIF decay must lie in [0, 1]");
}

std::pair<std::vector<std::uint8_t>, LifState> lif_step(const LifState& state,
                                                         std::span<const double> current,
                                                         const LifParams& params) {
  if (current.size() != state.u.size()) {
    throw Error("lif_step: current has " + std::to_string(current.size()) + " entries for " +
                std::to_string(state.u.size()) + " neurons");
  }
  LifState next{std::vector<double>(state.u.size())};
  std::vector<std::uint8_t> spikes(state.u.size(), 0);
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (!std::isfinite(current[i])) throw Error("lif_step: non-finite current at neuron " + std::to_string(i));
    const double u = params.u_rest + params.decay * (state.u[i] - params.u_rest) + current[i];
    if (u >= params.u_th) {
      spikes[i] = 1;
      next.u[i] = params.u_rest;
    } else {
      next.u[i] = u;
    }
  }
  return {std::move(spikes), std::move(next)};
}

void LsmConfig::validate() const {
  params.validate();
  if (U == 0 || h == 0) throw Error("LSM dimensions must be >= 1");
  if (input.out_dim() != h || input.in_dim() != U) {
    throw Error("LSM input weights are " + std::to_string(input.out_dim()) + "x" +
                std::to_string(input.in_dim()) + ", expected " + std::to_string(h) + "x" +
                std::to_string(U));
  }
  if (recurrent.out_dim() != h || recurrent.in_dim() != h) {
    throw Error("LSM recurrent weights are " + std::to_string(recurrent.out_dim()) + "x" +
                std::to_string(recurrent.in_dim()) + ", expected " + std::to_string(h) + "x" +
                std::to_string(h));
  }
}

std::vector<double> SpikeCounts::normalized() const {
  std::vector<double> x(o.size());
  if (T == 0) return x;
  for (std::size_t i = 0; i < o.size(); ++i) x[i] = static_cast<double>(o[i]) / static_cast<double>(T);
  return x;
}

namespace {

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  }
  return t;
}

}  // namespace

LsmRunner::LsmRunner(const LsmConfig& cfg, std::uint64_t trial_seed)
    : cfg_(&cfg),
      w_in_t_(transpose(read_weights(cfg.input, derive_seed(trial_seed, 0)))),
      w_rec_t_(transpose(read_weights(cfg.recurrent, derive_seed(trial_seed, 1)))),
      u_(cfg.h, cfg.params.u_rest),
      current_(cfg.h, 0.0),
      rec_current_(cfg.h, 0.0),
      spikes_(cfg.h, 0),
      counts_(cfg.h, 0) {
  cfg.validate();
}

void LsmRunner::reset() {
  std::fill(u_.begin(), u_.end(), cfg_->params.u_rest);
  std::fill(spikes_.begin(), spikes_.end(), 0);
  std::fill(counts_.begin(), counts_.end(), 0);
  steps_ = 0;
}

std::span<const std::uint8_t> LsmRunner::step(std::span<const std::uint8_t> input_row) {
  const std::size_t h = cfg_->h;
  if (input_row.size() != cfg_->U) {
    throw Error("LSM input has " + std::to_string(input_row.size()) + " channels, expected " +
                std::to_string(cfg_->U));
  }
  std::fill(current_.begin(), current_.end(), 0.0);
  std::fill(rec_current_.begin(), rec_current_.end(), 0.0);
  for (std::size_t a = 0; a < input_row.size(); ++a) {
    if (!input_row[a]) continue;
    const auto w = w_in_t_.row(a);
    for (std::size_t i = 0; i < h; ++i) current_[i] += w[i];
  }
  // spikes_ still holds the previous step's output here.
  for (std::size_t b = 0; b < h; ++b) {
    if (!spikes_[b]) continue;
    const auto w = w_rec_t_.row(b);
    for (std::size_t i = 0; i < h; ++i) rec_current_[i] += w[i];
  }
  const LifParams& p = cfg_->params;
  for (std::size_t i = 0; i < h; ++i) {
    const double u = p.u_rest + p.decay * (u_[i] - p.u_rest) + (current_[i] + rec_current_[i]);
    if (u >= p.u_th) {
      spikes_[i] = 1;
      u_[i] = p.u_rest;
      ++counts_[i];
    } else {
      spikes_[i] = 0;
      u_[i] = u;
    }
  }
  ++steps_;
  return spikes_;
}

LsmOutput lsm_forward(const SpikeTensor& input, const LsmConfig& cfg, std::uint64_t trial_seed) {
  cfg.validate();
  if (input.channels() != cfg.U) {
    throw Error("lsm_forward: input has " + std::to_string(input.channels()) +
                " channels, reservoir expects " + std::to_string(cfg.U));
  }
  LsmRunner runner(cfg, trial_seed);
  LsmOutput out{SpikeTensor(input.steps(), cfg.h), {}};
  for (std::size_t t = 0; t < input.steps(); ++t) {
    const auto spikes = runner.step(input.row(t));
    std::copy(spikes.begin(), spikes.end(), out.raster.row(t).begin());
  }
  out.counts = SpikeCounts{runner.counts(), input.steps()};
  return out;
}

std::uint64_t layer_trial_seed(std::uint64_t trial_seed, std::size_t index) {
  return index == 0 ? trial_seed : derive_seed(trial_seed, 0x4C415952 /* LAYR */, index);
}

SpikeCounts wide_forward(const SpikeTensor& input, std::span<const LsmConfig> cfgs,
                         std::uint64_t trial_seed) {
  if (cfgs.empty()) throw Error("wide_forward: need at least one reservoir");
  for (const auto& c : cfgs) {
    if (c.U != cfgs.front().U) throw Error("wide_forward: reservoirs disagree on input dimension");
  }
  SpikeCounts out{{}, input.steps()};
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    const auto part = lsm_forward(input, cfgs[k], layer_trial_seed(trial_seed, k));
    out.o.insert(out.o.end(), part.counts.o.begin(), part.counts.o.end());
  }
  return out;
}

SpikeCounts deep_forward(const SpikeTensor& input, std::span<const LsmConfig> layers,
                         std::uint64_t trial_seed) {
  if (layers.empty()) throw Error("deep_forward: need at least one layer");
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k].U != layers[k - 1].h) {
      throw Error("deep_forward: layer " + std::to_string(k) + " expects " +
                  std::to_string(layers[k].U) + " inputs but layer " + std::to_string(k - 1) +
                  " has " + std::to_string(layers[k - 1].h) + " neurons");
    }
  }
  SpikeCounts out{{}, input.steps()};
  const SpikeTensor* current = &input;
  SpikeTensor previous;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto res = lsm_forward(*current, layers[k], layer_trial_seed(trial_seed, k));
    out.o.insert(out.o.end(), res.counts.o.begin(), res.counts.o.end());
    previous = std::move(res.raster);
    current = &previous;
  }
  return out;
}

}  // namespace lsmsim
