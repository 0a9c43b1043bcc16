#include "lsmsim/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"

namespace lsmsim {

void SyntheticTaskSpec::validate() const {
  if (num_classes < 2) throw Error("synthetic task needs at least 2 classes");
  if (channels == 0 || steps == 0) throw Error("synthetic task needs channels >= 1 and steps >= 1");
  if (templates.rows != num_classes || templates.cols != channels) {
    throw Error("synthetic templates must be " + std::to_string(num_classes) + "x" + std::to_string(channels));
  }
  for (double r : templates.data)
    if (!(r >= 0.0 && r <= 1.0)) throw Error("synthetic template rate outside [0, 1]");
}

SyntheticData gen_synthetic(const SyntheticTaskSpec& spec) {
  spec.validate();
  SyntheticData out;
  for (std::size_t a = 0; a < spec.num_classes; ++a) {
    for (std::size_t b = a + 1; b < spec.num_classes; ++b) {
      if (std::ranges::equal(spec.templates.row(a), spec.templates.row(b))) {
        out.warnings.push_back("classes " + std::to_string(a) + " and " + std::to_string(b) +
                               " have identical templates");
      }
    }
  }
  std::size_t index = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    Matrix image(1, spec.channels);
    std::ranges::copy(spec.templates.row(c), image.data.begin());
    for (std::size_t n = 0; n < spec.samples_per_class; ++n, ++index) {
      out.samples.push_back({rate_encode(image, spec.steps, derive_seed(spec.seed, index)), c});
    }
  }
  return out;
}

Matrix rate_templates(std::size_t classes, std::size_t channels, double active_fraction, double low,
                      double high, std::uint64_t seed) {
  Matrix t(classes, channels);
  std::fill(t.data.begin(), t.data.end(), low);
  const auto active = static_cast<std::size_t>(std::llround(active_fraction * static_cast<double>(channels)));
  Rng rng(seed);
  std::vector<std::size_t> idx(channels);
  for (std::size_t c = 0; c < classes; ++c) {
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < std::min(active, channels); ++k) t(c, idx[k]) = high;
  }
  return t;
}

void TemporalTaskSpec::validate() const {
  if (num_classes < 2) throw Error("temporal task needs at least 2 classes");
  if (groups < 2 || groups > channels || groups > steps) {
    throw Error("temporal task needs 2 <= groups <= min(channels, steps)");
  }
  std::size_t perms = 1;
  for (std::size_t k = 2; k <= groups && perms < num_classes; ++k) perms *= k;
  if (perms < num_classes) {
    throw Error("temporal task: " + std::to_string(groups) + " groups give fewer than " +
                std::to_string(num_classes) + " distinct orders");
  }
  if (!(low >= 0.0 && low <= 1.0 && high >= 0.0 && high <= 1.0)) throw Error("temporal task rates outside [0, 1]");
}

std::vector<std::vector<std::size_t>> temporal_orders(const TemporalTaskSpec& spec) {
  spec.validate();
  Rng rng(spec.order_seed);
  std::set<std::vector<std::size_t>> used;
  std::vector<std::vector<std::size_t>> orders;
  while (orders.size() < spec.num_classes) {
    std::vector<std::size_t> perm(spec.groups);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    if (used.insert(perm).second) orders.push_back(perm);
  }
  return orders;
}

Matrix temporal_rates(const TemporalTaskSpec& spec, const std::vector<std::size_t>& order) {
  Matrix r(spec.steps, spec.channels);
  for (std::size_t t = 0; t < spec.steps; ++t) {
    const std::size_t segment = t * spec.groups / spec.steps;
    const std::size_t group = order[segment];
    for (std::size_t c = 0; c < spec.channels; ++c) {
      r(t, c) = c * spec.groups / spec.channels == group ? spec.high : spec.low;
    }
  }
  return r;
}

SyntheticData gen_temporal(const TemporalTaskSpec& spec) {
  const auto orders = temporal_orders(spec);
  SyntheticData out;
  std::size_t index = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const Matrix rates = temporal_rates(spec, orders[c]);
    for (std::size_t n = 0; n < spec.samples_per_class; ++n, ++index) {
      Rng rng(derive_seed(spec.seed, index));
      SpikeTensor x(spec.steps, spec.channels);
      for (std::size_t t = 0; t < spec.steps; ++t)
        for (std::size_t u = 0; u < spec.channels; ++u) x.set(t, u, rng.bernoulli(rates(t, u)));
      out.samples.push_back({std::move(x), c});
    }
  }
  return out;
}

void PairedTaskSpec::validate() const {
  if (num_classes < 2) throw Error("paired task needs at least 2 classes");
  if (latent == 0 || vision_channels == 0 || audio_channels == 0 || steps == 0) {
    throw Error("paired task dimensions must be >= 1");
  }
  if (!(low >= 0.0 && low <= 1.0 && high >= 0.0 && high <= 1.0)) throw Error("paired task rates outside [0, 1]");
  if (!(jitter >= 0.0)) throw Error("paired task jitter must be >= 0");
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double sd, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.normal(0.0, sd);
  return m;
}

SpikeTensor encode_modality(const Matrix& mix, const std::vector<double>& z, const PairedTaskSpec& spec,
                            std::uint64_t seed) {
  Matrix rates(1, mix.rows);
  for (std::size_t k = 0; k < mix.rows; ++k) {
    double a = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) a += mix(k, j) * z[j];
    rates(0, k) = spec.low + (spec.high - spec.low) / (1.0 + std::exp(-spec.gain * a));
  }
  return rate_encode(rates, spec.steps, seed);
}

}  // namespace

std::vector<PairedTensor> gen_paired(const PairedTaskSpec& spec, const std::vector<std::size_t>& classes,
                                     std::size_t per_class, std::uint64_t stream) {
  spec.validate();
  const Matrix centres = gaussian(spec.num_classes, spec.latent, 1.0, derive_seed(spec.seed, 0x43454E54));
  const double mix_sd = 1.0 / std::sqrt(static_cast<double>(spec.latent));
  const Matrix mix_v = gaussian(spec.vision_channels, spec.latent, mix_sd, derive_seed(spec.seed, 0x4D495856));
  const Matrix mix_a = gaussian(spec.audio_channels, spec.latent, mix_sd, derive_seed(spec.seed, 0x4D495841));
  std::vector<PairedTensor> out;
  for (std::size_t c : classes) {
    if (c >= spec.num_classes) throw Error("paired task has no class " + std::to_string(c));
    for (std::size_t n = 0; n < per_class; ++n) {
      const std::uint64_t s = derive_seed(spec.seed, stream, c * 1000003 + n);
      Rng rng(s);
      std::vector<double> z(spec.latent);
      for (std::size_t j = 0; j < spec.latent; ++j) z[j] = centres(c, j) + rng.normal(0.0, spec.jitter);
      out.push_back({encode_modality(mix_v, z, spec, derive_seed(s, 1)),
                     encode_modality(mix_a, z, spec, derive_seed(s, 2)), c});
    }
  }
  return out;
}

}  // namespace lsmsim
