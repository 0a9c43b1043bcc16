#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lsmsim/events.hpp"
#include "lsmsim/matrix.hpp"

namespace lsmsim {

struct LabeledTensor {
  SpikeTensor x;
  std::size_t label = 0;
};

/// Rate-coded classes: row c of `templates` holds the per-step spike
/// probability of every channel for class c.
struct SyntheticTaskSpec {
  std::size_t num_classes = 2;
  std::size_t channels = 16;
  std::size_t steps = 20;
  Matrix templates;  // num_classes × channels, entries in [0, 1]
  std::size_t samples_per_class = 10;
  std::uint64_t seed = 0;
  void validate() const;
};

struct SyntheticData {
  std::vector<LabeledTensor> samples;  // class-major order
  std::vector<std::string> warnings;
};

/// Samples are rate encoded from their class template with seed
/// derive_seed(spec.seed, sample index). Identical templates are reported as a
/// warning, not an error.
SyntheticData gen_synthetic(const SyntheticTaskSpec& spec);

/// Templates with `low` everywhere except round(active_fraction·channels)
/// channels per class, drawn at random, that fire with probability `high`.
Matrix rate_templates(std::size_t classes, std::size_t channels, double active_fraction, double low,
                      double high, std::uint64_t seed);

/// Order-sensitive task. Channels are split into `groups` equal groups and the
/// window into `groups` equal segments; in each segment one group fires at
/// `high` and the rest at `low`. A class is an ordering of the groups, so every
/// class has the same expected count on every channel and only the order in
/// which the groups fire tells classes apart.
struct TemporalTaskSpec {
  std::size_t num_classes = 3;
  std::size_t channels = 24;
  std::size_t steps = 30;
  std::size_t groups = 3;
  double low = 0.02;
  double high = 0.4;
  std::size_t samples_per_class = 10;
  std::uint64_t order_seed = 0;  // fixes the class orders
  std::uint64_t seed = 0;        // sample draws
  void validate() const;
};

/// The group order of every class; distinct, drawn from spec.order_seed.
std::vector<std::vector<std::size_t>> temporal_orders(const TemporalTaskSpec& spec);
/// Expected spike probability of every (step, channel) cell for one class.
Matrix temporal_rates(const TemporalTaskSpec& spec, const std::vector<std::size_t>& order);
SyntheticData gen_temporal(const TemporalTaskSpec& spec);

/// Two modalities driven by one latent code per class. Class c has centre
/// z_c ~ N(0, I_latent); a sample draws z = z_c + jitter·N(0, I) and each
/// modality fires channel k at rate low + (high − low)·sigmoid(gain·(M z)_k)
/// with its own fixed Gaussian mixing matrix M.
struct PairedTaskSpec {
  std::size_t num_classes = 7;
  std::size_t latent = 4;
  std::size_t vision_channels = 32;
  std::size_t audio_channels = 24;
  std::size_t steps = 30;
  double low = 0.02;
  double high = 0.4;
  double gain = 1.5;
  double jitter = 0.3;
  std::uint64_t seed = 0;
  void validate() const;
};

struct PairedTensor {
  SpikeTensor vision;
  SpikeTensor audio;
  std::size_t label = 0;
};

/// `per_class` pairs of every listed class. `stream` separates draws of one
/// task (e.g. train and test) while keeping the class centres and mixing fixed.
std::vector<PairedTensor> gen_paired(const PairedTaskSpec& spec, const std::vector<std::size_t>& classes,
                                     std::size_t per_class, std::uint64_t stream);

}  // namespace lsmsim
