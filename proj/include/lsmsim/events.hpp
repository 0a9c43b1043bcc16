#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lsmsim/matrix.hpp"

namespace lsmsim {

struct Event {
  std::uint64_t t = 0;        // µs
  std::uint32_t channel = 0;
  std::int8_t polarity = 1;   // +1 or -1

  friend bool operator==(const Event&, const Event&) = default;
};

/// Sparse list of timestamped channel events.
struct EventStream {
  std::vector<Event> events;
  std::uint32_t num_channels = 0;
  std::uint64_t duration = 0;  // µs

  /// Throws lsmsim::Error if timestamps decrease, a channel is out of range,
  /// a polarity is not ±1 or the duration precedes the last event.
  void validate() const;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Dense binary T×U matrix; row t holds the spikes of time step t.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::size_t steps, std::size_t channels);

  std::size_t steps() const { return steps_; }
  std::size_t channels() const { return channels_; }

  std::uint8_t at(std::size_t t, std::size_t u) const { return data_[t * channels_ + u]; }
  void set(std::size_t t, std::size_t u, bool v = true) { data_[t * channels_ + u] = v ? 1 : 0; }

  std::span<const std::uint8_t> row(std::size_t t) const {
    return {data_.data() + t * channels_, channels_};
  }
  std::span<std::uint8_t> row(std::size_t t) { return {data_.data() + t * channels_, channels_}; }

  std::span<const std::uint8_t> raw() const { return data_; }

  std::size_t popcount() const;
  /// Spike count of every channel over the whole window.
  std::vector<std::uint32_t> channel_counts() const;

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Bins a stream into T uniform time steps. An event at time t lands in row
/// floor(t·T/duration), clamped to T−1. Several events in one cell OR to 1.
/// With merge_polarity == false the channel count doubles and negative events
/// go to channel c + num_channels.
SpikeTensor bin_events(const EventStream& stream, std::size_t steps, bool merge_polarity = true);

/// Rate coding: pixel (r, c) spikes with probability image(r, c) at every step,
/// written to channel r·W + c.
SpikeTensor rate_encode(const Matrix& image, std::size_t steps, std::uint64_t seed);

/// Delta modulator over one channel. Timestamps are sample indices and the
/// stream duration is the sample count.
EventStream threshold_encode(std::span<const double> signal, double delta);

/// Interprets each row as an H×W frame (row-major) and keeps the centred h×w
/// window starting at (floor((H−h)/2), floor((W−w)/2)).
SpikeTensor center_crop(const SpikeTensor& tensor, std::size_t H, std::size_t W, std::size_t h,
                        std::size_t w);

/// Flips every entry independently with probability p.
SpikeTensor inject_input_noise(const SpikeTensor& tensor, double p, std::uint64_t seed);

/// Inverse of bin_events for rasters: one positive event per set cell, with the
/// step index as timestamp and duration T.
EventStream raster_to_events(const SpikeTensor& tensor);

}  // namespace lsmsim
