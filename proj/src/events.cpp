#include "lsmsim/events.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"

namespace lsmsim {

void EventStream::validate() const {
  std::uint64_t last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.t < last) throw Error("event " + std::to_string(i) + ": timestamps must be non-decreasing");
    if (e.channel >= num_channels) {
      throw Error("event " + std::to_string(i) + ": channel " + std::to_string(e.channel) +
                  " outside [0, " + std::to_string(num_channels) + ")");
    }
    if (e.polarity != 1 && e.polarity != -1) {
      throw Error("event " + std::to_string(i) + ": polarity must be +1 or -1");
    }
    last = e.t;
  }
  if (!events.empty() && duration < events.back().t) {
    throw Error("stream duration precedes its last event");
  }
}

SpikeTensor::SpikeTensor(std::size_t steps, std::size_t channels)
    : steps_(steps), channels_(channels), data_(steps * channels, 0) {
  if (steps == 0 || channels == 0) throw Error("spike tensor needs T >= 1 and U >= 1");
}

std::size_t SpikeTensor::popcount() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::vector<std::uint32_t> SpikeTensor::channel_counts() const {
  std::vector<std::uint32_t> counts(channels_, 0);
  for (std::size_t t = 0; t < steps_; ++t) {
    const auto r = row(t);
    for (std::size_t u = 0; u < channels_; ++u) counts[u] += r[u];
  }
  return counts;
}

SpikeTensor bin_events(const EventStream& stream, std::size_t steps, bool merge_polarity) {
  if (steps == 0) throw Error("bin_events: T must be >= 1");
  if (stream.duration == 0) throw Error("zero-duration stream");
  if (stream.num_channels == 0) throw Error("bin_events: stream has no channels");
  stream.validate();

  const std::size_t base = stream.num_channels;
  SpikeTensor out(steps, merge_polarity ? base : 2 * base);
  for (const Event& e : stream.events) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(e.t) * steps;
    const std::size_t bin =
        std::min<std::size_t>(static_cast<std::size_t>(scaled / stream.duration), steps - 1);
    std::size_t channel = e.channel;
    if (!merge_polarity && e.polarity < 0) channel += base;
    out.set(bin, channel);
  }
  return out;
}

SpikeTensor rate_encode(const Matrix& image, std::size_t steps, std::uint64_t seed) {
  for (double p : image.data) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("rate_encode: pixel value outside [0, 1]");
  }
  SpikeTensor out(steps, image.rows * image.cols);
  Rng rng(seed);
  for (std::size_t t = 0; t < steps; ++t) {
    auto r = out.row(t);
    for (std::size_t u = 0; u < image.data.size(); ++u) r[u] = rng.bernoulli(image.data[u]) ? 1 : 0;
  }
  return out;
}

EventStream threshold_encode(std::span<const double> signal, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error("threshold_encode: delta must be positive");
  if (signal.empty()) throw Error("threshold_encode: empty signal");
  for (std::size_t k = 0; k < signal.size(); ++k) {
    if (!std::isfinite(signal[k])) {
      throw Error("threshold_encode: non-finite sample at index " + std::to_string(k));
    }
  }

  EventStream stream;
  stream.num_channels = 1;
  stream.duration = signal.size();
  double reference = signal[0];
  for (std::size_t k = 1; k < signal.size(); ++k) {
    while (signal[k] - reference >= delta) {
      stream.events.push_back({k, 0, 1});
      reference += delta;
    }
    while (reference - signal[k] >= delta) {
      stream.events.push_back({k, 0, -1});
      reference -= delta;
    }
  }
  return stream;
}

SpikeTensor center_crop(const SpikeTensor& tensor, std::size_t H, std::size_t W, std::size_t h,
                        std::size_t w) {
  if (tensor.channels() != H * W) {
    throw Error("center_crop: tensor has " + std::to_string(tensor.channels()) +
                " channels, expected H*W = " + std::to_string(H * W));
  }
  if (h == 0 || w == 0 || h > H || w > W) throw Error("center_crop: crop must satisfy 1 <= h <= H, 1 <= w <= W");
  const std::size_t top = (H - h) / 2;
  const std::size_t left = (W - w) / 2;
  SpikeTensor out(tensor.steps(), h * w);
  for (std::size_t t = 0; t < tensor.steps(); ++t) {
    const auto src = tensor.row(t);
    auto dst = out.row(t);
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((top + y) * W + left), w,
                  dst.begin() + static_cast<std::ptrdiff_t>(y * w));
    }
  }
  return out;
}

SpikeTensor inject_input_noise(const SpikeTensor& tensor, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("inject_input_noise: p must lie in [0, 1]");
  SpikeTensor out = tensor;
  if (p == 0.0) return out;
  Rng rng(seed);
  for (std::size_t t = 0; t < out.steps(); ++t) {
    auto r = out.row(t);
    for (auto& v : r) {
      if (rng.bernoulli(p)) v ^= 1;
    }
  }
  return out;
}

EventStream raster_to_events(const SpikeTensor& tensor) {
  EventStream stream;
  stream.num_channels = static_cast<std::uint32_t>(tensor.channels());
  stream.duration = tensor.steps();
  for (std::size_t t = 0; t < tensor.steps(); ++t) {
    const auto r = tensor.row(t);
    for (std::size_t u = 0; u < r.size(); ++u) {
      if (r[u]) stream.events.push_back({t, static_cast<std::uint32_t>(u), 1});
    }
  }
  return stream;
}

}  // namespace lsmsim
