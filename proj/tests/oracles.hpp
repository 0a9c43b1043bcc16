// Independent reference implementations used only by tests. Nothing here
// calls into the code paths it checks.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "lsmsim/cost_model.hpp"
#include "lsmsim/events.hpp"
#include "lsmsim/lsm.hpp"
#include "lsmsim/matrix.hpp"
#include "lsmsim/rng.hpp"

namespace oracle {

/// Straight-line dense LSM: for every neuron and step, explicit sums over all
/// presynaptic indices with the binary spike as a multiplier.
struct DenseLsmResult {
  std::vector<std::vector<int>> raster;  // [t][i]
  std::vector<int> counts;
};

inline DenseLsmResult dense_lsm(const lsmsim::SpikeTensor& input, const lsmsim::Matrix& w_in,
                                const lsmsim::Matrix& w_rec, double beta, double u_th) {
  const std::size_t T = input.steps();
  const std::size_t U = input.channels();
  const std::size_t h = w_in.rows;
  DenseLsmResult r;
  r.raster.assign(T, std::vector<int>(h, 0));
  r.counts.assign(h, 0);
  std::vector<double> u(h, 0.0);
  std::vector<int> prev(h, 0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < h; ++i) {
      double in_sum = 0.0;
      for (std::size_t a = 0; a < U; ++a) in_sum += w_in(i, a) * static_cast<double>(input.at(t, a));
      double rec_sum = 0.0;
      for (std::size_t b = 0; b < h; ++b) rec_sum += w_rec(i, b) * static_cast<double>(prev[b]);
      const double v = beta * u[i] + (in_sum + rec_sum);
      if (v >= u_th) {
        r.raster[t][i] = 1;
        u[i] = 0.0;
      } else {
        u[i] = v;
      }
    }
    for (std::size_t i = 0; i < h; ++i) {
      prev[i] = r.raster[t][i];
      r.counts[i] += r.raster[t][i];
    }
  }
  return r;
}

/// Central finite-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + eps;
    const double up = f(x);
    x[k] = keep - eps;
    const double down = f(x);
    x[k] = keep;
    g[k] = (up - down) / (2.0 * eps);
  }
  return g;
}

/// Relative error with an absolute floor so near-zero gradients compare sanely.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

/// Softmax cross-entropy computed the textbook way in long double.
inline double plain_xent(const std::vector<double>& z, std::size_t label) {
  long double total = 0.0L;
  for (double v : z) total += std::exp(static_cast<long double>(v));
  return static_cast<double>(-(static_cast<long double>(z[label]) - std::log(total)));
}

/// Symmetric contrastive loss from its definition, no shared helpers.
inline double plain_contrastive(const lsmsim::Matrix& v, const lsmsim::Matrix& a, double tau) {
  const std::size_t n = v.rows;
  auto cos = [&](std::size_t i, std::size_t j) {
    long double d = 0, nv = 0, na = 0;
    for (std::size_t k = 0; k < v.cols; ++k) {
      d += static_cast<long double>(v(i, k)) * a(j, k);
      nv += static_cast<long double>(v(i, k)) * v(i, k);
      na += static_cast<long double>(a(j, k)) * a(j, k);
    }
    return d / std::sqrt(nv * na);
  };
  long double rows = 0, cols = 0;
  for (std::size_t i = 0; i < n; ++i) {
    long double zr = 0, zc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      zr += std::exp(cos(i, j) / tau);
      zc += std::exp(cos(j, i) / tau);
    }
    rows += -(cos(i, i) / tau - std::log(zr));
    cols += -(cos(i, i) / tau - std::log(zc));
  }
  return static_cast<double>(0.5L * (rows + cols) / n);
}

/// Executes each layer of an architecture on random data while counting every
/// multiply-accumulate and bias addition actually performed, forward then
/// backward for trainable layers.
struct InstrumentedCounts {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
};

inline InstrumentedCounts run_instrumented(const lsmsim::Architecture& arch, std::uint64_t seed) {
  using lsmsim::LayerKind;
  lsmsim::Rng rng(seed);
  InstrumentedCounts c;
  // Forward.
  for (const auto& layer : arch.layers) {
    switch (layer.kind) {
      case LayerKind::dense:
        for (std::size_t app = 0; app < layer.applications; ++app) {
          std::vector<double> x(layer.in);
          for (auto& v : x) v = rng.uniform();
          for (std::size_t o = 0; o < layer.out; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < layer.in; ++i) {
              acc += rng.uniform() * x[i];
              ++c.forward;
            }
            acc += rng.uniform();  // bias
            ++c.forward;
            (void)acc;
          }
        }
        break;
      case LayerKind::lsm:
        for (std::size_t t = 0; t < layer.applications; ++t) {
          for (std::size_t i = 0; i < layer.out; ++i) {
            double acc = 0.0;
            for (std::size_t a = 0; a < layer.in; ++a) {
              acc += rng.uniform() * static_cast<double>(rng.bernoulli(0.3));
              ++c.forward;
            }
            for (std::size_t b = 0; b < layer.out; ++b) {
              acc += rng.uniform() * static_cast<double>(rng.bernoulli(0.3));
              ++c.forward;
            }
            (void)acc;
          }
        }
        break;
      default:
        break;
    }
  }
  // Backward, in reverse; the first trainable layer skips its input gradient.
  std::size_t first_trainable = arch.layers.size();
  for (std::size_t k = 0; k < arch.layers.size(); ++k) {
    if (arch.layers[k].trainable) {
      first_trainable = k;
      break;
    }
  }
  for (std::size_t k = arch.layers.size(); k-- > 0;) {
    const auto& layer = arch.layers[k];
    if (!layer.trainable || layer.kind != LayerKind::dense) continue;
    for (std::size_t app = 0; app < layer.applications; ++app) {
      std::vector<double> x(layer.in, 0.5), dy(layer.out, 0.25), dx(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        for (std::size_t i = 0; i < layer.in; ++i) {
          volatile double gw = dy[o] * x[i];  // weight gradient
          (void)gw;
          ++c.backward;
        }
        ++c.backward;  // bias gradient
      }
      if (k != first_trainable) {
        for (std::size_t i = 0; i < layer.in; ++i) {
          for (std::size_t o = 0; o < layer.out; ++o) {
            dx[i] += 0.1 * dy[o];
            ++c.backward;
          }
        }
      }
    }
  }
  return c;
}

}  // namespace oracle
