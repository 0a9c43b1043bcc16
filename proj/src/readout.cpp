#include "lsmsim/readout.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"

namespace lsmsim {

LinearLayer LinearLayer::zeros(std::size_t out, std::size_t in) {
  return LinearLayer{Matrix(out, in), std::vector<double>(out, 0.0)};
}

LinearLayer LinearLayer::random(std::size_t out, std::size_t in, std::uint64_t seed) {
  LinearLayer layer = zeros(out, in);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1)));
  for (double& w : layer.W.data) w = (2.0 * rng.uniform() - 1.0) * bound;
  return layer;
}

std::vector<double> linear_forward(std::span<const double> x, const LinearLayer& layer) {
  if (x.size() != layer.in_dim() || layer.b.size() != layer.out_dim()) {
    throw Error("linear_forward: input has " + std::to_string(x.size()) + " features, layer expects " +
                std::to_string(layer.in_dim()));
  }
  std::vector<double> y(layer.out_dim());
  for (std::size_t o = 0; o < y.size(); ++o) {
    const auto w = layer.W.row(o);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
    y[o] = acc + layer.b[o];
  }
  return y;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

XentResult softmax_xent(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw Error("softmax_xent: label " + std::to_string(label) + " outside " +
                std::to_string(logits.size()) + " classes");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - top);
  const double log_total = std::log(total);
  XentResult r;
  r.loss = -(logits[label] - top - log_total);
  r.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) r.grad[i] = std::exp(logits[i] - top - log_total);
  r.grad[label] -= 1.0;
  return r;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "momentum") return Optimizer::momentum;
  throw Error("unknown optimizer '" + std::string(name) + "' (expected sgd or momentum)");
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error("learning rate must be a finite value >= 0");
  if (epochs == 0) throw Error("epochs must be >= 1");
  if (batch_size == 0) throw Error("batch size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("momentum must lie in [0, 1)");
}

TrainResult train_supervised(std::span<const Sample> data, const TrainConfig& cfg, LinearLayer init) {
  cfg.validate();
  if (data.empty()) throw Error("train_supervised: empty dataset");
  const std::size_t in = init.in_dim();
  const std::size_t out = init.out_dim();
  for (const Sample& s : data) {
    if (s.x.size() != in) throw Error("train_supervised: inconsistent feature dimensions");
    if (s.label >= out) throw Error("train_supervised: label " + std::to_string(s.label) + " >= class count");
  }

  TrainResult result{std::move(init), {}};
  LinearLayer& model = result.model;
  Matrix grad_w(out, in);
  std::vector<double> grad_b(out);
  Matrix vel_w(out, in);
  std::vector<double> vel_b(out, 0.0);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, 0x53485546 /* SHUF */));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad_w.data.begin(), grad_w.data.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const Sample& s = data[order[k]];
        const auto xent = softmax_xent(linear_forward(s.x, model), s.label);
        epoch_loss += xent.loss;
        for (std::size_t o = 0; o < out; ++o) {
          const double g = xent.grad[o];
          if (g == 0.0) continue;
          auto row = grad_w.row(o);
          for (std::size_t i = 0; i < in; ++i) row[i] += g * s.x[i];
          grad_b[o] += g;
        }
      }
      const double scale = cfg.lr / static_cast<double>(stop - start);
      if (cfg.optimizer == Optimizer::momentum) {
        for (std::size_t k = 0; k < grad_w.data.size(); ++k) {
          vel_w.data[k] = cfg.momentum * vel_w.data[k] + grad_w.data[k];
          model.W.data[k] -= scale * vel_w.data[k];
        }
        for (std::size_t o = 0; o < out; ++o) {
          vel_b[o] = cfg.momentum * vel_b[o] + grad_b[o];
          model.b[o] -= scale * vel_b[o];
        }
      } else {
        for (std::size_t k = 0; k < grad_w.data.size(); ++k) model.W.data[k] -= scale * grad_w.data[k];
        for (std::size_t o = 0; o < out; ++o) model.b[o] -= scale * grad_b[o];
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

TrainResult train_supervised(std::span<const Sample> data, const TrainConfig& cfg,
                             std::size_t num_classes) {
  if (data.empty()) throw Error("train_supervised: empty dataset");
  if (num_classes == 0) {
    for (const Sample& s : data) num_classes = std::max(num_classes, s.label + 1);
  }
  return train_supervised(
      data, cfg, LinearLayer::random(num_classes, data.front().x.size(), derive_seed(cfg.seed, 0x494E4954)));
}

std::size_t predict(const LinearLayer& model, std::span<const double> x) {
  return argmax(linear_forward(x, model));
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::array();
  for (double a : per_class_accuracy) {
    per_class.push_back(std::isnan(a) ? nlohmann::json(nullptr) : nlohmann::json(a));
  }
  return {{"accuracy", accuracy}, {"confusion", confusion}, {"per_class_accuracy", per_class}};
}

EvalReport tally(std::span<const std::size_t> truths, std::span<const std::size_t> predictions,
                 std::size_t num_classes) {
  if (truths.size() != predictions.size()) throw Error("tally: truth/prediction count mismatch");
  if (truths.empty()) throw Error("evaluate: empty dataset");
  EvalReport r;
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    if (truths[k] >= num_classes || predictions[k] >= num_classes) {
      throw Error("evaluate: label outside the model's class range");
    }
    ++r.confusion[truths[k]][predictions[k]];
    correct += truths[k] == predictions[k];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truths.size());
  r.per_class_accuracy.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto total = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    r.per_class_accuracy[c] = total == 0 ? std::nan("")
                                         : static_cast<double>(r.confusion[c][c]) / static_cast<double>(total);
  }
  return r;
}

EvalReport evaluate(const LinearLayer& model, std::span<const Sample> data) {
  std::vector<std::size_t> truths;
  std::vector<std::size_t> preds;
  truths.reserve(data.size());
  preds.reserve(data.size());
  for (const Sample& s : data) {
    truths.push_back(s.label);
    preds.push_back(predict(model, s.x));
  }
  return tally(truths, preds, model.out_dim());
}

EarlyExitResult early_exit_infer(const SpikeTensor& input, const LsmConfig& cfg,
                                 std::uint64_t trial_seed, const LinearLayer& model,
                                 double conf_th) {
  if (std::isnan(conf_th) || conf_th < 0.0) throw Error("early_exit_infer: confidence threshold must be >= 0");
  if (input.channels() != cfg.U) throw Error("early_exit_infer: input dimension mismatch");
  if (input.steps() == 0) throw Error("early_exit_infer: empty input window");
  LsmRunner runner(cfg, trial_seed);
  const std::size_t T = input.steps();
  for (std::size_t t = 0; t < T; ++t) {
    runner.step(input.row(t));
    if (conf_th > 1.0 && t + 1 < T) continue;
    const auto logits = linear_forward(SpikeCounts{runner.counts(), T}.normalized(), model);
    if (t + 1 == T) return {argmax(logits), T};
    const auto p = softmax(logits);
    if (*std::max_element(p.begin(), p.end()) >= conf_th) return {argmax(logits), t + 1};
  }
  return {0, 0};
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v, std::size_t bytes) {
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < bytes; ++i) {
    b[i] = static_cast<char>(v & 0xFF);
    v >>= 8;
  }
  out.write(b.data(), static_cast<std::streamsize>(bytes));
}

std::uint64_t get_u64(std::istream& in, std::size_t bytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = bytes; i-- > 0;) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const LinearLayer& layer) {
  put_u64(out, kCheckpointMagic, 4);
  put_u64(out, layer.out_dim(), 4);
  put_u64(out, layer.in_dim(), 4);
  for (double w : layer.W.data) put_u64(out, std::bit_cast<std::uint64_t>(w), 8);
  for (double b : layer.b) put_u64(out, std::bit_cast<std::uint64_t>(b), 8);
}

LinearLayer read_checkpoint(std::istream& in) {
  if (get_u64(in, 4) != kCheckpointMagic) throw DataError("checkpoint: bad magic");
  const auto out = static_cast<std::size_t>(get_u64(in, 4));
  const auto inputs = static_cast<std::size_t>(get_u64(in, 4));
  LinearLayer layer = LinearLayer::zeros(out, inputs);
  for (double& w : layer.W.data) w = std::bit_cast<double>(get_u64(in, 8));
  for (double& b : layer.b) b = std::bit_cast<double>(get_u64(in, 8));
  return layer;
}

void save_checkpoint(const std::filesystem::path& path, const LinearLayer& layer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_checkpoint(out, layer);
}

LinearLayer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace lsmsim
